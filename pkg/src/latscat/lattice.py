"""Potentials and the whole-line operator algebra.

Index conventions
-----------------
Whole-line sequences are maps from signed integers.  The half-line Jacobi
matrix indexes its diagonal from 1, so a half-line potential is simply a
Potential with support_lo >= 1; no other offset is involved.

Shifts act as (L f)_n = f_{n+1} and (R f)_n = f_{n-1}, so L = R^{-1} = R^T.
The diagonal symbol field is lambda_n = lambda_site(z, v_n) and the
difference field is omega_j = lambda_{j+1} - lambda_j, supported near the
potential support only.

The shift resolvents (L - Lambda)^{-1} and (R - Lambda)^{-1} are applied by
first-order recursions picking the decaying solution.  Outside the
potential window everything is geometric in lambda_tilde, so sequences are
represented on a finite window plus optional exact geometric tails; no
truncation tolerance enters anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import SupportOverflowError
from .spectral import lambda_site


@dataclass(frozen=True)
class Potential:
    """Finite-support real sequence over lattice sites (zero outside)."""

    support_lo: int
    values: np.ndarray
    family: str = ""

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def support_hi(self) -> int:
        return self.support_lo + len(self.values) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.values) == 0 or bool(np.all(self.values == 0.0))

    def value(self, n: int) -> float:
        if self.support_lo <= n <= self.support_hi:
            return float(self.values[n - self.support_lo])
        return 0.0

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def delta_norm2(self, step: int = 1) -> float:
        """l2 norm of v_{n+step} - v_n over the whole line (edges included)."""
        padded = np.concatenate([np.zeros(step), self.values, np.zeros(step)])
        return float(np.sqrt(np.sum((padded[step:] - padded[:-step]) ** 2)))

    def truncated(self, n_max: int) -> "Potential":
        """Keep sites strictly below n_max (the tail cut used for scattering)."""
        if self.support_hi < n_max:
            return self
        keep = max(0, n_max - self.support_lo)
        return Potential(self.support_lo, self.values[:keep], self.family)

    def to_json(self) -> str:
        return json.dumps(
            {
                "support_lo": self.support_lo,
                "values": [float(x) for x in self.values],
                "family": self.family,
            }
        )

    @staticmethod
    def from_json(text: str) -> "Potential":
        doc = json.loads(text)
        return Potential(
            support_lo=int(doc["support_lo"]),
            values=np.asarray(doc["values"], dtype=np.float64),
            family=str(doc.get("family", "")),
        )


@dataclass(frozen=True)
class DiagonalField:
    """Per-site symbol values lambda_n(z) and the difference field omega."""

    z: complex
    lam_tilde: complex
    window_lo: int          # sites with stored (possibly non-free) lambda values
    window_hi: int
    lam: np.ndarray
    omega_support: tuple
    omega: dict

    def lam_at(self, n: int) -> complex:
        if self.window_lo <= n <= self.window_hi:
            return complex(self.lam[n - self.window_lo])
        return self.lam_tilde

    def omega_at(self, n: int) -> complex:
        return self.omega.get(n, 0.0 + 0.0j)


def build_field(v: Potential, z: complex) -> DiagonalField:
    """Evaluate lambda_n = lambda_site(z, v_n) and omega_j = lambda_{j+1} - lambda_j.

    omega_support holds exactly the sites where adjacent lambdas differ;
    for v with constant plateaus only the plateau edges appear.
    """
    lt = lambda_site(z, 0.0)
    if v.is_zero and len(v.values) == 0:
        return DiagonalField(complex(z), lt, 0, -1, np.empty(0, np.complex128), (), {})
    lo, hi = v.support_lo, v.support_hi
    lam = np.array([lambda_site(z, v.value(n)) for n in range(lo, hi + 1)])
    fld = DiagonalField(complex(z), lt, lo, hi, lam, (), {})
    omega = {}
    for j in range(lo - 1, hi + 1):
        w = fld.lam_at(j + 1) - fld.lam_at(j)
        if w != 0:
            omega[j] = w
    support = tuple(sorted(omega))
    return DiagonalField(complex(z), lt, lo, hi, lam, support, omega)


class TailSeq:
    """Sequence with explicit values on [lo, hi] and exact geometric tails.

    When left_geo, f_n = vals[0] * lt^(lo - n) for n < lo; when right_geo,
    f_n = vals[-1] * lt^(n - hi) for n > hi; otherwise the tail is zero.
    Applying (L - Lambda)^{-1} to a right-geometric input (or the mirror
    case) would create a resonant n * lt^n tail, which no chain in this
    package ever consumes; those calls are rejected outright.
    """

    __slots__ = ("lo", "hi", "vals", "left_geo", "right_geo", "lt")

    def __init__(self, lo, hi, vals, left_geo, right_geo, lt):
        self.lo = lo
        self.hi = hi
        self.vals = np.asarray(vals, dtype=np.complex128)
        self.left_geo = left_geo
        self.right_geo = right_geo
        self.lt = lt

    @staticmethod
    def from_pairs(pairs, lt) -> "TailSeq":
        """Dense finite sequence from {site: value}; empty input allowed."""
        sites = sorted(pairs)
        if not sites:
            return TailSeq(0, -1, np.empty(0), False, False, lt)
        lo, hi = sites[0], sites[-1]
        vals = np.zeros(hi - lo + 1, dtype=np.complex128)
        for n, val in pairs.items():
            vals[n - lo] = val
        return TailSeq(lo, hi, vals, False, False, lt)

    def at(self, n: int) -> complex:
        if self.lo <= n <= self.hi:
            return complex(self.vals[n - self.lo])
        if self.hi < self.lo:
            return 0.0 + 0.0j
        if n < self.lo:
            return complex(self.vals[0] * self.lt ** (self.lo - n)) if self.left_geo else 0.0 + 0.0j
        return complex(self.vals[-1] * self.lt ** (n - self.hi)) if self.right_geo else 0.0 + 0.0j

    def window(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.at(n) for n in range(lo, hi + 1)])


def _field_span(fld: DiagonalField, seq: TailSeq) -> tuple[int, int]:
    if fld.window_hi < fld.window_lo:  # free field: no non-free sites
        return seq.lo, seq.hi
    return min(seq.lo, fld.window_lo), max(seq.hi, fld.window_hi)


def _check_contractive(fld: DiagonalField):
    if abs(fld.lam_tilde) >= 1.0:
        raise ValueError(
            "shift resolvents need |lambda_tilde| < 1 (Im z > 0); "
            f"got |lambda_tilde| = {abs(fld.lam_tilde):.6f}"
        )


def solve_L_seq(fld: DiagonalField, g: TailSeq) -> TailSeq:
    """Bounded solution of (L - Lambda) f = g, i.e. f_{n+1} - lambda_n f_n = g_n.

    f_{n+1} = sum_{k<=n} (prod_{j=k+1}^{n} lambda_j) g_k; the seed at the
    window bottom is the closed-form geometric sum of the input left tail.
    """
    _check_contractive(fld)
    if g.hi < g.lo:
        return g
    if g.right_geo:
        raise NotImplementedError("resonant tail: solve_L on a right-geometric input")
    lt = fld.lam_tilde
    lo, hi = _field_span(fld, g)
    wlo, whi = lo, hi + 1
    vals = np.zeros(whi - wlo + 1, dtype=np.complex128)
    if g.left_geo:
        vals[0] = g.vals[0] * lt ** (g.lo - wlo + 1) / (1.0 - lt * lt)
    for n in range(wlo, whi):
        vals[n - wlo + 1] = fld.lam_at(n) * vals[n - wlo] + g.at(n)
    return TailSeq(wlo, whi, vals, left_geo=g.left_geo, right_geo=True, lt=lt)


def solve_R_seq(fld: DiagonalField, g: TailSeq) -> TailSeq:
    """Bounded solution of (R - Lambda) f = g, i.e. f_{n-1} - lambda_n f_n = g_n.

    Mirror of solve_L_seq: f_{n-1} = sum_{k>=n} (prod_{j=n}^{k-1} lambda_j) g_k,
    seeded at the window top from the input right tail.
    """
    _check_contractive(fld)
    if g.hi < g.lo:
        return g
    if g.left_geo:
        raise NotImplementedError("resonant tail: solve_R on a left-geometric input")
    lt = fld.lam_tilde
    lo, hi = _field_span(fld, g)
    wlo, whi = lo - 1, hi
    vals = np.zeros(whi - wlo + 1, dtype=np.complex128)
    if g.right_geo:
        vals[-1] = g.vals[-1] * lt ** (whi + 1 - g.hi) / (1.0 - lt * lt)
    for n in range(whi, wlo, -1):
        vals[n - 1 - wlo] = fld.lam_at(n) * vals[n - wlo] + g.at(n)
    return TailSeq(wlo, whi, vals, left_geo=True, right_geo=g.right_geo, lt=lt)


def solve_L(fld: DiagonalField, g: dict, eval_at) -> np.ndarray:
    """(L - Lambda)^{-1} applied to a finitely supported g, sampled at eval_at."""
    seq = solve_L_seq(fld, TailSeq.from_pairs(g, fld.lam_tilde))
    return np.array([seq.at(n) for n in eval_at])


def solve_R(fld: DiagonalField, g: dict, eval_at) -> np.ndarray:
    """(R - Lambda)^{-1} applied to a finitely supported g, sampled at eval_at."""
    seq = solve_R_seq(fld, TailSeq.from_pairs(g, fld.lam_tilde))
    return np.array([seq.at(n) for n in eval_at])


@dataclass(frozen=True)
class CyclicSystem:
    """The m = 2n+1 dimensional cyclic model on span{e_-n, ..., e_n}.

    R and L are the cyclic right/left shifts (unitary permutations), the
    diagonal fields carry the wrap-around difference omega_n =
    lambda_{-n} - lambda_n, and K = L + R - Lambda - Lambda^{-1} encodes
    H - z through lambda + 1/lambda = z - v.
    """

    n: int
    z: complex
    lam_tilde: complex
    lam: np.ndarray
    L: np.ndarray
    R: np.ndarray
    Lam: np.ndarray
    Lam0: np.ndarray
    Om: np.ndarray
    K: np.ndarray
    K0: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def site_index(self, s: int) -> int:
        return s + self.n


def build_cyclic(v: Potential, z: complex, n: int) -> CyclicSystem:
    """Assemble the cyclic matrices for half-width n (sites -n..n)."""
    if len(v.values) and (v.support_lo < -n or v.support_hi > n):
        raise SupportOverflowError(
            f"potential support [{v.support_lo}, {v.support_hi}] does not fit in [-{n}, {n}]"
        )
    m = 2 * n + 1
    L = np.zeros((m, m), dtype=np.complex128)
    for s in range(-n, n + 1):
        s_next = s + 1 if s < n else -n
        L[s + n, s_next + n] = 1.0
    R = L.T.copy()
    lt = lambda_site(z, 0.0)
    lam = np.array([lambda_site(z, v.value(s)) for s in range(-n, n + 1)])
    omega = np.empty(m, dtype=np.complex128)
    omega[:-1] = lam[1:] - lam[:-1]
    omega[-1] = lam[0] - lam[-1]  # wrap term omega_n = lambda_{-n} - lambda_n
    Lam = np.diag(lam)
    Lam0 = lt * np.eye(m, dtype=np.complex128)
    Om = np.diag(omega)
    K = L + R - Lam - np.diag(1.0 / lam)
    K0 = L + R - (lt + 1.0 / lt) * np.eye(m, dtype=np.complex128)
    return CyclicSystem(
        n=n, z=complex(z), lam_tilde=lt, lam=lam, L=L, R=R, Lam=Lam, Lam0=Lam0,
        Om=Om, K=K, K0=K0,
    )
