"""The determinantal representation of the transmission coefficient.

Three layers:

* finite cyclic variants J1/J2/J3 of det K_n, all reducible to
  -det(L-Lam)det(R-Lam)/det(Lam) times trace-exponential and det2 factors;
* the whole-line regularized factor a_m built from resolvent chains over
  the (finite) support of the difference field Omega;
* the independent left-hand side det(I + G0 V) with the free lattice
  Green kernel G0(n, m) = k^|n-m| / (k - 1/k).

The square root of the det2 pair is taken by continuity along a vertical
path from Im z = 2 (where the product is near 1) down to the target.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import cxmat
from .errors import ConvergenceError, SingularMatrixError
from .lattice import CyclicSystem, DiagonalField, Potential, TailSeq, build_field, \
    solve_L_seq, solve_R_seq
from .spectral import lambda_site

#: vertical height where branch tracking starts (product ~ 1, principal branch)
BRANCH_TRACK_IM = 2.0
#: smallest tracking step before giving up on refinement
BRANCH_TRACK_MIN_STEP = 1e-4


@dataclass(frozen=True)
class DetFactors:
    """Factors of the determinant formula at one z.

    a_m = exp(trace_term / 2) * sqrt_branch_sign * sqrt(det2_plus * det2_minus)
    and product = wkb * a_m.
    """

    wkb: complex
    trace_term: complex
    det2_plus: complex
    det2_minus: complex
    sqrt_branch_sign: int
    a_m: complex
    product: complex


def free_green(z: complex, i: int, j: int) -> complex:
    """Free whole-line lattice kernel G0(i, j; z) = k^|i-j| / (k - 1/k).

    Derived from (H0 - z) G0 = I; tests pin the normalization by residual.
    """
    k = lambda_site(z, 0.0)
    return k ** abs(i - j) / (k - 1.0 / k)


def transmission_det(v: Potential, z: complex) -> complex:
    """det[(H - z)/(H0 - z)] as the finite determinant det(I + G0 V) over supp v."""
    if complex(z).imag <= 0:
        raise ValueError("transmission_det needs Im z > 0")
    if v.is_zero:
        return 1.0 + 0.0j
    k = lambda_site(z, 0.0)
    sites = range(v.support_lo, v.support_hi + 1)
    vv = np.array([v.value(s) for s in sites])
    g0 = np.array([[k ** abs(a - b) for b in sites] for a in sites]) / (k - 1.0 / k)
    return cxmat.lu_det(np.eye(len(vv)) + g0 * vv[None, :])


def wkb_product(v: Potential, z: complex) -> complex:
    """prod_j lambda_tilde(z) / lambda_j(z); factors are 1 off the support."""
    lt = lambda_site(z, 0.0)
    out = 1.0 + 0.0j
    for s in range(v.support_lo, v.support_hi + 1):
        out *= lt / lambda_site(z, v.value(s))
    return out


def _basis_seq(site: int, lt: complex) -> TailSeq:
    return TailSeq(site, site, np.array([1.0 + 0.0j]), False, False, lt)


def correction_matrices(fld: DiagonalField) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Finite sections of the correction operators over S = supp(Omega).

    A_plus  = Omega L (R-Lam)^{-1} (L-Lam)^{-1},
    A_minus = Omega L (L-Lam)^{-1} (R-Lam)^{-1}.

    Rows vanish off S because Omega multiplies from the left, so the
    infinite det2 arguments reduce exactly to these S x S blocks.
    """
    S = fld.omega_support
    size = len(S)
    a_plus = np.empty((size, size), dtype=np.complex128)
    a_minus = np.empty((size, size), dtype=np.complex128)
    for cj, j in enumerate(S):
        e = _basis_seq(j, fld.lam_tilde)
        col_p = solve_R_seq(fld, solve_L_seq(fld, e))
        col_m = solve_L_seq(fld, solve_R_seq(fld, e))
        for ci, i in enumerate(S):
            w = fld.omega[i]
            a_plus[ci, cj] = w * col_p.at(i + 1)
            a_minus[ci, cj] = w * col_m.at(i + 1)
    return a_plus, a_minus, S


def _apply_ro_plus_ol(fld: DiagonalField, u: TailSeq) -> TailSeq:
    """(R Omega + Omega L) u: finitely supported output on S union S+1."""
    S = fld.omega_support
    pairs = {}
    for i in S:
        pairs[i + 1] = pairs.get(i + 1, 0.0) + fld.omega[i] * u.at(i)   # R Omega
        pairs[i] = pairs.get(i, 0.0) + fld.omega[i] * u.at(i + 1)       # Omega L
    return TailSeq.from_pairs(pairs, fld.lam_tilde)


def trace_chain(fld: DiagonalField) -> complex:
    """tr[Omega L (L-Lam)^{-1}(R-Lam)^{-1}(R Omega + Omega L)(R-Lam)^{-1}(L-Lam)^{-1}].

    Evaluated operator by operator on basis vectors; equals
    tr A_plus - tr A_minus by the second resolvent identity (tests check both).
    """
    total = 0.0 + 0.0j
    for i in fld.omega_support:
        u = _basis_seq(i, fld.lam_tilde)
        u = solve_R_seq(fld, solve_L_seq(fld, u))
        u = _apply_ro_plus_ol(fld, u)
        u = solve_L_seq(fld, solve_R_seq(fld, u))
        total += fld.omega[i] * u.at(i + 1)
    return total


def _det2_pair(v: Potential, z: complex) -> tuple[complex, complex]:
    fld = build_field(v, z)
    a_plus, a_minus, _ = correction_matrices(fld)
    return cxmat.det2(a_plus), cxmat.det2(-a_minus)


def _winding_walk(stops: list, pair_at) -> dict:
    """Square-root signs of the det2 pair at every stop of a vertical walk.

    The winding of the product is accumulated from Im = BRANCH_TRACK_IM
    down through the (descending) stops.  Steps are velocity limited: each
    accepted step must turn the argument by at most pi/4, must pass a
    midpoint consistency check (half turns below pi/4, summing to the full
    turn, no deep dip of |product| at the midpoint), and the step size
    follows the measured turn so it contracts ahead of phase-velocity
    ramps.  A 2*pi loop can therefore not hide inside an accepted step.
    Each sign is the parity of the winding against the principal argument
    at its stop.
    """
    signs: dict = {}
    todo = [im for im in stops if im < BRANCH_TRACK_IM]
    for im in stops:
        if im >= BRANCH_TRACK_IM:
            signs[im] = 1
    if not todo:
        return signs
    span = BRANCH_TRACK_IM - todo[-1]

    def prod(im: float) -> complex:
        d2p, d2m = pair_at(im)
        return d2p * d2m

    quarter = math.pi / 4.0
    im = BRANCH_TRACK_IM
    d = prod(im)
    total_arg = cmath.phase(d)
    step = min(0.1, span / 6.0)
    max_step = min(0.4, span / 3.0)
    next_stop = 0
    while next_stop < len(todo):
        remaining = im - todo[next_stop]
        if step >= remaining:
            h = remaining
            im_next = todo[next_stop]  # land exactly on the stop
        else:
            h = step
            im_next = im - h
        d_next = prod(im_next)
        delta = cmath.phase(d_next / d)
        ok = abs(delta) <= quarter
        if ok and h > BRANCH_TRACK_MIN_STEP:
            im_mid = im - h / 2.0
            d_mid = prod(im_mid)
            d1 = cmath.phase(d_mid / d)
            d2 = cmath.phase(d_next / d_mid)
            ok = (abs(d1) <= quarter and abs(d2) <= quarter
                  and abs(d1 + d2 - delta) < 1e-6
                  and abs(d_mid) > 0.2 * min(abs(d), abs(d_next)))
        if not ok:
            if h <= BRANCH_TRACK_MIN_STEP:
                raise ConvergenceError(
                    "branch tracking failed: det2-pair argument turns too "
                    f"fast across {h:.2e} at Im z ~ {im:.4f}"
                )
            step = h / 2.0
            continue
        total_arg += delta
        im = im_next
        d = d_next
        growth = max(0.5, min(1.5, (math.pi / 8.0) / max(abs(delta), math.pi / 64.0)))
        step = min(h * growth, max_step)
        while next_stop < len(todo) and im <= todo[next_stop]:
            winding = round((total_arg - cmath.phase(d)) / (2.0 * math.pi))
            signs[todo[next_stop]] = 1 if winding % 2 == 0 else -1
            next_stop += 1
    return signs


def _pair_cache(v: Potential, x: float, seed: dict | None = None):
    cache = dict(seed) if seed else {}

    def pair_at(im: float):
        val = cache.get(im)
        if val is None:
            val = _det2_pair(v, complex(x, im))
            cache[im] = val
        return val

    return pair_at


def _track_sqrt_branch(v: Potential, z: complex, pair_at_z: tuple) -> int:
    """Sign of the continuous square root of det2_plus*det2_minus at z."""
    z = complex(z)
    pair_at = _pair_cache(v, z.real, {z.imag: pair_at_z})
    return _winding_walk([z.imag], pair_at)[z.imag]


def _assemble_factors(v: Potential, z: complex, d2p: complex, d2m: complex,
                      sign: int) -> DetFactors:
    wkb = wkb_product(v, z)
    fld = build_field(v, z)
    tr = trace_chain(fld)
    a_m = cmath.exp(tr / 2.0) * sign * cmath.sqrt(d2p * d2m)
    return DetFactors(
        wkb=wkb, trace_term=tr, det2_plus=d2p, det2_minus=d2m,
        sqrt_branch_sign=sign, a_m=a_m, product=wkb * a_m,
    )


def am_factor(v: Potential, z: complex) -> DetFactors:
    """Regularized scattering factor a_m(z) with its det2/trace pieces."""
    if complex(z).imag <= 0:
        raise ValueError("am_factor needs Im z > 0")
    if not build_field(v, z).omega_support:
        wkb = wkb_product(v, z)
        return DetFactors(wkb, 0.0j, 1.0 + 0.0j, 1.0 + 0.0j, 1, 1.0 + 0.0j, wkb)
    d2p, d2m = _det2_pair(v, z)
    sign = _track_sqrt_branch(v, z, (d2p, d2m))
    return _assemble_factors(v, z, d2p, d2m, sign)


def am_factor_column(v: Potential, x: float, im_values) -> list:
    """am_factor at every point of one vertical grid column x + i*im.

    The square-root branch is tracked along a single descent that visits
    each requested height, so a column of n points costs one walk instead
    of n (the walk dominates on fine grids).  Returns DetFactors in the
    order of im_values.
    """
    ims = [float(y) for y in im_values]
    if any(y <= 0 for y in ims):
        raise ValueError("am_factor_column needs Im z > 0")
    zero_omega = not build_field(v, complex(x, ims[0])).omega_support
    if zero_omega:
        return [am_factor(v, complex(x, y)) for y in ims]
    pair_at = _pair_cache(v, x)
    stops = sorted(set(ims), reverse=True)
    signs = _winding_walk(stops, pair_at)
    out = []
    for y in ims:
        d2p, d2m = pair_at(y)
        out.append(_assemble_factors(v, complex(x, y), d2p, d2m, signs[y]))
    return out


def detformula_rhs(v: Potential, z: complex) -> DetFactors:
    """Right-hand side of the full determinant formula: WKB * a_m."""
    return am_factor(v, z)


def _cyclic_common(sys: CyclicSystem) -> complex:
    det_l = cxmat.lu_det(sys.L - sys.Lam)
    det_r = cxmat.lu_det(sys.R - sys.Lam)
    det_lam = complex(np.prod(sys.lam))
    return -det_l * det_r / det_lam


def _cyclic_inv(sys: CyclicSystem, m: np.ndarray) -> np.ndarray:
    try:
        return cxmat.lu_solve(m, np.eye(sys.dim, dtype=np.complex128))
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"cyclic resolvent singular at n={sys.n}: Im z likely too small "
            f"for this dimension ({exc})"
        ) from exc


def cyclic_factors(sys: CyclicSystem, middle_rewrite: bool = False) -> dict:
    """All pieces shared by the J1/J2/J3 variants.

    With middle_rewrite the (L-Lam)(R-Lam) product entering the J1 trace is
    assembled through the cyclic-identity form
    (R-Lam)(L-Lam) - R Omega - Omega L instead (the two must agree).
    """
    lm = sys.L - sys.Lam
    rm = sys.R - sys.Lam
    m_plus = lm @ rm
    if middle_rewrite:
        m_plus = rm @ lm - sys.R @ sys.Om - sys.Om @ sys.L
    m_minus = rm @ lm
    a_plus = sys.Om @ sys.L @ _cyclic_inv(sys, m_plus)
    a_minus = -sys.Om @ sys.L @ _cyclic_inv(sys, m_minus)
    return {
        "common": _cyclic_common(sys),
        "tr_plus": complex(np.trace(a_plus)),
        "tr_minus": complex(np.trace(a_minus)),
        "det2_plus": cxmat.det2(a_plus),
        "det2_minus": cxmat.det2(a_minus),
    }


def cyclic_det_variant(sys: CyclicSystem, variant: str, middle_rewrite: bool = False) -> complex:
    """Evaluate the J1, J2 or J3 right-hand side for det K_n.

    J3's square root branch is fixed by matching J1 (both must agree with
    det K_n; the match also pins the sign of the det2-pair square root).
    """
    f = cyclic_factors(sys, middle_rewrite=middle_rewrite)
    common = f["common"]
    if variant == "J1":
        return common * cmath.exp(f["tr_plus"]) * f["det2_plus"]
    if variant == "J2":
        return common * cmath.exp(f["tr_minus"]) * f["det2_minus"]
    if variant == "J3":
        j1 = common * cmath.exp(f["tr_plus"]) * f["det2_plus"]
        root = cmath.sqrt(f["det2_plus"] * f["det2_minus"])
        half = common * cmath.exp((f["tr_plus"] + f["tr_minus"]) / 2.0)
        return half * root if abs(half * root - j1) <= abs(half * root + j1) else -half * root
    raise ValueError(f"unknown variant {variant!r}; expected J1, J2 or J3")


def cyclic_am(sys: CyclicSystem) -> complex:
    """Finite-n analog of a_m: the trace-exponential and det2 pair of J3.

    The square-root sign is matched against the exact det K_n / common ratio,
    mirroring how J3 matches J1.
    """
    f = cyclic_factors(sys)
    half = cmath.exp((f["tr_plus"] + f["tr_minus"]) / 2.0)
    root = cmath.sqrt(f["det2_plus"] * f["det2_minus"])
    target = cxmat.lu_det(sys.K) / f["common"]
    return half * root if abs(half * root - target) <= abs(half * root + target) else -half * root


def cyclic_ratio(sys: CyclicSystem) -> complex:
    """det[K_n / K_n^0] computed through log-determinants (overflow safe)."""
    lk, ak = cxmat.lu_logdet(sys.K)
    lk0, ak0 = cxmat.lu_logdet(sys.K0)
    return cmath.exp(complex(lk - lk0, ak - ak0))
