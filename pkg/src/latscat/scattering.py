"""Jost solutions, scattering coefficients, the m-function, and spectral
density / entropy integrals.

Half-line conventions: the Jacobi matrix J has diagonal v_1, v_2, ... and
unit off-diagonals.  The Jost solution for a potential supported in [1, N]
solves psi_{n+1} + v_n psi_n + psi_{n-1} = z psi_n with psi_n = k^n for
n > N; running the recursion backward down to n = -2 exposes the free
region where psi_n = a k^n + b k^{-n}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BandEdgeError, ConvergenceError
from .lattice import Potential
from .spectral import lambda_site

#: density normalization of the Jost factorization rho' = C sqrt(4-z^2)/|x_0|^2.
#: Free-case calibration against the truncation eigenvalue oracle fixes
#: C = 1/(2 pi); see calibrate_density_normalization.
DENSITY_NORMALIZATION = 1.0 / (2.0 * math.pi)

#: near-axis offset used when a band evaluation needs Im z > 0
BAND_OFFSET = 1e-4


@dataclass(frozen=True)
class JostSolution:
    """Backward-recursion solution with psi_n = k^n enforced for n > N.

    Values are stored as psi_n = mant[n+2] * exp(glog[n+2]) with a real
    staircase glog, so very long runs at |k| < 1 neither under- nor
    overflow.  ``psi`` may still overflow when the true value does.
    """

    z: complex
    k: complex
    n_trunc: int
    mant: np.ndarray
    glog: np.ndarray

    def psi(self, n: int) -> complex:
        i = n + 2
        return complex(self.mant[i] * math.exp(self.glog[i]))

    def log_abs_psi(self, n: int) -> float:
        i = n + 2
        return float(np.log(np.abs(self.mant[i])) + self.glog[i])

    def residual(self, v: Potential) -> float:
        """Max three-term recursion residual relative to the local scale."""
        worst = 0.0
        for n in range(-1, self.n_trunc + 2):
            i = n + 2
            g = max(self.glog[i - 1], self.glog[i], self.glog[i + 1])
            up = self.mant[i + 1] * math.exp(self.glog[i + 1] - g)
            mid = self.mant[i] * math.exp(self.glog[i] - g)
            dn = self.mant[i - 1] * math.exp(self.glog[i - 1] - g)
            res = abs(up + (v.value(n) - self.z) * mid + dn)
            scale = max(1.0, abs(up), abs(mid), abs(dn))
            worst = max(worst, res / scale)
        return worst


@dataclass(frozen=True)
class ScatteringRecord:
    """Jost-matching coefficients at one energy; route tags the computation."""

    a: complex
    b: complex | None
    z: complex
    route: str


@dataclass(frozen=True)
class DensitySamples:
    grid: np.ndarray
    rho_prime: np.ndarray
    n_trunc: int
    normalization_constant: float


def _k_of(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0.0 and abs(z.real) == 2.0:
        raise BandEdgeError("z is a band edge")
    return lambda_site(z, 0.0)


def jost_solve(v: Potential, z: complex, n_trunc: int | None = None) -> JostSolution:
    """Solve backward from psi_N = k^N, psi_{N+1} = k^{N+1} down to n = -2."""
    if len(v.values) and v.support_lo < 1:
        raise ValueError("jost_solve expects a half-line potential (support_lo >= 1)")
    if n_trunc is None:
        n_trunc = max(v.support_hi, 1) if len(v.values) else 1
    if len(v.values) and v.support_hi > n_trunc:
        raise ValueError(f"potential extends past the truncation index {n_trunc}")
    k = _k_of(z)
    varr = np.zeros(n_trunc, dtype=np.float64)
    for s in range(v.support_lo, v.support_hi + 1) if len(v.values) else ():
        varr[s - 1] = v.value(s)
    mant, glog = _kernels.jost_backward(varr, complex(z), k, n_trunc)
    return JostSolution(z=complex(z), k=k, n_trunc=n_trunc, mant=mant, glog=glog)


def extract_ab(sol: JostSolution) -> ScatteringRecord:
    """Match psi_n = a k^n + b k^{-n} on the free region using n = -1, -2."""
    k = sol.k
    if abs(k * k - 1.0) < 1e-12:
        raise BandEdgeError("k = +-1: the matching system is degenerate")
    g1, g2 = sol.glog[1], sol.glog[0]
    psi_m1 = sol.mant[1]
    psi_m2 = sol.mant[0] * math.exp(g2 - g1)
    den = k - 1.0 / k
    a = (k * k * psi_m1 - k * psi_m2) / den * math.exp(g1)
    b = (psi_m2 / k - psi_m1 / (k * k)) / den * math.exp(g1)
    return ScatteringRecord(a=complex(a), b=complex(b), z=sol.z, route="JOST")


def a_jost(v: Potential, z: complex, n_trunc: int | None = None) -> ScatteringRecord:
    return extract_ab(jost_solve(v, z, n_trunc))


def m_function(v: Potential, z: complex, tol: float = 1e-9,
               max_dim: int = 1 << 25) -> complex:
    """m(z) = <e_1, (J - z)^{-1} e_1> by direct truncated solves.

    The truncation starts at support + ceil(40 / Im z) and doubles until the
    value moves by less than tol; non-convergence raises.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("m_function needs Im z > 0")
    if len(v.values) and v.support_lo < 1:
        raise ValueError("m_function expects a half-line potential")
    base = (v.support_hi if len(v.values) else 1) + int(math.ceil(40.0 / z.imag))
    dim = max(base, 8)
    prev = _mfun_dim(v, z, dim)
    while True:
        dim *= 2
        if dim > max_dim:
            raise ConvergenceError("m_function truncation did not stabilize")
        cur = _mfun_dim(v, z, dim)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur


def _mfun_dim(v: Potential, z: complex, dim: int) -> complex:
    varr = np.zeros(dim, dtype=np.float64)
    if len(v.values):
        hi = min(v.support_hi, dim)
        for s in range(v.support_lo, hi + 1):
            varr[s - 1] = v.value(s)
    return _kernels.mfun_e1(varr, complex(z))


def transmission_inverse_sq(v: Potential, z_band: float,
                            offset: float = BAND_OFFSET,
                            refine: bool = True) -> float:
    """1/|a|^2 from the m-function route: 4 |sin t| Im m / |m + e^{it}|^2
    at z = 2 cos t, approached from z + i*offset.

    With refine the boundary value is reached by linear extrapolation from
    offset and offset/2, removing the O(offset) drift of a single sample.
    """
    if not -2.0 < z_band < 2.0:
        raise ValueError("z must lie in the open band (-2, 2)")
    theta = math.acos(z_band / 2.0)
    e = cmath.exp(1j * theta)

    def value(eps: float) -> float:
        m = m_function(v, complex(z_band, eps))
        return 4.0 * abs(math.sin(theta)) * m.imag / abs(m + e) ** 2

    if not refine:
        return value(offset)
    full, half = value(offset), value(offset / 2.0)
    return 2.0 * half - full


def spectral_density(v: Potential, band_grid, n_trunc: int,
                     normalization: float = DENSITY_NORMALIZATION) -> DensitySamples:
    """rho'(z) = C sqrt(4 - z^2) / |x_0|^2 on a real grid inside the band."""
    grid = np.asarray(band_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty grid")
    if np.any(np.abs(np.abs(grid) - 2.0) < 1e-9):
        raise BandEdgeError("grid touches a band edge")
    if np.any(np.abs(grid) > 2.0):
        raise ValueError("grid must lie inside [-2, 2]")
    vt = v.truncated(n_trunc)
    if len(vt.values) and vt.support_lo < 1:
        raise ValueError("spectral_density expects a half-line potential")
    varr = np.zeros(n_trunc, dtype=np.float64)
    if len(vt.values):
        for s in range(vt.support_lo, vt.support_hi + 1):
            varr[s - 1] = vt.value(s)
    ks = np.array([lambda_site(float(x), 0.0) for x in grid])
    mant0, glog0 = _kernels.jost_x0_grid(varr, grid.astype(np.complex128), ks, n_trunc)
    log_x0_sq = 2.0 * (np.log(np.abs(mant0)) + glog0)
    if not np.all(np.isfinite(log_x0_sq)):
        raise ArithmeticError(
            "Jost solution vanished on the band grid; this would mean an "
            "embedded eigenvalue and is flagged as an anomaly"
        )
    rho = normalization * np.sqrt(4.0 - grid**2) * np.exp(-log_x0_sq)
    return DensitySamples(grid=grid, rho_prime=rho, n_trunc=n_trunc,
                          normalization_constant=normalization)


def entropy_integral(samples: DensitySamples, interval: tuple[float, float]) -> float:
    """Composite Simpson quadrature of ln rho' over [a, b].

    The samples must form a uniform grid with an odd number of nodes whose
    ends coincide with the interval: the harness builds density samples on
    exactly that grid (default 257 nodes per interval).
    """
    a, b = float(interval[0]), float(interval[1])
    grid = samples.grid
    mask = (grid >= a - 1e-12) & (grid <= b + 1e-12)
    x = grid[mask]
    y = samples.rho_prime[mask]
    if x.size < 3 or x.size % 2 == 0:
        raise ValueError("Simpson rule needs an odd number (>= 3) of nodes in the interval")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-8, atol=1e-12):
        raise ValueError("entropy_integral expects a uniform grid")
    if abs(x[0] - a) > h[0] / 2 or abs(x[-1] - b) > h[0] / 2:
        raise ValueError("sample grid does not span the requested interval")
    if np.any(y <= 0.0):
        raise ValueError("nonpositive density sample; entropy integrand undefined")
    f = np.log(y)
    return float(h[0] / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-2:2].sum()))


def simpson_grid(interval: tuple[float, float], nodes: int = 257) -> np.ndarray:
    """Uniform odd-count grid spanning an interval (the documented rule)."""
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("nodes must be odd and >= 3")
    return np.linspace(interval[0], interval[1], nodes)


def truncation_spectrum(v: Potential, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and e_1 spectral weights of the dim x dim truncation of J.

    This is the independent oracle behind the density normalization: the
    discrete measure sum_i w_i delta(E_i) converges weakly to d rho.
    """
    from scipy.linalg import eigh_tridiagonal

    diag = np.zeros(dim)
    if len(v.values):
        hi = min(v.support_hi, dim)
        for s in range(max(v.support_lo, 1), hi + 1):
            diag[s - 1] = v.value(s)
    evals, evecs = eigh_tridiagonal(diag, np.ones(dim - 1))
    weights = np.abs(evecs[0, :]) ** 2
    return evals, weights


def calibrate_density_normalization(dim: int = 2000, nodes: int = 4001) -> float:
    """Free-case calibration of the density constant against the eigenvalue
    oracle: total oracle mass over the band divided by the integral of the
    raw factorization sqrt(4 - z^2)/|x_0|^2.

    Resolves the constant to 1/(2 pi); the module stores that value.
    """
    zero = Potential(1, np.zeros(0))
    evals, weights = truncation_spectrum(zero, dim)
    mass = float(weights[(evals >= -2.0) & (evals <= 2.0)].sum())
    # angle substitution z = 2 cos t makes the integrand smooth at the edges
    t = np.linspace(0.0, math.pi, nodes)
    zg = 2.0 * np.cos(t)
    raw = spectral_density(zero, np.clip(zg, -2.0 + 1e-6, 2.0 - 1e-6), 4,
                           normalization=1.0)
    integrand = raw.rho_prime * 2.0 * np.sin(t)
    h = t[1] - t[0]
    total = float(h / 3.0 * (integrand[0] + integrand[-1]
                             + 4.0 * integrand[1:-1:2].sum()
                             + 2.0 * integrand[2:-2:2].sum()))
    return mass / total
