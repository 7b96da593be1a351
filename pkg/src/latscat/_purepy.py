"""NumPy implementations of the numerical kernels.

These are the fallback when the compiled extension is unavailable;
``latscat._kernels`` picks the backend at import time.  Semantics are kept
bit-for-bit aligned with ``latscat._core``: same pivoting rule, same seeding
and rescaling of the backward Jost recursion.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.linalg import solve_banded

NAME = "purepy"

# running values of the backward recursion are renormalized past this modulus
RESCALE_LIMIT = 1e120


def _factor(a):
    """In-place complex LU with partial pivoting on modulus.

    Returns (lu, perm, nswaps); zero pivots are left in place for the
    caller to interpret (determinant zero vs. singular solve).
    """
    n = a.shape[0]
    perm = np.arange(n)
    nswaps = 0
    for col in range(n):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if p != col:
            a[[col, p]] = a[[p, col]]
            perm[[col, p]] = perm[[p, col]]
            nswaps += 1
        pivot = a[col, col]
        if pivot == 0 or col + 1 == n:
            continue
        a[col + 1:, col] /= pivot
        a[col + 1:, col + 1:] -= np.outer(a[col + 1:, col], a[col, col + 1:])
    return a, perm, nswaps


def lu_det(a):
    """Determinant of a square complex matrix via pivoted LU."""
    a = np.array(a, dtype=np.complex128, order="C", copy=True)
    if a.shape[0] == 0:
        return 1.0 + 0.0j
    lu, _, nswaps = _factor(a)
    det = complex(np.prod(np.diag(lu)))
    return -det if nswaps % 2 else det


def lu_logdet(a):
    """(log-modulus, accumulated argument) of the determinant.

    The argument is the sum of pivot arguments (not reduced mod 2*pi), so
    differences of logdets exponentiate to exact determinant ratios.
    """
    a = np.array(a, dtype=np.complex128, order="C", copy=True)
    if a.shape[0] == 0:
        return 0.0, 0.0
    lu, _, nswaps = _factor(a)
    d = np.diag(lu)
    if np.any(d == 0):
        return float("-inf"), 0.0
    logmod = float(np.sum(np.log(np.abs(d))))
    arg = float(np.sum(np.angle(d)))
    if nswaps % 2:
        arg += math.pi
    return logmod, arg


def lu_solve(a, b):
    """Solve a @ x = b (b two-dimensional) via pivoted LU.

    Raises ZeroDivisionError on a zero pivot.
    """
    a = np.array(a, dtype=np.complex128, order="C", copy=True)
    b = np.array(b, dtype=np.complex128, order="C", copy=True)
    n = a.shape[0]
    lu, perm, _ = _factor(a)
    if n and np.any(np.diag(lu) == 0):
        raise ZeroDivisionError("zero pivot in LU solve")
    x = b[perm]
    for col in range(n - 1):
        x[col + 1:] -= np.outer(lu[col + 1:, col], x[col])
    for col in range(n - 1, -1, -1):
        x[col] /= lu[col, col]
        if col:
            x[:col] -= np.outer(lu[:col, col], x[col])
    return x


def jost_backward(v, z, k, nt):
    """Backward three-term recursion seeded by psi_n = k^n for n > nt.

    ``v`` holds sites 1..nt (v[i] is the potential at site i+1); sites
    outside are zero.  Returns (mant, glog) arrays over n = -2..nt+2 with
    psi_n = mant[n+2] * exp(glog[n+2]); glog is a real staircase updated
    whenever the running values pass RESCALE_LIMIT.
    """
    z = complex(z)
    k = complex(k)
    mant = np.empty(nt + 5, dtype=np.complex128)
    glog = np.empty(nt + 5, dtype=np.float64)
    g = nt * math.log(abs(k))
    ph = cmath.exp(1j * nt * cmath.phase(k))
    mant[nt + 2] = ph
    mant[nt + 3] = ph * k
    mant[nt + 4] = ph * k * k
    glog[nt + 2:nt + 5] = g
    cur = ph
    up = ph * k
    for n in range(nt, -2, -1):
        vn = v[n - 1] if 1 <= n <= nt else 0.0
        new = (z - vn) * cur - up
        an = abs(new)
        if an > RESCALE_LIMIT:
            new /= an
            cur /= an
            g += math.log(an)
        mant[n + 1] = new
        glog[n + 1] = g
        up = cur
        cur = new
    return mant, glog


def jost_x0_grid(v, zs, ks, nt):
    """Site-0 Jost values for a grid of spectral parameters.

    Same recursion as ``jost_backward`` vectorized across the grid; returns
    (mant0, glog0) with psi_0(z_i) = mant0[i] * exp(glog0[i]).
    """
    zs = np.asarray(zs, dtype=np.complex128)
    ks = np.asarray(ks, dtype=np.complex128)
    g = nt * np.log(np.abs(ks))
    cur = np.exp(1j * nt * np.angle(ks))
    up = cur * ks
    for n in range(nt, 0, -1):
        vn = v[n - 1] if n <= nt else 0.0
        new = (zs - vn) * cur - up
        an = np.abs(new)
        big = an > RESCALE_LIMIT
        if big.any():
            scale = np.where(big, an, 1.0)
            new = new / scale
            cur = cur / scale
            g = g + np.log(scale)
        up = cur
        cur = new
    return cur, g


def mfun_e1(v, z):
    """First matrix element of (J - z)^(-1) for J tridiagonal with unit
    off-diagonals and diagonal ``v`` (a direct banded solve)."""
    n = len(v)
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = 1.0
    ab[1, :] = np.asarray(v, dtype=np.complex128) - complex(z)
    ab[2, :-1] = 1.0
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[0] = 1.0
    sol = solve_banded((1, 1), ab, rhs)
    return complex(sol[0])
