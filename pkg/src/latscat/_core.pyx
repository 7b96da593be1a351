# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: pivoted complex LU, backward Jost recursion, tridiagonal
resolvent element.  Mirrors latscat._purepy (same pivoting, same seeding and
rescaling conventions); the plain-python module is the import-time fallback.
"""

import cmath
import math

import numpy as np

from libc.math cimport atan2, log, M_PI

NAME = "cython"

cdef double RESCALE_LIMIT = 1e120


cdef Py_ssize_t _factor(double complex[:, ::1] m, Py_ssize_t[::1] perm) except -1:
    """In-place LU with partial pivoting on modulus; returns swap count."""
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t col, i, j, p, nswaps = 0
    cdef double best, cur
    cdef double complex pivot, f, tmp
    for col in range(n):
        p = col
        best = abs(m[col, col])
        for i in range(col + 1, n):
            cur = abs(m[i, col])
            if cur > best:
                best = cur
                p = i
        if p != col:
            for j in range(n):
                tmp = m[col, j]
                m[col, j] = m[p, j]
                m[p, j] = tmp
            i = perm[col]
            perm[col] = perm[p]
            perm[p] = i
            nswaps += 1
        pivot = m[col, col]
        if pivot == 0 or col + 1 == n:
            continue
        for i in range(col + 1, n):
            f = m[i, col] / pivot
            m[i, col] = f
            for j in range(col + 1, n):
                m[i, j] = m[i, j] - f * m[col, j]
    return nswaps


def lu_det(a):
    """Determinant of a square complex matrix via pivoted LU."""
    arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    perm_arr = np.arange(n, dtype=np.intp)
    cdef double complex[:, ::1] m = arr
    cdef Py_ssize_t[::1] perm = perm_arr
    cdef Py_ssize_t nswaps = _factor(m, perm)
    cdef double complex det = 1.0
    cdef Py_ssize_t i
    for i in range(n):
        det = det * m[i, i]
    if nswaps % 2:
        det = -det
    return complex(det)


def lu_logdet(a):
    """(log-modulus, accumulated argument) of the determinant.

    The argument is the sum of pivot arguments (not reduced mod 2*pi).
    """
    arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    if n == 0:
        return 0.0, 0.0
    perm_arr = np.arange(n, dtype=np.intp)
    cdef double complex[:, ::1] m = arr
    cdef Py_ssize_t[::1] perm = perm_arr
    cdef Py_ssize_t nswaps = _factor(m, perm)
    cdef double logmod = 0.0, arg = 0.0, r
    cdef double complex d
    cdef Py_ssize_t i
    for i in range(n):
        d = m[i, i]
        r = abs(d)
        if r == 0.0:
            return float("-inf"), 0.0
        logmod += log(r)
        arg += atan2(d.imag, d.real)
    if nswaps % 2:
        arg += M_PI
    return logmod, arg


def lu_solve(a, b):
    """Solve a @ x = b (b two-dimensional) via pivoted LU.

    Raises ZeroDivisionError on a zero pivot.
    """
    arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    rhs = np.array(b, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    cdef Py_ssize_t ncols = rhs.shape[1]
    perm_arr = np.arange(n, dtype=np.intp)
    cdef double complex[:, ::1] m = arr
    cdef Py_ssize_t[::1] perm = perm_arr
    _factor(m, perm)
    cdef Py_ssize_t i
    for i in range(n):
        if m[i, i] == 0:
            raise ZeroDivisionError("zero pivot in LU solve")
    out = rhs[perm_arr]
    cdef double complex[:, ::1] x = out
    cdef Py_ssize_t col, j
    cdef double complex f
    for col in range(n - 1):
        for i in range(col + 1, n):
            f = m[i, col]
            for j in range(ncols):
                x[i, j] = x[i, j] - f * x[col, j]
    for col in range(n - 1, -1, -1):
        f = m[col, col]
        for j in range(ncols):
            x[col, j] = x[col, j] / f
        for i in range(col):
            f = m[i, col]
            for j in range(ncols):
                x[i, j] = x[i, j] - f * x[col, j]
    return out


def jost_backward(v, z, k, nt):
    """Backward three-term recursion seeded by psi_n = k^n for n > nt.

    Returns (mant, glog) over n = -2..nt+2 with psi_n = mant[n+2]*exp(glog[n+2]).
    """
    cdef double complex zz = z
    cdef double complex kk = k
    cdef Py_ssize_t numt = nt
    varr = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] vv = varr
    mant_arr = np.empty(numt + 5, dtype=np.complex128)
    glog_arr = np.empty(numt + 5, dtype=np.float64)
    cdef double complex[::1] mant = mant_arr
    cdef double[::1] glog = glog_arr
    cdef double g = numt * log(abs(kk))
    cdef double complex ph = cmath.exp(1j * numt * atan2(kk.imag, kk.real))
    mant[numt + 2] = ph
    mant[numt + 3] = ph * kk
    mant[numt + 4] = ph * kk * kk
    glog[numt + 2] = g
    glog[numt + 3] = g
    glog[numt + 4] = g
    cdef double complex cur = ph
    cdef double complex up = ph * kk
    cdef double complex new
    cdef double vn, an
    cdef Py_ssize_t n
    for n in range(numt, -2, -1):
        vn = vv[n - 1] if 1 <= n <= numt else 0.0
        new = (zz - vn) * cur - up
        an = abs(new)
        if an > RESCALE_LIMIT:
            new = new / an
            cur = cur / an
            g += log(an)
        mant[n + 1] = new
        glog[n + 1] = g
        up = cur
        cur = new
    return mant_arr, glog_arr


def jost_x0_grid(v, zs, ks, nt):
    """Site-0 Jost values for a grid of spectral parameters."""
    cdef Py_ssize_t numt = nt
    varr = np.ascontiguousarray(v, dtype=np.float64)
    zarr = np.ascontiguousarray(zs, dtype=np.complex128)
    karr = np.ascontiguousarray(ks, dtype=np.complex128)
    cdef double[::1] vv = varr
    cdef double complex[::1] zz = zarr
    cdef double complex[::1] kk = karr
    cdef Py_ssize_t npts = zarr.shape[0]
    mant_arr = np.empty(npts, dtype=np.complex128)
    glog_arr = np.empty(npts, dtype=np.float64)
    cdef double complex[::1] mant = mant_arr
    cdef double[::1] glog = glog_arr
    cdef Py_ssize_t i, n
    cdef double complex cur, up, new, zi
    cdef double g, vn, an
    for i in range(npts):
        zi = zz[i]
        g = numt * log(abs(kk[i]))
        cur = cmath.exp(1j * numt * atan2(kk[i].imag, kk[i].real))
        up = cur * kk[i]
        for n in range(numt, 0, -1):
            vn = vv[n - 1] if n <= numt else 0.0
            new = (zi - vn) * cur - up
            an = abs(new)
            if an > RESCALE_LIMIT:
                new = new / an
                cur = cur / an
                g += log(an)
            up = cur
            cur = new
        mant[i] = cur
        glog[i] = g
    return mant_arr, glog_arr


def mfun_e1(v, z):
    """First matrix element of (J - z)^(-1), J tridiagonal with unit
    off-diagonals and diagonal ``v`` (Thomas elimination from the bottom)."""
    varr = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] vv = varr
    cdef Py_ssize_t n = varr.shape[0]
    cdef double complex zz = z
    cdef double complex r = vv[n - 1] - zz
    cdef Py_ssize_t i
    for i in range(n - 2, -1, -1):
        r = vv[i] - zz - 1.0 / r
    return complex(1.0 / r)
