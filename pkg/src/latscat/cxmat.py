"""Minimal dense complex linear algebra.

Everything here is a pure function of its arguments.  Determinants go
through our own pivoted LU (see ``_kernels``); the only eigensolver is the
explicit quadratic formula for 2x2 matrices, which is all the transfer
machinery ever needs.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateEigenvaluesError, SingularMatrixError

#: default absolute tolerance on |l1 - l2| below which eig2 refuses
DEGENERACY_TOL = 1e-8


def as_cmatrix(a) -> np.ndarray:
    """Validate and convert to a square, finite complex matrix."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return m


def lu_det(a) -> complex:
    """det(a) via complex LU with partial pivoting on modulus."""
    return _kernels.lu_det(as_cmatrix(a))


def lu_logdet(a) -> tuple[float, float]:
    """(log|det a|, arg-sum) pair; exp(logmod + 1j*arg) reproduces det(a)."""
    return _kernels.lu_logdet(as_cmatrix(a))


def lu_solve(a, b) -> np.ndarray:
    """Solve a @ x = b; b may be a vector or a matrix of columns."""
    m = as_cmatrix(a)
    rhs = np.asarray(b, dtype=np.complex128)
    vector = rhs.ndim == 1
    if vector:
        rhs = rhs[:, None]
    if rhs.shape[0] != m.shape[0]:
        raise ValueError("right-hand side has incompatible leading dimension")
    try:
        x = _kernels.lu_solve(m, rhs)
    except ZeroDivisionError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return x[:, 0] if vector else x


def inv(a) -> np.ndarray:
    """Matrix inverse through lu_solve against the identity."""
    m = as_cmatrix(a)
    return lu_solve(m, np.eye(m.shape[0], dtype=np.complex128))


def det2(a) -> complex:
    """Regularized determinant det((I+A)exp(-A)) = det(I+A)*exp(-tr A)."""
    m = as_cmatrix(a)
    if m.shape[0] == 0:
        return 1.0 + 0.0j
    return _kernels.lu_det(np.eye(m.shape[0]) + m) * cmath.exp(-complex(np.trace(m)))


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm; row-major summation order."""
    m = as_cmatrix(a)
    flat = np.ravel(m, order="C")
    return float(np.sqrt(np.sum(flat.real**2 + flat.imag**2)))


@dataclass(frozen=True)
class EigPair2:
    """Eigenvalues and unit eigenvectors of a 2x2 matrix.

    ``values[0]`` is the root of larger modulus (ties broken by larger
    imaginary part); ``vectors[:, i]`` belongs to ``values[i]``.  Both
    eigen-equations hold to ~1e-12 * ||M|| in the tested regime.
    """

    values: tuple[complex, complex]
    vectors: np.ndarray


def eig2(a, degeneracy_tol: float = DEGENERACY_TOL) -> EigPair2:
    """Eigen-decomposition of a 2x2 complex matrix by the quadratic formula.

    Raises DegenerateEigenvaluesError when |l1 - l2| < degeneracy_tol
    (in this package that signals band-edge proximity).
    """
    m = as_cmatrix(a)
    if m.shape != (2, 2):
        raise ValueError("eig2 handles 2x2 matrices only")
    tr = complex(m[0, 0] + m[1, 1])
    det = complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    disc = cmath.sqrt(tr * tr - 4.0 * det)
    # sum the big root first to avoid cancellation, recover the other from tr
    big = (tr + disc) / 2.0 if abs(tr + disc) >= abs(tr - disc) else (tr - disc) / 2.0
    other = tr - big
    l1, l2 = big, other
    if abs(l1) < abs(l2) or (abs(l1) == abs(l2) and l1.imag < l2.imag):
        l1, l2 = l2, l1
    if abs(l1 - l2) < degeneracy_tol:
        raise DegenerateEigenvaluesError(
            f"eigenvalue gap {abs(l1 - l2):.3e} below tolerance {degeneracy_tol:.3e}"
        )
    vecs = np.empty((2, 2), dtype=np.complex128)
    for i, lam in enumerate((l1, l2)):
        cand_row0 = np.array([m[0, 1], lam - m[0, 0]])
        cand_row1 = np.array([lam - m[1, 1], m[1, 0]])
        v = cand_row0 if np.abs(cand_row0).sum() >= np.abs(cand_row1).sum() else cand_row1
        nrm = np.sqrt(np.abs(v[0]) ** 2 + np.abs(v[1]) ** 2)
        vecs[:, i] = v / nrm if nrm > 0 else np.array([1.0, 0.0])
    return EigPair2(values=(l1, l2), vectors=vecs)
