"""Spectral-parameter maps and band geometry.

The quadratic w^2 - (z - v) w + 1 = 0 has a unique root inside the unit
disc when Im z > 0; that root is the per-site symbol lambda_site.  Real z
inside the band gets the limit from above, with Im w <= 0.  The same map
with v = 0 is the Joukowski preimage k(z).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BandEdgeError


def lambda_site(z: complex, v: float = 0.0) -> complex:
    """Unit-disc root of w^2 - (z - v) w + 1 = 0 (limit from above on the band).

    Branch selection is by root modulus, which is unambiguous off the real
    axis; on the band both roots are unimodular and the Im w <= 0 one is the
    boundary value from Im z = +0.
    """
    z = complex(z)
    if z.imag < 0:
        raise ValueError("lambda_site is defined on the closed upper half-plane")
    s = z - v
    if z.imag == 0.0:
        x = s.real
        if abs(x) == 2.0:
            raise BandEdgeError(f"z - v = {x} is a band edge; branch undefined")
        if abs(x) < 2.0:
            return complex(x / 2.0, -math.sqrt(4.0 - x * x) / 2.0)
        big = (x + math.copysign(math.sqrt(x * x - 4.0), x)) / 2.0
        return complex(1.0 / big)
    d = cmath.sqrt(s * s - 4.0)
    r1 = (s + d) / 2.0
    r2 = (s - d) / 2.0
    big = r1 if abs(r1) >= abs(r2) else r2
    return 1.0 / big  # the roots multiply to exactly 1


@dataclass(frozen=True)
class SpectralPoint:
    """Energy z with its Joukowski preimage; k + 1/k = z and |k| <= 1."""

    z: complex
    k: complex
    lambda_tilde: complex


def make_spectral_point(z: complex) -> SpectralPoint:
    """Populate k(z) = lambda_tilde(z); raises BandEdgeError at z = +-2."""
    k = lambda_site(z, 0.0)
    return SpectralPoint(z=complex(z), k=k, lambda_tilde=k)


@dataclass(frozen=True)
class BandPartition:
    """Nodes z_j = 2 cos(pi - pi j / q) splitting [-2, 2] into q bands."""

    q: int
    nodes: np.ndarray
    delta: float

    def intervals(self) -> list[tuple[float, float]]:
        """The q margin-shrunk subintervals [z_j + delta, z_{j+1} - delta]."""
        return [
            (float(self.nodes[j] + self.delta), float(self.nodes[j + 1] - self.delta))
            for j in range(self.q)
        ]


def band_partition(q: int, delta: float) -> BandPartition:
    """Band nodes for block length q, with a margin delta kept from each node."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    if delta <= 0:
        raise ValueError("delta must be positive")
    nodes = np.array([2.0 * math.cos(math.pi - math.pi * j / q) for j in range(q + 1)])
    width = float(np.min(np.diff(nodes)))
    if delta >= width / 2.0:
        raise ValueError(
            f"delta={delta} leaves no room in the narrowest band (width {width:.6f})"
        )
    return BandPartition(q=q, nodes=nodes, delta=float(delta))
