import cmath
import math

import numpy as np
import pytest

from latscat.errors import BandEdgeError
from latscat.spectral import band_partition, lambda_site, make_spectral_point


def test_lambda_site_upper_halfplane_example():
    got = lambda_site(2.0j, 0.0)
    assert abs(got - 1j * (1.0 - math.sqrt(2.0))) < 1e-14
    assert abs(got.imag + 0.41421356) < 1e-7


def test_lambda_site_real_off_band():
    got = lambda_site(5.0, 0.0)
    assert abs(got - (5.0 - math.sqrt(21.0)) / 2.0) < 1e-14
    assert abs(got - 0.20871215) < 1e-7


def test_lambda_site_defining_quadratic(rng):
    for _ in range(300):
        z = complex(rng.uniform(-4, 4), rng.uniform(0, 2))
        v = float(rng.uniform(-1, 1))
        w = lambda_site(z, v)
        assert abs(w * (1.0 / w) - 1.0) < 1e-15
        assert abs(w * w - (z - v) * w + 1.0) < 1e-12 * max(1.0, abs(w) ** 2)


def test_lambda_site_band_edge_raises():
    with pytest.raises(BandEdgeError):
        lambda_site(2.0, 0.0)
    with pytest.raises(BandEdgeError):
        lambda_site(1.5, -0.5)


def test_lambda_site_lower_halfplane_rejected():
    with pytest.raises(ValueError):
        lambda_site(1.0 - 0.5j, 0.0)


def test_unit_disc_lower_half(rng):
    # both maps send the upper half-plane into {|w| < 1, Im w < 0}
    for _ in range(10_000):
        z = complex(rng.uniform(-4, 4), rng.uniform(1e-12, 3.0))
        v = float(rng.uniform(-0.8, 0.8))
        w = lambda_site(z, v)
        assert abs(w) < 1.0
        assert lambda_site(z, 0.0).imag < 0.0


def test_on_band_limit_from_above():
    for x in (-1.7, -0.3, 0.9, 1.99):
        w = lambda_site(x, 0.0)
        assert abs(abs(w) - 1.0) < 1e-14
        assert w.imag < 0.0
        w_eps = lambda_site(complex(x, 1e-9), 0.0)
        assert abs(w - w_eps) < 1e-7


def test_vertical_continuity_no_branch_flips(rng):
    # along 50 vertical segments the samples drift by O(h): no jumps
    for _ in range(50):
        x = float(rng.uniform(-1.95, 1.95))
        v = float(rng.uniform(-0.3, 0.3))
        h = 1e-3
        ims = np.arange(1e-6, 0.5, h)
        vals = np.array([lambda_site(complex(x, y), v) for y in ims])
        steps = np.abs(np.diff(vals))
        assert steps.max() < 50 * h


def test_lambda_tilde_modulus_bound(rng):
    for _ in range(2000):
        z = complex(rng.uniform(-4, 4), rng.uniform(1e-9, 3.0))
        bound = (math.sqrt(4.0 + z.imag**2) - z.imag) / 2.0
        assert abs(lambda_site(z, 0.0)) <= bound + 1e-12


def test_make_spectral_point():
    pt = make_spectral_point(2.0j)
    assert abs(pt.k - 1j * (1.0 - math.sqrt(2.0))) < 1e-14
    assert pt.lambda_tilde == pt.k
    pt = make_spectral_point(2.5)
    assert abs(pt.k - 0.5) < 1e-14


def test_joukowski_roundtrip():
    xs = np.linspace(-3.5, 3.5, 10)
    ys = np.linspace(0.02, 2.0, 10)
    for x in xs:
        for y in ys:
            z = complex(x, y)
            k = make_spectral_point(z).k
            assert abs(k + 1.0 / k - z) < 1e-12


@pytest.mark.parametrize("q,nodes", [
    (1, [-2.0, 2.0]),
    (2, [-2.0, 0.0, 2.0]),
    (3, [-2.0, -1.0, 1.0, 2.0]),
])
def test_band_partition_nodes(q, nodes):
    part = band_partition(q, 0.1)
    assert np.abs(part.nodes - np.array(nodes)).max() < 1e-12
    for a, b in part.intervals():
        assert a < b


def test_band_partition_delta_guard():
    with pytest.raises(ValueError):
        band_partition(3, 1.0)  # narrowest band (width 1) cannot fit margins
    with pytest.raises(ValueError):
        band_partition(2, 0.0)
