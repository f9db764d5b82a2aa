import math

import numpy as np
import pytest
from scipy import special

from levy_extrema.bessel import BesselDomainError, bessel_k


def test_half_integer_closed_form():
    assert bessel_k(0.5, 1.0).real == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-14)
    assert bessel_k(0.5, 1.0).real == pytest.approx(0.4610685044, abs=1e-10)


def test_reflection():
    z = 2 + 1j
    assert abs(bessel_k(-0.7, z) - bessel_k(0.7, z)) / abs(bessel_k(0.7, z)) < 1e-10


def test_recurrence():
    lam, z = 1.0, 3.0
    lhs = bessel_k(lam + 1, z)
    rhs = bessel_k(lam - 1, z) + 2 * lam / z * bessel_k(lam, z)
    assert abs(lhs - rhs) / abs(lhs) < 1e-9


@pytest.mark.parametrize("order", [0.0, 0.3, 0.5, 1.0, 1.7, 3.0])
def test_against_scipy_right_half_plane(order):
    rng = np.random.default_rng(3)
    r = rng.uniform(0.01, 60, 400)
    th = rng.uniform(-np.pi / 2, np.pi / 2, 400)
    z = r * np.exp(1j * th)
    ours = bessel_k(order, z, scaled=True)
    ref = special.kve(order, z)
    assert np.max(np.abs(ours - ref) / np.abs(ref)) < 1e-12


def test_left_half_plane_series():
    z = np.array([-1 + 2j, -3 - 1j, -0.5 + 0.1j])
    ours = bessel_k(1.0, z)
    ref = special.kv(1.0, z)
    assert np.max(np.abs(ours - ref) / np.abs(ref)) < 1e-11


def test_unscaled_matches_scaled():
    z = np.array([0.5, 5 + 3j, 40.0])
    assert np.allclose(bessel_k(1.3, z), bessel_k(1.3, z, scaled=True) * np.exp(-z), rtol=1e-14)


def test_branch_cut_rejected():
    with pytest.raises(BesselDomainError):
        bessel_k(1.0, -2.0)
    with pytest.raises(BesselDomainError):
        bessel_k(1.0, 0.0)


def test_scalar_in_scalar_out():
    assert np.ndim(bessel_k(1.0, 2.0)) == 0
