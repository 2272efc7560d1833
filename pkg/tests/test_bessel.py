import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from symground.bessel import SEAM, bessel_k, k1_asymptotic, k1_series


@pytest.mark.parametrize("nu", [0.5, 1.0, 1.5])
def test_against_reference(nu):
    z = np.geomspace(1e-4, 200.0, 400)
    assert np.allclose(bessel_k(nu, z), special.kv(nu, z), rtol=1e-12, atol=0)


def test_closed_forms():
    z = 2.0
    assert bessel_k(0.5, z) == pytest.approx(np.sqrt(np.pi / 4) * np.exp(-2), rel=1e-15)
    assert bessel_k(1.5, z) == pytest.approx(np.sqrt(np.pi / 4) * np.exp(-2) * 1.5, rel=1e-15)


def test_branches_agree_at_seam():
    z = np.array([SEAM * 0.9, SEAM, SEAM * 1.1])
    assert np.allclose(k1_series(z), k1_asymptotic(z), rtol=1e-12, atol=0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 50.0))
def test_recurrence(z):
    # K_{3/2}(z) = K_{-1/2}(z) + K_{1/2}(z) / z, with K_{-1/2} = K_{1/2}
    assert bessel_k(1.5, z) == pytest.approx(bessel_k(0.5, z) * (1 + 1 / z), rel=1e-13)
    assert bessel_k(1.0, z) > 0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_k(2.0, 1.0)
    with pytest.raises(ValueError):
        bessel_k(1.0, 0.0)
