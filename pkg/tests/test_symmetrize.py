import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symground.grid import Domain, GridFunction, lp_norm
from symground.groups import GroupSpec, build_group
from symground.symmetrize import (MeanSpec, orbital_mean, power_mean, sdr, signed_orbital_average,
                                  symmetry_deviation)
from symground.verify import random_function

LINE = Domain.line(8.0, 65)
PLANE = Domain.plane(8.0, 32)
G_LINE = build_group(GroupSpec("reflection_z2"), LINE)
G_PLANE = build_group(GroupSpec("rotation_zn", n=4), PLANE)

seeds = st.integers(0, 2**32 - 1)


def test_power_mean_small_example():
    stack = np.array([[3.0], [4.0]])
    w = np.array([0.5, 0.5])
    assert power_mean(stack, w, 1)[0] == pytest.approx(3.5)
    assert power_mean(stack, w, 2)[0] == pytest.approx(np.sqrt(12.5))
    assert power_mean(stack, w, 3)[0] == pytest.approx((0.5 * 27 + 0.5 * 64) ** (1 / 3))


def test_mean_spec_rejects_small_p():
    with pytest.raises(ValueError):
        MeanSpec(0.5, G_LINE)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(1.0, 6.0))
def test_orbital_mean_preserves_lp_norm(seed, p):
    u = random_function(PLANE, seed, "rough")
    assert lp_norm(orbital_mean(u, G_PLANE, p), p) == pytest.approx(lp_norm(u, p), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_orbital_mean_is_invariant_and_idempotent(seed):
    u = random_function(LINE, seed, "smooth")
    m = orbital_mean(u, G_LINE, 2.0)
    assert symmetry_deviation(m, G_LINE) < 1e-14
    assert np.allclose(orbital_mean(m, G_LINE, 2.0).values, m.values, rtol=0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(1.0, 3.0), st.floats(0.0, 3.0))
def test_mean_is_monotone_in_p(seed, p, dp):
    u = random_function(PLANE, seed, "rough")
    lo = orbital_mean(u, G_PLANE, p).values
    hi = orbital_mean(u, G_PLANE, p + dp).values
    assert np.all(hi >= lo - 1e-12 * np.abs(u.values).max())


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_signed_average_is_linear_projection(seed):
    u = random_function(LINE, seed, "rough")
    a = signed_orbital_average(u, G_LINE)
    assert np.allclose(a.values, 0.5 * (u.values + u.values[::-1]))
    assert np.allclose(signed_orbital_average(a, G_LINE).values, a.values)


def test_deviation_of_invariant_function_is_zero():
    u = GridFunction(PLANE, np.exp(-PLANE.radius() ** 2))
    assert symmetry_deviation(u, G_PLANE) < 1e-15
    v = GridFunction(PLANE, np.exp(-(PLANE.coords()[0] - 1) ** 2))
    assert symmetry_deviation(v, G_PLANE) > 0.1


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["smooth", "rough", "indicator"]), st.booleans())
def test_sdr_is_equimeasurable_and_radially_decreasing(seed, smooth, two_d):
    dom = PLANE if two_d else LINE
    u = random_function(dom, seed, smooth)
    s = sdr(u)
    assert np.array_equal(np.sort(np.abs(u.values), axis=None), np.sort(s.values, axis=None))
    r = dom.radius().reshape(-1)
    v = s.values.reshape(-1)
    inner = ~dom.boundary_mask().reshape(-1)
    order = np.argsort(r[inner], kind="stable")
    assert np.all(np.diff(v[inner][order]) <= 0)
    assert np.array_equal(sdr(s).values, s.values)


def test_sdr_rejects_cylinder():
    with pytest.raises(ValueError):
        sdr(GridFunction.zeros(Domain.cylinder(4.0, 16, 16)))
