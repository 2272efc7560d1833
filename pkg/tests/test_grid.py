import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symground.grid import Domain, GridFunction, gradient, inner_product, integrate, lp_norm


def test_line_nodes_are_cell_centred():
    d = Domain.line(2.0, 8)
    x = d.axis_coords(0)
    assert np.allclose(x, -1.75 + 0.5 * np.arange(8))
    assert d.cell_volume == pytest.approx(0.5)
    assert d.measure == pytest.approx(4.0)


def test_cylinder_axis_is_periodic():
    d = Domain.cylinder(4.0, 16, 32)
    assert d.periodic == (False, True)
    theta = d.axis_coords(1)
    assert theta[0] == 0 and theta[-1] == pytest.approx(2 * math.pi * 31 / 32)
    assert d.measure == pytest.approx(8.0 * 2 * math.pi)
    assert not d.boundary_mask()[5].any()


def test_invalid_domains():
    with pytest.raises(ValueError):
        Domain("sphere", (1.0,), (16,))
    with pytest.raises(ValueError):
        Domain.line(-1.0, 16)
    with pytest.raises(ValueError):
        Domain.line(1.0, 4)


def test_dirichlet_masks_boundary(plane):
    f = GridFunction(plane, np.ones(plane.shape))
    assert f.values[0].sum() == 0 and f.values[:, -1].sum() == 0
    assert f.values[3, 3] == 1


def test_gaussian_integrals_match_closed_form():
    d = Domain.plane(10.0, 128)
    f = GridFunction.from_callable(d, lambda x, y: np.exp(-(x * x + y * y)))
    assert integrate(f) == pytest.approx(math.pi, rel=1e-12)
    assert lp_norm(f, 2) ** 2 == pytest.approx(math.pi / 2, rel=1e-12)


def test_difference_domain_shape():
    d = Domain.cylinder(4.0, 16, 32)
    dd = d.difference_domain()
    assert dd.shape == (31, 32) and not dd.dirichlet
    assert dd.axis_coords(0)[15] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_inner_product_is_hermitian(seed):
    d = Domain.line(4.0, 16)
    rng = np.random.default_rng(seed)
    f = GridFunction(d, rng.normal(size=16) + 1j * rng.normal(size=16))
    g = GridFunction(d, rng.normal(size=16) + 1j * rng.normal(size=16))
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)))
    assert inner_product(f, f).real == pytest.approx(lp_norm(f) ** 2)


def test_gradient_of_quadratic_is_exact():
    d = Domain.plane(3.0, 16, dirichlet=False)
    x, y = d.coords()
    g = gradient(GridFunction(d, x * x + 3 * y))
    assert np.allclose(g[0], 2 * x) and np.allclose(g[1], 3.0)
