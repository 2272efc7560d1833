import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symground.grid import Domain
from symground.kernels import (Kernel, bilinear, convolve, convolve_table, displacement_norm,
                               lattice_sum, positive_definite_check, relativistic_kernel,
                               ring_displacements)


def direct_convolution(kernel, vals, dom):
    """O(n^2) oracle: sum_j w h(x_i - x_j) f_j from node coordinates."""
    x = np.stack([c.reshape(-1) for c in dom.coords()], axis=1)
    diff = x[:, None, :] - x[None, :, :]
    if dom.kind == "cylinder":
        r = np.sqrt(diff[..., 0] ** 2 + (2 * np.sin(diff[..., 1] / 2)) ** 2)
    else:
        r = np.sqrt((diff**2).sum(-1))
    H = kernel.radial(r, dom.ndim)
    return dom.cell_volume * (H @ vals.reshape(-1)).reshape(dom.shape)


DOMS = [Domain.line(3.0, 20), Domain.plane(3.0, 12), Domain.cylinder(3.0, 10, 16)]


@pytest.mark.parametrize("dom", DOMS, ids=lambda d: d.kind)
@pytest.mark.parametrize("kernel", [Kernel("gaussian", sigma=0.7), Kernel("box", a=1.1)],
                         ids=lambda k: k.kind)
def test_fft_convolution_matches_direct_sum(dom, kernel):
    v = np.random.default_rng(1).normal(size=dom.shape)
    assert np.allclose(convolve(kernel, v, dom), direct_convolution(kernel, v, dom),
                       rtol=0, atol=1e-13 * np.abs(v).sum())


def test_neg_abs_only_on_line():
    with pytest.raises(ValueError):
        Kernel("neg_abs").ring(Domain.plane(3.0, 12))
    with pytest.raises(ValueError):
        Kernel("relativistic_bessel").ring(Domain.cylinder(3.0, 10, 16))


def test_table_must_be_even():
    dom = Domain.line(3.0, 10)
    t = np.arange(19.0)
    with pytest.raises(ValueError):
        Kernel("table", table=t)
    even = Kernel("gaussian").centred(dom).values
    k = Kernel("table", table=even)
    v = np.random.default_rng(0).normal(size=10)
    assert np.allclose(convolve(k, v, dom), convolve(Kernel("gaussian"), v, dom))
    assert np.allclose(convolve_table(even, v, dom), convolve(k, v, dom))


def test_pd_certificate():
    dom = Domain.line(8.0, 129)
    assert positive_definite_check(Kernel("gaussian", sigma=1.0), dom)[0]
    ok, lo = positive_definite_check(Kernel("box", a=1.0), dom)
    assert not ok and lo < 0
    assert not positive_definite_check(Kernel("neg_abs"), dom, "all")[0]
    assert positive_definite_check(Kernel("neg_abs"), dom, "mean_zero")[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_gaussian_bilinear_form_is_nonnegative(seed):
    dom = Domain.plane(4.0, 16)
    f = np.random.default_rng(seed).normal(size=dom.shape)
    assert bilinear(Kernel("gaussian", sigma=0.8), f, f, dom) >= -1e-12


def test_ring_displacement_layout():
    dom = Domain.line(2.0, 8)
    (d,) = ring_displacements(dom)
    assert d.shape == (15,) and d[0] == 0 and d[1] == pytest.approx(0.5)
    assert d[-1] == pytest.approx(-0.5)
    assert displacement_norm((d,), dom)[-1] == pytest.approx(0.5)


def test_relativistic_kernel_closed_form_1d():
    # d = 1: nu = 1, R_m(r) = (m / 2 pi) K_1(m r) / r
    from scipy.special import k1
    r = np.array([0.1, 1.0, 3.0])
    assert np.allclose(relativistic_kernel(r, 2.0, 1), (2 / (2 * math.pi)) * k1(2 * r) / r,
                       rtol=1e-12)


def test_lattice_sum_decreases_with_mass():
    dom = Domain.line(8.0, 129)
    assert lattice_sum(4.0, dom) < lattice_sum(1.0, dom)
