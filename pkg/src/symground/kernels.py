"""Two-point interaction kernels ``h(x - y)`` sampled on difference grids.

A kernel is sampled once per domain on the grid of pairwise node differences.
Along a non-periodic axis with ``n`` nodes the offsets run over
``-(n-1) .. n-1`` and are stored on a ring of ``2n - 1`` points (the minimal
circulant embedding), so a circular FFT convolution of zero-padded data is
exactly the linear convolution.  Periodic axes (the cylinder angle) are
convolved circularly as they are.

The same ring gives the positive-definiteness certificate: the embedded
circulant contains the kernel's Gram matrix as a principal block, so
nonnegative DFT values prove ``sum f_i h_ij f_j >= 0`` for every ``f``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import fft as sfft
from scipy import integrate as spi

from .bessel import bessel_k
from .grid import Domain, GridFunction

KernelKind = Literal["gaussian", "box", "neg_abs", "relativistic_bessel", "table"]


@dataclass(eq=False)
class Kernel:
    """An even kernel ``h(z)``.

    gaussian
        ``exp(-|z|^2 / (2 sigma^2))``
    box
        ``1{|z| <= a}``
    neg_abs
        ``-|z|`` (line only); positive definite on mean-zero functions
    relativistic_bessel
        ``(m/2pi)^nu K_nu(m|z|) / |z|^nu`` with ``nu = (d+1)/2``; the singular
        value at ``z = 0`` is stored as 0 (the diagonal is handled separately)
    table
        explicit samples on the difference grid, centred layout
    """

    kind: KernelKind
    sigma: float = 1.0
    a: float = 1.0
    m: float = 1.0
    table: np.ndarray | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "box", "neg_abs", "relativistic_bessel", "table"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian kernel needs sigma > 0")
        if self.kind == "box" and not self.a > 0:
            raise ValueError("box kernel needs a > 0")
        if self.kind == "relativistic_bessel" and not self.m > 0:
            raise ValueError("relativistic kernel needs m > 0")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table kernel needs samples")
            t = np.asarray(self.table, dtype=float)
            if not np.allclose(t, _reflect(t), rtol=0, atol=1e-12 * max(np.abs(t).max(), 1)):
                raise ValueError("kernel table must be even: h(-z) = h(z)")
            self.table = t

    def describe(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(sigma={self.sigma!r})"
        if self.kind == "box":
            return f"box(a={self.a!r})"
        if self.kind == "relativistic_bessel":
            return f"relativistic_bessel(m={self.m!r})"
        return self.kind

    # sampling -------------------------------------------------------------
    def radial(self, r: np.ndarray, dim: int) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-(r * r) / (2 * self.sigma**2))
        if self.kind == "box":
            return (r <= self.a + 1e-12 * self.a).astype(float)
        if self.kind == "neg_abs":
            return -r
        if self.kind == "relativistic_bessel":
            return relativistic_kernel(r, self.m, dim)
        raise ValueError("table kernels have no radial profile")

    def ring(self, domain: Domain) -> np.ndarray:
        """Samples in FFT layout on the difference ring of ``domain``."""
        return self._entry(domain)[0]

    def spectrum(self, domain: Domain) -> np.ndarray:
        """Real DFT of :meth:`ring` (the circulant eigenvalues)."""
        return self._entry(domain)[1]

    def centred(self, domain: Domain) -> GridFunction:
        """Samples on ``domain.difference_domain()`` with the origin in the middle."""
        ring = self.ring(domain)
        axes = [a for a in range(domain.ndim) if not domain.periodic[a]]
        return GridFunction(domain.difference_domain(), sfft.fftshift(ring, axes=axes))

    def _entry(self, domain: Domain):
        if domain not in self._cache:
            ring = self._sample_ring(domain)
            spec = sfft.fftn(ring).real
            self._cache[domain] = (ring, spec)
        return self._cache[domain]

    def _sample_ring(self, domain: Domain) -> np.ndarray:
        if self.kind == "table":
            t = self.table
            expected = domain.difference_domain().shape
            if t.shape != expected:
                raise ValueError(f"kernel table shape {t.shape} does not match {expected}")
            axes = [a for a in range(domain.ndim) if not domain.periodic[a]]
            return sfft.ifftshift(t, axes=axes)
        if self.kind == "neg_abs" and domain.kind != "line1d":
            raise ValueError("neg_abs kernel is only defined on line1d")
        if self.kind == "relativistic_bessel" and domain.kind == "cylinder":
            raise ValueError("relativistic kernel is defined on line1d and plane2d only")
        disp = ring_displacements(domain)
        r = displacement_norm(disp, domain)
        dim = domain.ndim
        if self.kind == "relativistic_bessel":
            vals = np.zeros(r.shape)
            nz = r > 0
            vals[nz] = self.radial(r[nz], dim)
            return vals
        return self.radial(r, dim)


def _reflect(t: np.ndarray) -> np.ndarray:
    return t[tuple(slice(None, None, -1) for _ in range(t.ndim))]


def ring_displacements(domain: Domain) -> tuple[np.ndarray, ...]:
    """Displacement components of the difference ring (FFT layout)."""
    comps = []
    for a in range(domain.ndim):
        n, h = domain.resolution[a], domain.spacing[a]
        if domain.periodic[a]:
            offs = np.arange(n)
        else:
            offs = np.concatenate([np.arange(n), np.arange(-(n - 1), 0)])
        comps.append(offs * h)
    return tuple(np.meshgrid(*comps, indexing="ij"))


def displacement_norm(disp: tuple[np.ndarray, ...], domain: Domain) -> np.ndarray:
    """Length of a displacement; the cylinder angle uses the unit-circle chord."""
    if domain.kind == "cylinder":
        dz, dt = disp
        return np.sqrt(dz * dz + (2.0 * np.sin(dt / 2.0)) ** 2)
    return np.sqrt(sum(d * d for d in disp))


def ring_shape(domain: Domain) -> tuple[int, ...]:
    return tuple(n if per else 2 * n - 1 for n, per in zip(domain.resolution, domain.periodic))


def convolve(kernel: Kernel, values: np.ndarray, domain: Domain) -> np.ndarray:
    """``(h * f)(x_i) = sum_j w h(x_i - x_j) f_j`` (linear, zero-padded)."""
    shape = ring_shape(domain)
    fhat = sfft.fftn(values, s=shape)
    out = sfft.ifftn(fhat * kernel.spectrum(domain))
    out = out[tuple(slice(0, n) for n in domain.resolution)]
    if not np.iscomplexobj(values):
        out = out.real
    return domain.cell_volume * out


def convolve_table(table: np.ndarray, values: np.ndarray, domain: Domain) -> np.ndarray:
    """``sum_j w t(x_i - x_j) f_j`` for any (not necessarily even) table ``t``
    sampled on ``domain.difference_domain()`` in centred layout."""
    axes = [a for a in range(domain.ndim) if not domain.periodic[a]]
    ring = sfft.ifftshift(np.asarray(table), axes=axes)
    shape = ring_shape(domain)
    if ring.shape != shape:
        raise ValueError(f"table shape {np.shape(table)} does not match the difference grid")
    out = sfft.ifftn(sfft.fftn(ring) * sfft.fftn(values, s=shape))
    out = out[tuple(slice(0, n) for n in domain.resolution)]
    if not (np.iscomplexobj(values) or np.iscomplexobj(table)):
        out = out.real
    return domain.cell_volume * out


def bilinear(kernel: Kernel, f: np.ndarray, g: np.ndarray, domain: Domain) -> float:
    """``H(f, g) = sum_ij w^2 f_i h(x_i - x_j) g_j`` for real densities."""
    return float(domain.cell_volume * np.sum(f * convolve(kernel, g, domain)))


def positive_definite_check(kernel: Kernel, domain: Domain,
                            mode: Literal["all", "mean_zero"] = "all") -> tuple[bool, float]:
    """DFT certificate for positive definiteness on ``domain``.

    ``mode="mean_zero"`` ignores the zero-frequency eigenvalue, certifying
    positivity on functions with zero integral.  Returns ``(ok, min_eig)``
    where ``min_eig`` is the smallest eigenvalue that was checked.
    """
    if mode not in ("all", "mean_zero"):
        raise ValueError(f"unknown mode {mode!r}")
    lam = kernel.spectrum(domain).copy()
    scale = np.abs(lam).max()
    if mode == "mean_zero":
        lam.reshape(-1)[0] = np.inf
    lo = float(lam.min())
    return bool(lo >= -1e-10 * scale), lo


# ---------------------------------------------------------------------------
# relativistic kernel


def relativistic_kernel(r: np.ndarray, m: float, dim: int) -> np.ndarray:
    """``R_m(r) = (m / 2pi)^nu K_nu(m r) / r^nu`` with ``nu = (dim + 1) / 2``."""
    nu = (dim + 1) / 2.0
    r = np.asarray(r, dtype=float)
    return (m / (2 * math.pi)) ** nu * bessel_k(nu, m * r) / r**nu


_LATTICE_CACHE: dict = {}


def lattice_sum(m: float, domain: Domain, max_points: int = 4_000_000) -> float:
    """``w * sum_{k in Z^d, k != 0} R_m(|k h|)``: the weight seen by one node
    from every other lattice node, inside or outside the box."""
    key = (m, domain.kind, domain.spacing)
    if key in _LATTICE_CACHE:
        return _LATTICE_CACHE[key]
    dim = domain.ndim
    h = domain.spacing[0]
    r_cut = 38.0 / m
    per_axis = int(r_cut / h)
    limit = int(max_points ** (1.0 / dim)) // 2
    per_axis = min(per_axis, limit)
    r_cut = min(r_cut, per_axis * h)
    ks = np.arange(-per_axis, per_axis + 1) * h
    grids = np.meshgrid(*([ks] * dim), indexing="ij")
    r = np.sqrt(sum(g * g for g in grids))
    sel = (r > 0) & (r <= r_cut)
    total = domain.cell_volume * relativistic_kernel(r[sel], m, dim).sum()
    # continuous tail beyond the cut
    shell = 2.0 if dim == 1 else 2 * math.pi
    tail, _ = spi.quad(lambda s: shell * s ** (dim - 1) * relativistic_kernel(s, m, dim),
                             r_cut, np.inf, limit=200)
    _LATTICE_CACHE[key] = float(total + tail)
    return _LATTICE_CACHE[key]


_NEAR_CACHE: dict = {}


def _tent_pair_integral(m: float, domain: Domain, k: tuple[int, ...]) -> float:
    """``int z_1^2 R_m(z) prod_a (h - |z_a - k_a h|)_+ dz``: the exact weight of
    the cell pair at offset ``k`` for a linear ``u``."""
    h = domain.spacing[0]
    total = 0.0
    if domain.ndim == 1:
        (k1,) = k

        def f(z):
            return 0.0 if z == 0 else z * z * float(relativistic_kernel(abs(z), m, 1)) * (h - abs(z - k1 * h))
        for lo in (k1 - 1, k1):
            total += spi.quad(f, lo * h, (lo + 1) * h, limit=200, epsabs=1e-16)[0]
        return total
    k1, k2 = k

    def g(z2, z1):
        r = math.hypot(z1, z2)
        if r == 0:
            return 0.0
        return z1 * z1 * float(relativistic_kernel(r, m, 2)) * (h - abs(z1 - k1 * h)) * (h - abs(z2 - k2 * h))
    # the tent kinks sit on multiples of h, so the singular origin is always a corner
    for a in (k1 - 1, k1):
        for b in (k2 - 1, k2):
            total += spi.dblquad(g, a * h, (a + 1) * h, b * h, (b + 1) * h,
                                 epsabs=1e-14, epsrel=1e-10)[0]
    return total


def near_field_weight(m: float, domain: Domain, reach: int = 1) -> float:
    r"""Correction ``D`` such that ``pair sum + D * sum_i |grad u_i|^2`` approximates
    the continuum double integral.

    For offsets with ``max|k_a| <= reach`` the midpoint weight
    ``w^2 (k_1 h)^2 R_m(k h)`` is swapped for the exact cell-pair integral (the
    same-cell pair included); beyond that the midpoint error is taken from the
    tent second moment, ``w^2 h^2 / 12 * Laplacian(z_1^2 R_m)``.
    """
    key = (m, domain.kind, domain.spacing, reach)
    if key in _NEAR_CACHE:
        return _NEAR_CACHE[key]
    h = domain.spacing[0]
    w = domain.cell_volume
    dim = domain.ndim
    total = 0.0
    for k in itertools.product(range(-reach, reach + 1), repeat=dim):
        exact = _tent_pair_integral(m, domain, k)
        r = h * math.sqrt(sum(c * c for c in k))
        mid = 0.0 if r == 0 else w * w * (k[0] * h) ** 2 * float(relativistic_kernel(r, m, dim))
        total += exact - mid
    kmax = max(reach + 1, int(40.0 / (m * h)))
    kmax = min(kmax, reach + 1 + (2000 if dim == 1 else 600))
    ks = np.arange(-kmax, kmax + 1)
    grids = np.meshgrid(*([ks] * dim), indexing="ij")
    far = np.max(np.abs(np.stack(grids)), axis=0) > reach
    zs = [g[far] * h for g in grids]
    e = h / 8.0

    def g1(*z):
        return z[0] ** 2 * relativistic_kernel(np.sqrt(sum(c * c for c in z)), m, dim)
    lap = -2.0 * dim * g1(*zs)
    for a in range(dim):
        for sgn in (1.0, -1.0):
            shifted = list(zs)
            shifted[a] = zs[a] + sgn * e
            lap = lap + g1(*shifted)
    lap /= e * e
    total += w * w * h * h / 12.0 * float(lap.sum())
    _NEAR_CACHE[key] = total
    return total
