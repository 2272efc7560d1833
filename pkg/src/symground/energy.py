"""Energy terms on grids.

Fourier convention: ``u_hat(k) = int e^{-ikx} u(x) dx``, inverse with
``(2 pi)^{-d}``.  On a grid with spacing ``h`` padded to ``P`` nodes per axis
the discrete frequencies are ``k = 2 pi * fftfreq(P, h)`` and
``int |u|^2 = w / P^d * sum_k |FFT(u)_k|^2``.

Kinetic energy uses nearest-neighbour differences,
``T = w * sum_axes sum_edges |u_{i+1} - u_i|^2 / h^2``, over the edges inside
the grid (periodic axes wrap).  Its gradient is the 5-point (3-point in 1D)
Laplacian, and unlike central differences it has no checkerboard null space.

Gradients follow ``dE(u; v) = Re <g, v>`` with the weighted inner product,
i.e. ``g = (2 / w) dE/d(conj u)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import fft as sfft

from .bessel import bessel_k  # noqa: F401  (re-exported)
from .grid import Domain, GridFunction, gradient, integrate
from .kernels import (Kernel, bilinear, convolve, near_field_weight,  # noqa: F401
                      lattice_sum, positive_definite_check)

# ---------------------------------------------------------------------------
# types


@dataclass
class Nonlinearity:
    """``F(x, u) = a(x) f(|u|^p)`` with ``f`` convex on ``s >= 0``.

    The built-in profile is ``f(s) = s**gamma``; pass ``f`` and ``fprime`` to
    use another convex profile.
    """

    p: float = 2.0
    gamma: float = 2.0
    a: GridFunction | None = None
    f: Callable[[np.ndarray], np.ndarray] | None = None
    fprime: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if not self.p >= 1:
            raise ValueError(f"nonlinearity needs p >= 1, got {self.p}")
        if self.f is None:
            if not self.gamma > 1:
                raise ValueError(f"power profile needs gamma > 1, got {self.gamma}")
        elif self.fprime is None:
            raise ValueError("a custom profile needs its derivative fprime")
        if self.a is not None and np.any(np.real(self.a.values) < 0):
            raise ValueError("coefficient field a must be nonnegative")
        self.check_convex(4.0)

    def profile(self, s: np.ndarray) -> np.ndarray:
        if self.f is None:
            return s**self.gamma
        return np.asarray(self.f(s), dtype=float)

    def derivative(self, s: np.ndarray) -> np.ndarray:
        if self.fprime is None:
            return self.gamma * s ** (self.gamma - 1)
        return np.asarray(self.fprime(s), dtype=float)

    def check_convex(self, s_max: float, samples: int = 257) -> None:
        s = np.linspace(0.0, max(s_max, 1e-12), samples)
        fs = self.profile(s)
        second = fs[2:] - 2 * fs[1:-1] + fs[:-2]
        if np.any(second < -1e-12 * max(1.0, np.abs(fs).max())):
            raise ValueError("nonlinearity profile f is not convex on the sampled range")

    def coefficient(self, domain: Domain) -> np.ndarray:
        if self.a is None:
            return np.ones(domain.shape)
        if self.a.domain != domain:
            raise ValueError("coefficient field lives on another domain")
        return np.real(self.a.values)


@dataclass
class EnergySpec:
    """``E[u] = K[u] + P[|u|^2] + b S[|u|^2] + int a f(|u|^p)``.

    ``K`` is ``T`` (classical) or ``R`` (relativistic, mass ``m``).  The self
    term ``S`` is ``Q`` or, when a background ``rho`` is given, ``H_rho``.
    """

    domain: Domain
    kinetic: Literal["classical", "relativistic"] = "classical"
    m: float = 1.0
    V: GridFunction | None = None
    b: float = 0.0
    kernel: Kernel | None = None
    nonlinearity: Nonlinearity | None = None
    rho: GridFunction | None = None
    N: float = 1.0
    rel_method: Literal["spectral", "kernel"] = "spectral"

    def __post_init__(self) -> None:
        if not self.N > 0:
            raise ValueError("mass N must be positive")
        if self.kinetic not in ("classical", "relativistic"):
            raise ValueError(f"unknown kinetic kind {self.kinetic!r}")
        if self.kinetic == "relativistic" and not self.m > 0:
            raise ValueError("relativistic kinetic energy needs m > 0")
        if self.V is not None and self.V.domain != self.domain:
            raise ValueError("potential lives on another domain")
        if self.b != 0 and self.kernel is None:
            raise ValueError("b != 0 needs a kernel")
        if self.rho is not None:
            if self.kernel is None:
                raise ValueError("background rho needs a kernel")
            if self.rho.domain != self.domain:
                raise ValueError("background lives on another domain")
            if np.any(np.real(self.rho.values) < 0):
                raise ValueError("background rho must be nonnegative")
            if abs(integrate(self.rho) - self.N) > 1e-10:
                raise ValueError("background must have integral N")


# ---------------------------------------------------------------------------
# kinetic


def _edge_diffs(vals: np.ndarray, domain: Domain):
    for a, (h, per) in enumerate(zip(domain.spacing, domain.periodic)):
        if per:
            yield a, h, np.roll(vals, -1, axis=a) - vals
        else:
            yield a, h, np.diff(vals, axis=a)


def kinetic_T(u: GridFunction) -> float:
    """``int |grad u|^2`` by nearest-neighbour differences."""
    total = 0.0
    for _, h, d in _edge_diffs(u.values, u.domain):
        total += np.sum(np.abs(d) ** 2) / (h * h)
    return float(u.domain.cell_volume * total)


def neg_laplacian(vals: np.ndarray, domain: Domain) -> np.ndarray:
    """``L u`` with ``T[u] = w Re <u, L u>``; missing neighbours at the ends
    of non-periodic axes are dropped."""
    out = np.zeros_like(vals)
    for a, h, d in _edge_diffs(vals, domain):
        if domain.periodic[a]:
            out += (d - np.roll(d, 1, axis=a)) / (h * h)
        else:
            pad = [(0, 0)] * vals.ndim
            pad[a] = (1, 1)
            dp = np.pad(d, pad)
            lo = [slice(None)] * vals.ndim
            hi = [slice(None)] * vals.ndim
            lo[a] = slice(0, -1)
            hi[a] = slice(1, None)
            out += (dp[tuple(lo)] - dp[tuple(hi)]) / (h * h)
    return out


# ---------------------------------------------------------------------------
# potential and self-interaction


def _same(u: GridFunction, f: GridFunction, what: str) -> None:
    if u.domain != f.domain:
        raise ValueError(f"{what} lives on another domain")


def potential_P(u: GridFunction, V: GridFunction) -> float:
    """``int V |u|^2``."""
    _same(u, V, "potential")
    return float(u.domain.cell_volume * np.sum(np.real(V.values) * np.abs(u.values) ** 2))


def density(u: GridFunction) -> np.ndarray:
    return np.abs(u.values) ** 2


def self_Q(u: GridFunction, kernel: Kernel) -> float:
    """``int int |u(x)|^2 h(x - y) |u(y)|^2``."""
    f = density(u)
    return bilinear(kernel, f, f, u.domain)


def H_rho(f: np.ndarray, g: np.ndarray, kernel: Kernel, rho: np.ndarray,
          domain: Domain) -> float:
    """``int int (f - rho)(x) h(x - y) (g - rho)(y)``."""
    return bilinear(kernel, f - rho, g - rho, domain)


def self_Q_background(u: GridFunction, kernel: Kernel, rho: GridFunction) -> float:
    """``H_rho(|u|^2, |u|^2)``; both densities must carry the same mass."""
    _same(u, rho, "background")
    f = density(u)
    mu, mr = u.domain.cell_volume * f.sum(), integrate(rho)
    if abs(mu - mr) > 1e-8 * max(1.0, abs(mr)):
        raise ValueError(f"mass mismatch: int |u|^2 = {mu!r}, int rho = {mr!r}")
    return H_rho(f, f, kernel, np.real(rho.values), u.domain)


# ---------------------------------------------------------------------------
# relativistic kinetic energy


def _check_rel(u: GridFunction, m: float) -> None:
    if not m > 0:
        raise ValueError("relativistic energy needs m > 0")
    if u.domain.kind == "cylinder":
        raise ValueError("relativistic energy is defined on line1d and plane2d only")
    a = np.abs(u.values)
    edge = np.zeros(u.domain.shape, dtype=bool)
    for ax in range(u.domain.ndim):
        idx = [slice(None)] * u.domain.ndim
        idx[ax] = slice(0, 2)
        edge[tuple(idx)] = True
        idx[ax] = slice(-2, None)
        edge[tuple(idx)] = True
    if a.max() > 0 and a[edge].max() > 1e-6 * a.max():
        warnings.warn("relativistic energy of a function that has not decayed at the boundary",
                      stacklevel=3)


def _spectral_parts(domain: Domain, m: float):
    shape = tuple(2 * n for n in domain.resolution)
    ks = [2 * math.pi * sfft.fftfreq(P, h) for P, h in zip(shape, domain.spacing)]
    grids = np.meshgrid(*ks, indexing="ij")
    k2 = sum(g * g for g in grids)
    mult = np.sqrt(k2 + m * m) - m
    return shape, mult


def relativistic_operator(vals: np.ndarray, domain: Domain, m: float) -> np.ndarray:
    """``(sqrt(p^2 + m^2) - m) u`` on the zero-padded grid, cropped back."""
    shape, mult = _spectral_parts(domain, m)
    out = sfft.ifftn(mult * sfft.fftn(vals, s=shape))
    out = out[tuple(slice(0, n) for n in domain.resolution)]
    return out if np.iscomplexobj(vals) else out.real


def relativistic_R(u: GridFunction, m: float, method: str = "spectral") -> float:
    """``<u, (sqrt(p^2 + m^2) - m) u>``.

    ``spectral`` multiplies the transform of ``u`` (zero-padded to twice the
    box) by ``sqrt(|k|^2 + m^2) - m``.  ``kernel`` sums
    ``|u_i - u_j|^2 R_m(x_i - x_j)`` over all pairs of distinct lattice cells
    (``u = 0`` outside the box).  The excluded same-cell pairs, and the
    midpoint error of the singular near-diagonal pairs, are restored through
    ``|grad u|^2`` times :func:`near_field_weight`.
    """
    _check_rel(u, m)
    if method == "spectral":
        return float(u.domain.cell_volume
                     * np.vdot(u.values, relativistic_operator(u.values, u.domain, m)).real)
    if method == "kernel":
        return _relativistic_kernel_form(u, m, diagonal=True)
    raise ValueError(f"unknown method {method!r}")


_REL_KERNELS: dict[float, Kernel] = {}


def _relativistic_kernel(m: float) -> Kernel:
    if m not in _REL_KERNELS:
        _REL_KERNELS[m] = Kernel("relativistic_bessel", m=m)
    return _REL_KERNELS[m]


def relativistic_pair_sum(vals: np.ndarray, domain: Domain, m: float) -> float:
    """``sum_{i != j} w^2 |u_i - u_j|^2 R_m(x_i - x_j)`` over lattice pairs."""
    w = domain.cell_volume
    kern = _relativistic_kernel(m)
    s = lattice_sum(m, domain)
    a2 = np.abs(vals) ** 2
    cross = np.vdot(vals, convolve(kern, vals, domain)).real
    return float(2 * w * s * a2.sum() - 2 * w * cross)


def _relativistic_kernel_form(u: GridFunction, m: float, diagonal: bool) -> float:
    total = relativistic_pair_sum(u.values, u.domain, m)
    if diagonal:
        g = gradient(u.values, u.domain)
        total += near_field_weight(m, u.domain) * float(np.sum(np.abs(g) ** 2))
    return total


# ---------------------------------------------------------------------------
# nonlinear term


def nonlinear_term(u: GridFunction, nl: Nonlinearity) -> float:
    """``int a(x) f(|u(x)|^p)``."""
    s = np.abs(u.values) ** nl.p
    nl.check_convex(float(s.max()) if s.size else 0.0)
    return float(u.domain.cell_volume * np.sum(nl.coefficient(u.domain) * nl.profile(s)))


# ---------------------------------------------------------------------------
# totals


def energy_terms(spec: EnergySpec, u: GridFunction) -> dict[str, float]:
    """Each configured term of ``E[u]`` (before coupling constants)."""
    if u.domain != spec.domain:
        raise ValueError("function lives on another domain")
    out: dict[str, float] = {}
    if spec.kinetic == "classical":
        out["T"] = kinetic_T(u)
    else:
        out["R"] = relativistic_R(u, spec.m, spec.rel_method)
    if spec.V is not None:
        out["P"] = potential_P(u, spec.V)
    if spec.kernel is not None and spec.b != 0:
        f = density(u)
        if spec.rho is None:
            out["Q"] = bilinear(spec.kernel, f, f, u.domain)
        else:
            # no mass check here: finite-difference probes leave the sphere
            out["H_rho"] = H_rho(f, f, spec.kernel, np.real(spec.rho.values), u.domain)
    if spec.nonlinearity is not None:
        out["F"] = nonlinear_term(u, spec.nonlinearity)
    return out


def total_energy(spec: EnergySpec, u: GridFunction) -> float:
    terms = energy_terms(spec, u)
    e = 0.0
    for name, val in terms.items():
        e += spec.b * val if name in ("Q", "H_rho") else val
    if not math.isfinite(e):
        raise FloatingPointError("energy is not finite")
    return e


def energy_gradient_values(spec: EnergySpec, vals: np.ndarray) -> np.ndarray:
    """Raw-array gradient; see :func:`symground.minimizer.energy_gradient`."""
    dom = spec.domain
    if spec.kinetic == "classical":
        g = 2.0 * neg_laplacian(vals, dom)
    else:
        g = 2.0 * relativistic_operator(vals, dom, spec.m)
    g = g.astype(np.result_type(g, vals))
    if spec.V is not None:
        g = g + 2.0 * np.real(spec.V.values) * vals
    if spec.kernel is not None and spec.b != 0:
        f = np.abs(vals) ** 2
        if spec.rho is not None:
            f = f - np.real(spec.rho.values)
        g = g + 4.0 * spec.b * convolve(spec.kernel, f, dom) * vals
    if spec.nonlinearity is not None:
        nl = spec.nonlinearity
        a = np.abs(vals)
        s = a**nl.p
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(a > 0, nl.derivative(s) * a ** (nl.p - 2), 0.0)
        g = g + nl.p * nl.coefficient(dom) * fac * vals
    return g
