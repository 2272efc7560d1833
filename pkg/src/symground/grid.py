"""Uniform tensor grids standing in for the measure space X.

Every axis is cell-centred: an axis with ``n`` cells of width ``h`` on
``[-L, L]`` has nodes at ``(2k + 1 - n) * h / 2``.  Reflection ``x -> -x``
maps node ``k`` to node ``n - 1 - k`` exactly, and on square plane grids a
quarter turn maps nodes to nodes.  Odd ``n`` puts a node on the origin.

The cylinder ``[-L, L] x S^1`` uses a cell-centred axial coordinate ``z`` and a
periodic angle ``theta_j = 2 pi j / n`` (node on ``theta = 0``).  Its measure is
``dz dtheta``.

Quadrature is the midpoint rule: every node carries the same weight, the cell
volume.  Dirichlet domains clamp the outer layer of every non-periodic axis to
zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

DomainKind = Literal["line1d", "plane2d", "cylinder"]
_KINDS = ("line1d", "plane2d", "cylinder")


@dataclass(frozen=True)
class Domain:
    """A discretized box (or cylinder) with midpoint quadrature."""

    kind: DomainKind
    extents: tuple[float, ...]
    resolution: tuple[int, ...]
    dirichlet: bool = True

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        ndim = 1 if self.kind == "line1d" else 2
        ext = tuple(float(e) for e in np.atleast_1d(self.extents))
        res = tuple(int(n) for n in np.atleast_1d(self.resolution))
        if len(ext) == 1 and ndim == 2:
            ext = ext * 2
        if len(res) == 1 and ndim == 2:
            res = res * 2
        if self.kind == "cylinder":
            # the angular "half-width" is fixed to pi (period 2 pi)
            ext = (ext[0], math.pi)
        if len(ext) != ndim or len(res) != ndim:
            raise ValueError(f"{self.kind} needs {ndim} extents and resolutions")
        if any(e <= 0 or not math.isfinite(e) for e in ext):
            raise ValueError(f"extents must be positive, got {ext}")
        if any(n < 8 for n in res):
            raise ValueError(f"resolution must be at least 8 per axis, got {res}")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "resolution", res)

    # construction helpers -------------------------------------------------
    @classmethod
    def line(cls, L: float = 8.0, n: int = 257, dirichlet: bool = True) -> Domain:
        return cls("line1d", (L,), (n,), dirichlet)

    @classmethod
    def plane(cls, L: float = 8.0, n: int = 64, dirichlet: bool = True) -> Domain:
        return cls("plane2d", (L, L), (n, n), dirichlet)

    @classmethod
    def cylinder(cls, L: float = 8.0, n_z: int = 64, n_theta: int = 64,
                 dirichlet: bool = True) -> Domain:
        return cls("cylinder", (L, math.pi), (n_z, n_theta), dirichlet)

    # geometry -------------------------------------------------------------
    @property
    def ndim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def periodic(self) -> tuple[bool, ...]:
        if self.kind == "cylinder":
            return (False, True)
        return (False,) * self.ndim

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * e / n for e, n in zip(self.extents, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        """Analytic measure of the box (or cylinder)."""
        return float(np.prod([2.0 * e for e in self.extents]))

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.shape, self.cell_volume)

    def axis_offsets(self, axis: int) -> np.ndarray:
        """Integer node positions in half-cell units (cell-centred axes) or
        cell units (periodic axes)."""
        n = self.resolution[axis]
        if self.periodic[axis]:
            return np.arange(n)
        return 2 * np.arange(n) + 1 - n

    def axis_coords(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        if self.periodic[axis]:
            return self.axis_offsets(axis) * h
        return self.axis_offsets(axis) * (h / 2.0)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcast-ready coordinate arrays, one per axis (``ij`` indexing)."""
        axes = [self.axis_coords(a) for a in range(self.ndim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def radius(self) -> np.ndarray:
        """Distance from the origin (line/plane) or from the z = 0 circle."""
        c = self.coords()
        if self.kind == "cylinder":
            return np.abs(c[0])
        return np.sqrt(sum(ci**2 for ci in c))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for a in range(self.ndim):
            if self.periodic[a]:
                continue
            idx = [slice(None)] * self.ndim
            idx[a] = 0
            mask[tuple(idx)] = True
            idx[a] = -1
            mask[tuple(idx)] = True
        return mask

    def difference_domain(self) -> Domain:
        """The grid of pairwise differences ``x_i - x_j``.

        Non-periodic axes grow to ``2n - 1`` nodes (odd, so the origin is a
        node); periodic axes are unchanged.
        """
        ext, res = [], []
        for a in range(self.ndim):
            n, h = self.resolution[a], self.spacing[a]
            if self.periodic[a]:
                ext.append(self.extents[a])
                res.append(n)
            else:
                ext.append((2 * n - 1) * h / 2.0)
                res.append(2 * n - 1)
        return Domain(self.kind, tuple(ext), tuple(res), dirichlet=False)

    def describe(self) -> str:
        L = ",".join(repr(e) for e in self.extents)
        n = ",".join(str(r) for r in self.resolution)
        return f"domain={self.kind} L={L} n={n} dirichlet={str(self.dirichlet).lower()}"


@dataclass(eq=False)
class GridFunction:
    """Samples of a (real or complex) function at the nodes of a domain.

    On Dirichlet domains the outer layer is forced to zero at construction.
    """

    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.size != self.domain.size:
            raise ValueError(
                f"value count {vals.size} does not match node count {self.domain.size}"
            )
        vals = vals.reshape(self.domain.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        if self.domain.dirichlet:
            vals = np.where(self.domain.boundary_mask(), 0, vals).astype(vals.dtype)
        self.values = vals

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def is_complex(self) -> bool:
        return self.values.dtype.kind == "c"

    @classmethod
    def from_callable(cls, domain: Domain, func) -> GridFunction:
        return cls(domain, np.asarray(func(*domain.coords())))

    @classmethod
    def zeros(cls, domain: Domain) -> GridFunction:
        return cls(domain, np.zeros(domain.shape))

    def with_values(self, values: np.ndarray) -> GridFunction:
        return GridFunction(self.domain, values)

    def abs(self) -> GridFunction:
        return GridFunction(self.domain, np.abs(self.values))

    def __mul__(self, c: complex) -> GridFunction:
        return GridFunction(self.domain, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: GridFunction) -> GridFunction:
        _check_same(self, other)
        return GridFunction(self.domain, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        _check_same(self, other)
        return GridFunction(self.domain, self.values - other.values)


def _check_same(f: GridFunction, g: GridFunction) -> None:
    if f.domain != g.domain:
        raise ValueError("grid functions live on different domains")


def integrate(f: GridFunction) -> complex | float:
    """Midpoint-rule integral of ``f`` over its domain."""
    vals = f.values
    if vals.shape != f.domain.shape:
        raise ValueError("weight table and values disagree in shape")
    total = f.domain.cell_volume * vals.sum()
    return complex(total) if np.iscomplexobj(total) else float(total)


def lp_norm(f: GridFunction, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    a = np.abs(f.values)
    if p == 2:
        return float(math.sqrt(f.domain.cell_volume * np.vdot(a, a).real))
    return float((f.domain.cell_volume * np.sum(a**p)) ** (1.0 / p))


def inner_product(f: GridFunction, g: GridFunction) -> complex | float:
    """``int conj(f) g dx``; real when both arguments are real."""
    _check_same(f, g)
    val = f.domain.cell_volume * np.vdot(f.values, g.values)
    if np.iscomplexobj(f.values) or np.iscomplexobj(g.values):
        return complex(val)
    return float(val.real)


def gradient(f: GridFunction | np.ndarray, domain: Domain | None = None) -> np.ndarray:
    """Per-node gradient, shape ``(ndim, *domain.shape)``.

    Central differences in the interior; second-order one-sided stencils on
    the edges of non-periodic axes; wrap-around on periodic axes.
    """
    if isinstance(f, GridFunction):
        domain, vals = f.domain, f.values
    else:
        if domain is None:
            raise TypeError("a domain is required for raw arrays")
        vals = np.asarray(f)
    if any(n < 3 for n in vals.shape):
        raise ValueError("gradient needs at least 3 nodes per axis")
    out = []
    for a, (h, per) in enumerate(zip(domain.spacing, domain.periodic)):
        if per:
            out.append((np.roll(vals, -1, axis=a) - np.roll(vals, 1, axis=a)) / (2 * h))
        else:
            out.append(np.gradient(vals, h, axis=a, edge_order=2))
    return np.stack(out)
