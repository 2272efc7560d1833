"""Orbital means, the signed orbital average and the symmetric decreasing
rearrangement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction
from .groups import GroupQuadrature, orbit

_EPS = 1e-300


@dataclass(frozen=True)
class MeanSpec:
    p: float
    group: GroupQuadrature

    def __post_init__(self) -> None:
        if not self.p >= 1:
            raise ValueError(f"orbital mean needs p >= 1, got {self.p}")


def power_mean(stack: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Weighted p-th power mean of ``|stack|`` along axis 0."""
    a = np.abs(stack)
    w = weights.reshape((-1,) + (1,) * (a.ndim - 1))
    if p == 1:
        return (w * a).sum(axis=0)
    if p == 2:
        return np.sqrt((w * (a * a)).sum(axis=0))
    return ((w * a**p).sum(axis=0)) ** (1.0 / p)


def orbital_mean(u: GridFunction, group: GroupQuadrature | MeanSpec,
                 p: float = 2.0) -> GridFunction:
    """``M_p(u)(x) = (sum_g w_g |u(g.x)|^p)^(1/p)``.

    Accepts either a group plus ``p`` or a :class:`MeanSpec`.
    """
    if isinstance(group, MeanSpec):
        group, p = group.group, group.p
    MeanSpec(p, group)  # validates p
    _check_domain(u, group)
    return GridFunction(u.domain, power_mean(orbit(u.values, group), group.weights, p))


def signed_orbital_average(u: GridFunction, group: GroupQuadrature) -> GridFunction:
    """``U(x) = sum_g w_g u(g.x)``: linear, no absolute value."""
    _check_domain(u, group)
    stack = orbit(u.values, group)
    w = group.weights.reshape((-1,) + (1,) * u.values.ndim)
    return GridFunction(u.domain, (w * stack).sum(axis=0))


def symmetry_deviation(u: GridFunction, group: GroupQuadrature) -> float:
    """``|| |u| - M_2(u) ||_2 / ||u||_2``; zero when ``|u|`` is invariant."""
    _check_domain(u, group)
    a = np.abs(u.values)
    m2 = power_mean(orbit(u.values, group), group.weights, 2.0)
    return float(np.linalg.norm(a - m2) / max(np.linalg.norm(a), _EPS))


def sdr_order(domain) -> np.ndarray:
    """Flat node indices sorted by distance from the origin.

    Distances are compared in exact integer (half-cell) units; ties go to
    the smaller flat index.
    """
    offsets = [domain.axis_offsets(a) for a in range(domain.ndim)]
    grids = np.meshgrid(*offsets, indexing="ij")
    d2 = sum(g.astype(np.int64) ** 2 for g in grids).reshape(-1)
    return np.lexsort((np.arange(d2.size), d2))


def sdr(u: GridFunction) -> GridFunction:
    """Discrete symmetric decreasing rearrangement of ``|u|``.

    The sorted values of ``|u|`` are laid out over the nodes in order of
    increasing distance from the origin, which is an exact layer-cake on a
    uniform grid: the result is equimeasurable with ``|u|``.
    """
    if u.domain.kind == "cylinder":
        raise ValueError("symmetric decreasing rearrangement is undefined on the cylinder")
    vals = np.sort(np.abs(u.values).reshape(-1))[::-1]
    order = sdr_order(u.domain)
    out = np.zeros_like(vals)
    if u.domain.dirichlet:
        # the clamped outer layer already holds zeros of |u|; fill the interior only
        interior = ~u.domain.boundary_mask().reshape(-1)
        order = order[interior[order]]
    out[order] = vals[: order.size]
    return GridFunction(u.domain, out.reshape(u.domain.shape))


def _check_domain(u: GridFunction, group: GroupQuadrature) -> None:
    if u.domain != group.domain:
        raise ValueError("group quadrature was built for a different domain")
