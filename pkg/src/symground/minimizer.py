"""Mass-constrained ground states by projected, preconditioned gradient descent.

Each iteration takes the preconditioned gradient, removes its component
along ``u`` (the tangent direction of the sphere ``||u||^2 = N`` in the
preconditioner metric), steps, and rescales back onto the sphere.  A step is
kept only if the energy does not go up; otherwise the step length shrinks.
Accepted steps grow the step length again.

The preconditioner is ``(sigma + L + V_+)^{-1}`` for the classical kinetic
energy (sparse LU, factored once per run) and the Fourier multiplier
``1 / (sigma + sqrt(k^2 + m^2) - m)`` for the relativistic one.  It is only a
change of metric: fixed points and the accept/reject rule are unaffected.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import fft as sfft
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .energy import EnergySpec, _spectral_parts, energy_gradient_values, total_energy
from .grid import Domain, GridFunction
from .groups import GroupQuadrature
from .symmetrize import orbital_mean, symmetry_deviation


@dataclass
class MinimizerConfig:
    step: float = 0.5
    max_iters: int = 20000
    tol_energy: float = 1e-12
    gradient_check: bool = False
    initializer: Literal["random", "gaussian_offset", "custom"] = "gaussian_offset"
    seed: int = 0
    center: float | tuple[float, ...] = 1.5
    initial: GridFunction | None = None
    backtrack: float = 0.5
    growth: float = 1.5
    precondition: bool = True
    sigma: float = 1.0
    patience: int = 10
    deviation_every: int = 1

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError("initial step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if not self.growth > 1:
            raise ValueError("growth factor must exceed 1")
        if not self.tol_energy > 0:
            raise ValueError("energy tolerance must be positive")
        if self.initializer not in ("random", "gaussian_offset", "custom"):
            raise ValueError(f"unknown initializer {self.initializer!r}")
        if self.initializer == "custom" and self.initial is None:
            raise ValueError("custom initializer needs an initial function")
        if not self.sigma > 0:
            raise ValueError("preconditioner shift sigma must be positive")


@dataclass
class RunTrace:
    spec: EnergySpec
    energies: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    deviations: list[float] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)
    u: GridFunction | None = None
    energy: float = math.nan
    converged: bool = False
    iterations: int = 0
    message: str = ""

    def rows(self):
        """Per-iteration rows ``(iter, energy, step, residual, deviation, accepted)``."""
        for i in range(len(self.energies)):
            dev = self.deviations[i] if i < len(self.deviations) else math.nan
            yield i, self.energies[i], self.steps[i], self.residuals[i], dev, self.accepted[i]

    def summary(self) -> dict:
        return {
            "energy": self.energy,
            "converged": self.converged,
            "iterations": self.iterations,
            "mass_residual": self.residuals[-1] if self.residuals else math.nan,
            "symmetry_deviation": next((d for d in reversed(self.deviations)
                                        if not math.isnan(d)), math.nan),
            "message": self.message,
        }


def energy_gradient(spec: EnergySpec, u: GridFunction) -> GridFunction:
    """First variation ``g`` with ``dE(u; v) = Re <g, v>`` (weighted inner
    product).  On Dirichlet domains the clamped layer gets zero gradient."""
    if u.domain != spec.domain:
        raise ValueError("function lives on another domain")
    return GridFunction(u.domain, energy_gradient_values(spec, u.values))


# ---------------------------------------------------------------------------
# initial data


def gaussian_offset(domain: Domain, center) -> np.ndarray:
    c = np.broadcast_to(np.asarray(center, dtype=float), (domain.ndim,)).copy()
    if domain.kind == "cylinder":
        c[1] = 0.0
    x = domain.coords()
    r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c))
    if domain.kind == "cylinder":
        # bump in z, tilted in theta so the start is not rotation invariant
        return np.exp(-((x[0] - c[0]) ** 2) / 2.0) * (1.0 + 0.5 * np.cos(x[1]))
    return np.exp(-r2 / 2.0)


def random_start(domain: Domain, seed: int) -> np.ndarray:
    """Positive sum of 3 to 6 Gaussian bumps at random, off-centre positions."""
    rng = np.random.default_rng(seed)
    x = domain.coords()
    L = domain.extents[0]
    out = np.zeros(domain.shape)
    for _ in range(int(rng.integers(3, 7))):
        amp = rng.uniform(0.2, 1.0)
        width = rng.uniform(0.5, 1.5) * L / 8.0
        if domain.kind == "cylinder":
            cz = rng.uniform(-L / 2, L / 2)
            ct = rng.uniform(0, 2 * math.pi)
            r2 = (x[0] - cz) ** 2 + (2 * np.sin((x[1] - ct) / 2)) ** 2
        else:
            c = rng.uniform(-L / 2, L / 2, size=domain.ndim)
            r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c))
        out += amp * np.exp(-r2 / (2 * width * width))
    return out


def _initial(spec: EnergySpec, cfg: MinimizerConfig) -> np.ndarray:
    dom = spec.domain
    if cfg.initializer == "custom":
        if cfg.initial.domain != dom:
            raise ValueError("initial function lives on another domain")
        vals = np.array(cfg.initial.values)
    elif cfg.initializer == "random":
        vals = random_start(dom, cfg.seed)
    else:
        vals = gaussian_offset(dom, cfg.center)
    return _project(GridFunction(dom, vals).values, dom, spec.N)


def _project(vals: np.ndarray, domain: Domain, N: float) -> np.ndarray:
    mass = domain.cell_volume * float(np.vdot(vals, vals).real)
    if not mass > 0:
        raise ValueError("cannot normalize the zero function")
    return vals * math.sqrt(N / mass)


# ---------------------------------------------------------------------------
# preconditioners


def _laplacian_1d(n: int, h: float, periodic: bool) -> sparse.csr_matrix:
    main = np.full(n, 2.0)
    if not periodic:
        main[0] = main[-1] = 1.0
    off = np.ones(n - 1)
    mat = sparse.diags([-off, main, -off], [-1, 0, 1], format="lil")
    if periodic:
        mat[0, n - 1] = mat[n - 1, 0] = -1.0
    return (mat / (h * h)).tocsr()


def kinetic_matrix(domain: Domain) -> sparse.csr_matrix:
    """Sparse matrix of :func:`symground.energy.neg_laplacian`."""
    mats = [_laplacian_1d(n, h, per)
            for n, h, per in zip(domain.resolution, domain.spacing, domain.periodic)]
    if len(mats) == 1:
        return mats[0]
    eye = [sparse.identity(n, format="csr") for n in domain.resolution]
    return (sparse.kron(mats[0], eye[1]) + sparse.kron(eye[0], mats[1])).tocsr()


class _Preconditioner:
    def __init__(self, spec: EnergySpec, cfg: MinimizerConfig):
        self.domain = spec.domain
        self.free = ~spec.domain.boundary_mask() if spec.domain.dirichlet else \
            np.ones(spec.domain.shape, dtype=bool)
        self.kind = "identity" if not cfg.precondition else spec.kinetic
        if self.kind == "classical":
            A = kinetic_matrix(self.domain) + cfg.sigma * sparse.identity(self.domain.size)
            if spec.V is not None:
                A = A + sparse.diags(np.maximum(np.real(spec.V.values), 0).reshape(-1))
            idx = np.flatnonzero(self.free.reshape(-1))
            self.idx = idx
            self.solve = splinalg.factorized(A.tocsr()[idx][:, idx].tocsc())
        elif self.kind == "relativistic":
            self.shape, mult = _spectral_parts(self.domain, spec.m)
            self.inv = 1.0 / (cfg.sigma + mult)

    def __call__(self, vals: np.ndarray) -> np.ndarray:
        if self.kind == "classical":
            out = np.zeros(self.domain.size, dtype=vals.dtype)
            flat = vals.reshape(-1)[self.idx]
            if np.iscomplexobj(flat):
                out[self.idx] = self.solve(flat.real) + 1j * self.solve(flat.imag)
            else:
                out[self.idx] = self.solve(flat)
            return out.reshape(self.domain.shape)
        if self.kind == "relativistic":
            res = sfft.ifftn(self.inv * sfft.fftn(vals, s=self.shape))
            res = res[tuple(slice(0, n) for n in self.domain.resolution)]
            res = res if np.iscomplexobj(vals) else res.real
            return np.where(self.free, res, 0)
        return np.where(self.free, vals, 0)


# ---------------------------------------------------------------------------
# descent


def ground_state(spec: EnergySpec, cfg: MinimizerConfig | None = None,
                 group: GroupQuadrature | None = None) -> RunTrace:
    """Minimize ``spec`` on ``||u||_2^2 = N``.

    With ``group`` given, the symmetry deviation of the iterate is recorded
    every ``cfg.deviation_every`` iterations (and always at the end).
    """
    cfg = cfg or MinimizerConfig()
    dom = spec.domain
    w = dom.cell_volume
    trace = RunTrace(spec)
    precond = _Preconditioner(spec, cfg)

    def energy(vals):
        # trial points may carry the slow tail of the relativistic gradient;
        # only the final iterate is checked for decay
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return total_energy(spec, GridFunction(dom, vals))

    def record(vals, e, step, ok, it):
        trace.energies.append(e)
        trace.steps.append(step)
        trace.residuals.append(abs(w * float(np.vdot(vals, vals).real) - spec.N))
        if group is not None and (it % cfg.deviation_every == 0):
            trace.deviations.append(symmetry_deviation(GridFunction(dom, vals), group))
        else:
            trace.deviations.append(math.nan)
        trace.accepted.append(ok)

    u = _initial(spec, cfg)
    e = energy(u)
    record(u, e, 0.0, True, 0)
    tau = cfg.step
    streak = 0
    it = 0
    if cfg.gradient_check:
        from .verify import gradient_check
        err = gradient_check(spec, GridFunction(dom, u), directions=5, seed=cfg.seed)
        if err > 1e-5:
            raise RuntimeError(f"gradient check failed: relative error {err:.3g}")
    while it < cfg.max_iters:
        it += 1
        g = energy_gradient_values(spec, u)
        pg = precond(g)
        pu = precond(u)
        denom = float(np.vdot(u, pu).real)
        mu = float(np.vdot(u, pg).real) / denom
        d = pg - mu * pu
        if not np.any(d):
            trace.converged, trace.message = True, "zero projected gradient"
            break
        while True:
            trial = _project(u - tau * d, dom, spec.N)
            e_new = energy(trial)
            if not math.isfinite(e_new):
                trace.message = "non-finite energy"
                raise FloatingPointError("energy became non-finite during descent")
            if e_new <= e:
                break
            tau *= cfg.backtrack
            if tau < 1e-14 * cfg.step:
                break
        if e_new > e:
            # no decrease along the descent direction: stationary to round-off
            record(u, e, tau, False, it)
            trace.converged = streak > 0
            trace.message = "step length underflow"
            break
        rel = abs(e - e_new) / max(abs(e_new), 1e-300)
        u, e = trial, e_new
        record(u, e, tau, True, it)
        tau *= cfg.growth
        streak = streak + 1 if rel < cfg.tol_energy else 0
        if streak >= cfg.patience:
            trace.converged, trace.message = True, "energy change below tolerance"
            break
    else:
        trace.message = "max_iters reached"
    trace.u = GridFunction(dom, u)
    trace.energy = e
    if spec.kinetic == "relativistic":
        total_energy(spec, trace.u)
    trace.iterations = it
    if group is not None and math.isnan(trace.deviations[-1]):
        trace.deviations[-1] = symmetry_deviation(trace.u, group)
    return trace


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class SymmetryRow:
    deviation: float
    energy: float
    energy_mean: float
    gap: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def symmetry_report(trace: RunTrace, group: GroupQuadrature, rel_tol: float = 1e-6) -> SymmetryRow:
    """Compare ``E[u]`` with ``E`` of the normalized orbital mean ``M_2(u)``.

    ``gap = E[u] - E[M_2(u) / ||.|| * sqrt(N)]``; the symmetrization theorems
    say it is nonnegative, so the row passes when ``gap >= -rel_tol |E[u]|``.
    """
    spec = trace.spec
    u = trace.u
    m2 = orbital_mean(u, group, 2.0)
    m2 = GridFunction(u.domain, _project(m2.values, u.domain, spec.N))
    e_u = total_energy(spec, u)
    e_m = total_energy(spec, m2)
    gap = e_u - e_m
    tol = rel_tol * abs(e_u)
    return SymmetryRow(symmetry_deviation(u, group), e_u, e_m, gap, tol, gap >= -tol)
