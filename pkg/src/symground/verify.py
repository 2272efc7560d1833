"""Randomized verification of the symmetrization inequalities on grids.

Each catalogue row draws seeded random functions, evaluates both sides of one
identity or inequality and records a normalized slack per trial:

* inequality rows: ``(rhs - lhs) / scale`` for ``lhs <= rhs`` claims (and the
  mirror image for ``>=``), passing when the smallest slack is at least
  ``-tol``;
* equality rows: ``|lhs - rhs| / scale``, passing when the largest deviation
  is at most ``tol``.  The tolerance depends on whether the group acts by
  exact index maps or by interpolation.

``scale`` is a natural magnitude for the row (usually the larger side), so the
tolerances are relative.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import ndimage

from .energy import (EnergySpec, kinetic_T, relativistic_pair_sum, total_energy)
from .grid import Domain, GridFunction, integrate
from .groups import GroupQuadrature, GroupSpec, build_group, is_invariant, orbit
from .kernels import Kernel, bilinear, convolve, convolve_table, positive_definite_check
from .symmetrize import power_mean, sdr

Smoothness = Literal["smooth", "rough", "indicator"]

EQ_TOL_EXACT = 1e-10
EQ_TOL_INTERP = 1e-5
INEQ_TOL = 1e-9

ROW_IDS = (
    "norm_preservation", "mono_logconvex", "grad_convexity", "kinetic_symm",
    "potential_equality", "conv_invariance", "conv_symm_I", "conv_symm_II",
    "pair_mean", "triple_conv", "g_riesz", "rel_ke_symm", "jensen_nl",
    "sdr_polya_szego", "sdr_hardy_littlewood", "sdr_riesz",
)
EQUALITY_ROWS = {"norm_preservation", "potential_equality", "conv_invariance"}
SDR_ROWS = {"sdr_polya_szego", "sdr_hardy_littlewood", "sdr_riesz"}
_NO_CYLINDER = SDR_ROWS | {"rel_ke_symm"}


# ---------------------------------------------------------------------------
# random test functions


def random_function(domain: Domain, seed, smoothness: Smoothness = "smooth",
                    positive: bool = False) -> GridFunction:
    """Seeded random test function.

    smooth
        sum of 1 to 8 Gaussian bumps, centres within a quarter of the box and
        widths ``0.6 .. 0.9 * L / 8``, so the sum has decayed at the boundary
    rough
        low-pass filtered noise under a Gaussian envelope
    indicator
        union of up to 4 intervals or rectangles, values in {0, 1}
    """
    rng = np.random.default_rng(seed)
    x = domain.coords()
    L = domain.extents[0]
    cyl = domain.kind == "cylinder"
    if smoothness == "smooth":
        out = np.zeros(domain.shape)
        for _ in range(int(rng.integers(1, 9))):
            amp = rng.uniform(0.3, 1.0)
            if not positive and rng.random() < 0.5:
                amp = -amp
            width = rng.uniform(0.6, 0.9) * L / 8.0
            if cyl:
                cz = rng.uniform(-L / 4, L / 4)
                ct = rng.uniform(0, 2 * math.pi)
                r2 = (x[0] - cz) ** 2 + (2 * np.sin((x[1] - ct) / 2)) ** 2
            else:
                c = rng.uniform(-L / 4, L / 4, size=domain.ndim)
                r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c))
            out += amp * np.exp(-r2 / (2 * width * width))
    elif smoothness == "rough":
        noise = rng.standard_normal(domain.shape)
        modes = ["wrap" if per else "constant" for per in domain.periodic]
        out = ndimage.gaussian_filter(noise, sigma=2.0, mode=modes)
        env = np.exp(-(domain.radius() ** 2) / (2 * (L / 3) ** 2))
        out = out * env
        out /= max(np.abs(out).max(), 1e-300)
        if positive:
            out = np.abs(out)
    elif smoothness == "indicator":
        out = np.zeros(domain.shape, dtype=bool)
        for _ in range(int(rng.integers(1, 5))):
            box = np.ones(domain.shape, dtype=bool)
            for a in range(domain.ndim):
                if domain.periodic[a]:
                    lo, width = rng.uniform(0, 2 * math.pi), rng.uniform(0.5, 3.0)
                    box &= np.mod(x[a] - lo, 2 * math.pi) <= width
                else:
                    lo, hi = np.sort(rng.uniform(-L / 2, L / 2, size=2))
                    box &= (x[a] >= lo) & (x[a] <= hi)
            out |= box
        out = out.astype(float)
    else:
        raise ValueError(f"unknown smoothness {smoothness!r}")
    return GridFunction(domain, out)


# ---------------------------------------------------------------------------
# cases and reports


@dataclass
class PropertyCase:
    id: str
    domain: Domain
    group: GroupSpec
    trials: int = 50
    seed: int = 0
    tolerance: float | None = None
    kernel: Kernel | None = None
    m: float = 1.0

    def __post_init__(self) -> None:
        if self.id not in ROW_IDS:
            raise ValueError(f"unknown property {self.id!r}")
        if self.trials < 1:
            raise ValueError("a property case needs at least one trial")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class RowResult:
    id: str
    domain: str
    group: str
    map_class: str
    trials: int
    tolerance: float
    min_slack: float
    max_violation: float
    passed: bool
    status: str = "ok"
    message: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


CSV_COLUMNS = ("id", "trials", "min_slack", "max_violation", "pass",
               "domain", "group", "map_class", "tolerance", "status")


@dataclass
class SuiteReport:
    rows: list[RowResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in self.rows:
            wr.writerow([r.id, r.trials, _fmt(r.min_slack), _fmt(r.max_violation),
                         "true" if r.passed else "false", r.domain, r.group, r.map_class,
                         _fmt(r.tolerance), r.status])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"pass": self.passed, "rows": [r.as_dict() for r in self.rows]},
                          indent=2, sort_keys=True)


def _fmt(x: float) -> str:
    return "%.17g" % x


class Misconfigured(ValueError):
    """The case cannot test its property (e.g. a kernel that is not positive definite)."""


# ---------------------------------------------------------------------------
# shared per-case data


@dataclass(eq=False)
class _Context:
    case: PropertyCase
    group: GroupQuadrature
    _diff_group: GroupQuadrature | None = None

    @property
    def domain(self) -> Domain:
        return self.case.domain

    @property
    def exact(self) -> bool:
        return self.group.exact

    @property
    def diff_group(self) -> GroupQuadrature | None:
        """The group acting on differences ``x - y``.  Cylinder shifts are
        translations, which leave differences fixed: ``None`` stands for that
        trivial action."""
        if self.domain.kind == "cylinder":
            return None
        if self._diff_group is None:
            self._diff_group = self.group.for_domain(self.domain.difference_domain())
        return self._diff_group

    def smoothness(self, trial: int) -> Smoothness:
        if not self.exact:
            return "smooth"
        return ("smooth", "rough", "indicator")[trial % 3]

    def func(self, rng, trial, positive=False, smoothness=None, domain=None) -> GridFunction:
        return random_function(domain or self.domain, rng.integers(2**63),
                               smoothness or self.smoothness(trial), positive=positive)

    def invariant_potential(self) -> GridFunction:
        return GridFunction(self.domain, self.domain.radius() ** 2)

    def invariant_density(self) -> GridFunction:
        rho = GridFunction(self.domain, np.exp(-(self.domain.radius() ** 2) / (2 * 1.5**2)))
        return GridFunction(self.domain, rho.values / integrate(rho))

    def gaussian(self) -> Kernel:
        # narrow enough that h * u has decayed before the box edge
        return _gaussian(self.domain.extents[0] / 16.0)

    def pd_kernel(self) -> Kernel:
        return self.case.kernel or self.gaussian()

    def mean_zero_kernel(self) -> Kernel:
        if self.case.kernel is not None:
            return self.case.kernel
        return Kernel("neg_abs") if self.domain.kind == "line1d" else self.gaussian()


_KERNELS: dict = {}


def _gaussian(sigma: float) -> Kernel:
    # shared so the sampled ring and its transform are cached across trials
    key = ("gaussian", sigma)
    if key not in _KERNELS:
        _KERNELS[key] = Kernel("gaussian", sigma=sigma)
    return _KERNELS[key]


def _m(stack, group, p):
    return power_mean(stack, group.weights, p)


def _ineq(lhs, rhs, scale, claim="<="):
    s = (rhs - lhs) if claim == "<=" else (lhs - rhs)
    return s / max(scale, 1e-300)


# ---------------------------------------------------------------------------
# catalogue rows; each returns one normalized slack (or deviation) per trial


def _norm_preservation(ctx: _Context, rng, trial):
    u = ctx.func(rng, trial, positive=not ctx.exact)
    a = np.abs(u.values)
    st = orbit(u.values, ctx.group)
    dev = 0.0
    for p in (1.0, 2.0, 3.0, 4.0):
        lhs = np.sum(_m(st, ctx.group, p) ** p)
        rhs = np.sum(a**p)
        dev = max(dev, abs(lhs - rhs) / max(rhs, 1e-300))
    return dev


def _mono_logconvex(ctx, rng, trial):
    u = ctx.func(rng, trial)
    st = orbit(u.values, ctx.group)
    p, q, r = np.sort(rng.uniform(1.0, 6.0, size=3))
    theta = (1 / q - 1 / r) / (1 / p - 1 / r)
    mp, mq, mr = (_m(st, ctx.group, e) for e in (p, q, r))
    scale = max(np.abs(u.values).max(), 1e-300)
    mono = min((mq - mp).min(), (mr - mq).min())
    logc = (mp**theta * mr ** (1 - theta) - mq).min()
    return min(mono, logc) / scale


def _forward_diffs(stack: np.ndarray, domain: Domain) -> list[np.ndarray]:
    """Forward differences of every slice along each grid axis, cropped to
    the nodes where all forward neighbours exist."""
    nd = domain.ndim
    lead = stack.ndim - nd
    crop = tuple([slice(None)] * lead + [slice(None) if per else slice(0, -1)
                                         for per in domain.periodic])
    out = []
    for a, (h, per) in enumerate(zip(domain.spacing, domain.periodic)):
        ax = lead + a
        d = (np.roll(stack, -1, axis=ax) - stack) / h
        if not per:
            d[tuple([slice(None)] * ax + [-1])] = 0.0
        out.append(d[crop])
    return out


def _grad_convexity(ctx, rng, trial):
    u = ctx.func(rng, trial)
    p = float(rng.choice([1.0, 1.5, 2.0]))
    st = orbit(u.values, ctx.group)
    mp = _m(st, ctx.group, p)
    dm = _forward_diffs(mp, ctx.domain)
    df = _forward_diffs(st, ctx.domain)
    lhs = np.sqrt(sum(d * d for d in dm))
    mag = np.sqrt(sum(np.abs(d) ** 2 for d in df))
    rhs = _m(mag, ctx.group, p)
    return float((rhs - lhs).min()) / max(rhs.max(), 1e-300)


def _kinetic_symm(ctx, rng, trial):
    u = ctx.func(rng, trial)
    m2 = GridFunction(ctx.domain, _m(orbit(u.values, ctx.group), ctx.group, 2.0))
    lhs, rhs = kinetic_T(u), kinetic_T(m2)
    return _ineq(lhs, rhs, lhs, ">=")


def _potential_equality(ctx, rng, trial):
    u = ctx.func(rng, trial, positive=not ctx.exact)
    V = ctx.invariant_potential().values
    m2 = _m(orbit(u.values, ctx.group), ctx.group, 2.0)
    lhs = np.sum(V * np.abs(u.values) ** 2)
    rhs = np.sum(V * m2**2)
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)


def _signed_average(values, group):
    w = group.weights.reshape((-1,) + (1,) * values.ndim)
    return (w * orbit(values, group)).sum(axis=0)


def _conv_invariance(ctx, rng, trial):
    u = ctx.func(rng, trial)
    U = _signed_average(u.values, ctx.group)
    c = GridFunction(ctx.domain, convolve(ctx.pd_kernel(), U, ctx.domain))
    return is_invariant(c, ctx.group)[1]


def _conv_symm_I(ctx, rng, trial):
    k = ctx.pd_kernel()
    u = ctx.func(rng, trial)
    U = _signed_average(u.values, ctx.group)
    lhs = bilinear(k, u.values, u.values, ctx.domain)
    rhs = bilinear(k, U, U, ctx.domain)
    return _ineq(lhs, rhs, lhs, ">=")


def _conv_symm_II(ctx, rng, trial):
    k = ctx.mean_zero_kernel()
    rho = ctx.invariant_density().values
    u = ctx.func(rng, trial, positive=True, smoothness="smooth")
    u = u.values / integrate(u)  # same mass as rho
    U = _signed_average(u, ctx.group)
    lhs = bilinear(k, u - rho, u - rho, ctx.domain)
    rhs = bilinear(k, U - rho, U - rho, ctx.domain)
    w = ctx.domain.cell_volume
    scale = np.abs(k.ring(ctx.domain)).max() * (w * np.abs(u - rho).sum()) ** 2
    return _ineq(lhs, rhs, scale, ">=")


def _pair_mean(ctx, rng, trial):
    u = ctx.func(rng, trial)
    v = ctx.func(rng, trial)
    p = float(rng.choice([1.5, 2.0, 3.0, 4.0]))
    q = p / (p - 1)
    mu = _m(orbit(u.values, ctx.group), ctx.group, p)
    mv = _m(orbit(v.values, ctx.group), ctx.group, q)
    lhs = np.sum(u.values * v.values)
    rhs = np.sum(mu * mv)
    w = ctx.domain.cell_volume
    scale = (w * np.sum(np.abs(u.values) ** p)) ** (1 / p) \
        * (w * np.sum(np.abs(v.values) ** q)) ** (1 / q) / w
    return _ineq(lhs, rhs, scale)


def triple_integral(u: np.ndarray, v_diff: np.ndarray, w: np.ndarray, domain: Domain) -> float:
    """``sum_ij w^2 u_i v(x_i - x_j) w_j`` with ``v`` on the difference grid."""
    return float(domain.cell_volume * np.sum(u * convolve_table(v_diff, w, domain)))


def _triple_conv(ctx, rng, trial):
    dd = ctx.domain.difference_domain()
    u = ctx.func(rng, trial, positive=True)
    w = ctx.func(rng, trial, positive=True)
    v = ctx.func(rng, trial, positive=True, domain=dd)
    inv = rng.dirichlet([2.0, 2.0, 2.0])
    p, q, r = 1 / inv
    mu = _m(orbit(np.abs(u.values), ctx.group), ctx.group, p)
    mw = _m(orbit(np.abs(w.values), ctx.group), ctx.group, r)
    dg = ctx.diff_group
    mv = np.abs(v.values) if dg is None else _m(orbit(np.abs(v.values), dg), dg, q)
    lhs = triple_integral(np.abs(u.values), np.abs(v.values), np.abs(w.values), ctx.domain)
    rhs = triple_integral(mu, mv, mw, ctx.domain)
    return _ineq(lhs, rhs, max(abs(lhs), abs(rhs)))


def _g_riesz(ctx, rng, trial):
    k = ctx.gaussian()
    u = ctx.func(rng, trial, positive=True)
    v = ctx.func(rng, trial, positive=True)
    mu = _m(orbit(u.values, ctx.group), ctx.group, 2.0)
    mv = _m(orbit(v.values, ctx.group), ctx.group, 2.0)
    lhs = bilinear(k, u.values, v.values, ctx.domain)
    rhs = bilinear(k, mu, mv, ctx.domain)
    return _ineq(lhs, rhs, max(abs(lhs), abs(rhs)))


def _rel_ke_symm(ctx, rng, trial):
    u = ctx.func(rng, trial)
    m2 = _m(orbit(u.values, ctx.group), ctx.group, 2.0)
    lhs = relativistic_pair_sum(u.values, ctx.domain, ctx.case.m)
    rhs = relativistic_pair_sum(m2, ctx.domain, ctx.case.m)
    return _ineq(lhs, rhs, lhs, ">=")


def _jensen_nl(ctx, rng, trial):
    u = ctx.func(rng, trial)
    p = float(rng.choice([1.0, 2.0, 3.0]))
    gamma = rng.uniform(1.2, 3.0)
    a = np.exp(-(ctx.domain.radius() ** 2) / 8.0)
    mp = _m(orbit(u.values, ctx.group), ctx.group, p)
    lhs = np.sum(a * (np.abs(u.values) ** p) ** gamma)
    rhs = np.sum(a * (mp**p) ** gamma)
    return _ineq(lhs, rhs, lhs, ">=")


def _sdr_smoothness(trial) -> Smoothness:
    return ("smooth", "rough")[trial % 2]


def _sdr_polya_szego(ctx, rng, trial):
    # indicators are exempt: their discrete gradient is a perimeter, not an H^1 norm
    u = ctx.func(rng, trial, smoothness=_sdr_smoothness(trial))
    lhs, rhs = kinetic_T(u), kinetic_T(sdr(u))
    return _ineq(lhs, rhs, lhs, ">=")


def _sdr_hardy_littlewood(ctx, rng, trial):
    kinds = ("smooth", "rough", "indicator")
    u = ctx.func(rng, trial, smoothness=kinds[trial % 3])
    v = ctx.func(rng, trial, smoothness=kinds[(trial + 1) % 3])
    us, vs = sdr(u).values, sdr(v).values
    s1 = _ineq(np.sum(u.values * v.values), np.sum(us * vs),
               np.linalg.norm(u.values) * np.linalg.norm(v.values))
    V = ctx.invariant_potential().values
    lhs = np.sum(V * np.abs(u.values) ** 2)
    s2 = _ineq(lhs, np.sum(V * us**2), lhs, ">=")
    return min(s1, s2)


def _sdr_riesz(ctx, rng, trial):
    k = ctx.gaussian()
    kinds = ("smooth", "rough", "indicator")
    u = ctx.func(rng, trial, smoothness=kinds[trial % 3])
    v = ctx.func(rng, trial, smoothness=kinds[(trial + 2) % 3])
    lhs = bilinear(k, u.values, v.values, ctx.domain)
    rhs = bilinear(k, sdr(u).values, sdr(v).values, ctx.domain)
    w = ctx.domain.cell_volume
    scale = w * w * np.abs(u.values).sum() * np.abs(v.values).sum()
    return _ineq(lhs, rhs, scale)


_ROWS: dict[str, Callable] = {
    "norm_preservation": _norm_preservation,
    "mono_logconvex": _mono_logconvex,
    "grad_convexity": _grad_convexity,
    "kinetic_symm": _kinetic_symm,
    "potential_equality": _potential_equality,
    "conv_invariance": _conv_invariance,
    "conv_symm_I": _conv_symm_I,
    "conv_symm_II": _conv_symm_II,
    "pair_mean": _pair_mean,
    "triple_conv": _triple_conv,
    "g_riesz": _g_riesz,
    "rel_ke_symm": _rel_ke_symm,
    "jensen_nl": _jensen_nl,
    "sdr_polya_szego": _sdr_polya_szego,
    "sdr_hardy_littlewood": _sdr_hardy_littlewood,
    "sdr_riesz": _sdr_riesz,
}


def _check_config(ctx: _Context) -> None:
    cid = ctx.case.id
    if cid in _NO_CYLINDER and ctx.domain.kind == "cylinder":
        raise Misconfigured(f"{cid} is not defined on the cylinder")
    if cid == "conv_symm_I":
        ok, lo = positive_definite_check(ctx.pd_kernel(), ctx.domain, "all")
        if not ok:
            raise Misconfigured(f"kernel {ctx.pd_kernel().describe()} is not positive "
                                f"definite (min eigenvalue {lo:.3g})")
    if cid == "conv_symm_II":
        ok, lo = positive_definite_check(ctx.mean_zero_kernel(), ctx.domain, "mean_zero")
        if not ok:
            raise Misconfigured(f"kernel {ctx.mean_zero_kernel().describe()} is not positive "
                                f"definite on mean-zero functions (min eigenvalue {lo:.3g})")
    k = ctx.pd_kernel() if cid != "conv_symm_II" else ctx.mean_zero_kernel()
    # built-in kernels are radial, hence invariant; only tables need a check
    if (cid in ("conv_invariance", "conv_symm_I", "conv_symm_II") and k.kind == "table"
            and ctx.diff_group is not None):
        kc = k.centred(ctx.domain)
        ok, dev = is_invariant(kc, ctx.diff_group, 1e-10 if ctx.diff_group.exact else 1e-5)
        if not ok:
            raise Misconfigured(f"kernel is not invariant under the group (deviation {dev:.3g})")


def case_seed(case: PropertyCase) -> np.random.SeedSequence:
    tag = f"{case.id}|{case.domain.describe()}|{case.group.describe()}"
    return np.random.SeedSequence([case.seed, zlib.crc32(tag.encode())])


def default_tolerance(case_id: str, exact: bool) -> float:
    if case_id in EQUALITY_ROWS:
        return EQ_TOL_EXACT if exact else EQ_TOL_INTERP
    return INEQ_TOL


def run_case(case: PropertyCase) -> RowResult:
    group = build_group(case.group, case.domain)
    ctx = _Context(case, group)
    tol = case.tolerance if case.tolerance is not None else default_tolerance(case.id, group.exact)
    base = dict(id=case.id, domain=case.domain.kind, group=case.group.describe(),
                map_class=group.map_class, trials=case.trials, tolerance=tol)
    try:
        _check_config(ctx)
    except Misconfigured as exc:
        return RowResult(**base, min_slack=math.nan, max_violation=math.nan, passed=False,
                         status="misconfigured", message=str(exc))
    rng = np.random.default_rng(case_seed(case))
    fn = _ROWS[case.id]
    try:
        vals = [float(fn(ctx, rng, t)) for t in range(case.trials)]
    except Exception as exc:  # reported as a failed row
        return RowResult(**base, min_slack=math.nan, max_violation=math.nan, passed=False,
                         status="error", message=f"{type(exc).__name__}: {exc}")
    if case.id in EQUALITY_ROWS:
        dev = max(vals)
        return RowResult(**base, min_slack=-dev, max_violation=dev, passed=dev <= tol)
    lo = min(vals)
    return RowResult(**base, min_slack=lo, max_violation=max(0.0, -lo), passed=lo >= -tol)


# ---------------------------------------------------------------------------
# suite


@dataclass
class SuiteConfig:
    entries: list[tuple[Domain, GroupSpec]] = field(default_factory=lambda: default_matrix())
    trials: int = 50
    seed: int = 0
    rows: tuple[str, ...] = ROW_IDS
    kernel: Kernel | None = None
    m: float = 1.0
    tolerance: float | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("the suite needs at least one trial per row")
        bad = [r for r in self.rows if r not in ROW_IDS]
        if bad:
            raise ValueError(f"unknown property ids: {', '.join(bad)}")
        for dom, gs in self.entries:
            if not gs.compatible_with(dom):
                raise ValueError(f"group {gs.describe()} cannot act on a {dom.kind} domain")


def default_matrix() -> list[tuple[Domain, GroupSpec]]:
    plane = Domain.plane(8.0, 64)
    return [
        (Domain.line(8.0, 257), GroupSpec("reflection_z2")),
        (plane, GroupSpec("rotation_zn", n=4)),
        (plane, GroupSpec("circle_so2", m_quad=64)),
        (Domain.cylinder(8.0, 64, 64), GroupSpec("cylinder_shift", m_quad=64)),
    ]


def suite_cases(config: SuiteConfig) -> list[PropertyCase]:
    """Cases in report order.  The rearrangement rows are group-free, so they
    run once per domain; rows that do not apply to the cylinder are skipped."""
    cases = []
    seen_sdr = set()
    for dom, gs in config.entries:
        for rid in config.rows:
            if rid in _NO_CYLINDER and dom.kind == "cylinder":
                continue
            if rid in SDR_ROWS:
                if (dom, rid) in seen_sdr:
                    continue
                seen_sdr.add((dom, rid))
            cases.append(PropertyCase(rid, dom, gs, config.trials, config.seed,
                                      config.tolerance, config.kernel, config.m))
    return cases


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SYMGROUND_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(config: SuiteConfig | None = None, progress: Callable[[RowResult], None] | None = None
              ) -> SuiteReport:
    config = config or SuiteConfig()
    cases = suite_cases(config)
    n = _threads()
    if n == 1:
        rows = []
        for c in cases:
            rows.append(run_case(c))
            if progress:
                progress(rows[-1])
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            rows = list(ex.map(run_case, cases))
        if progress:
            for r in rows:
                progress(r)
    return SuiteReport(rows)


# ---------------------------------------------------------------------------
# finite-difference gradient check


def gradient_check(spec: EnergySpec, u: GridFunction, directions: int = 20, seed=0,
                   eps: float = 1e-5) -> float:
    """Worst relative error between ``Re <g, v>`` and the central difference
    ``(E[u + t v] - E[u - t v]) / 2t`` over random smooth directions ``v``.

    ``t = eps * ||u|| / ||v||``.  The error is divided by
    ``max(|<g, v>|, 1e-3 ||g|| ||v||)`` so a direction almost orthogonal to the
    gradient does not turn round-off into a large relative error.
    """
    from .minimizer import energy_gradient

    g = energy_gradient(spec, u).values
    w = spec.domain.cell_volume
    rng = np.random.default_rng(seed)
    worst = 0.0
    nu = math.sqrt(w * float(np.vdot(u.values, u.values).real)) or 1.0
    for _ in range(directions):
        v = random_function(spec.domain, rng.integers(2**63), "smooth").values
        if np.iscomplexobj(u.values):
            v = v + 1j * random_function(spec.domain, rng.integers(2**63), "smooth").values
        nv = math.sqrt(w * float(np.vdot(v, v).real))
        t = eps * nu / nv
        ep = total_energy(spec, GridFunction(spec.domain, u.values + t * v))
        em = total_energy(spec, GridFunction(spec.domain, u.values - t * v))
        fd = (ep - em) / (2 * t)
        an = w * float(np.vdot(g, v).real)
        gn = math.sqrt(w * float(np.vdot(g, g).real))
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-3 * gn * nv, 1e-300))
    return worst
