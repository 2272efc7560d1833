"""``symground`` command line.

Every run is described by a JSON config; the flags only locate it and
override the output directory and seed.  Subcommands:

verify
    run the verification catalogue; writes ``report.csv`` and ``report.json``
minimize
    compute a constrained ground state; prints a JSON summary and writes
    ``trace.csv`` and ``u.csv``
mean
    orbital mean ``M_p`` (or the signed average) of an input function;
    writes ``mean.csv``
rearrange
    symmetric decreasing rearrangement of an input function; writes
    ``rearranged.csv``
kernel-check
    DFT positive-definiteness certificate of a kernel; writes
    ``kernel_check.json``

Exit codes: 0 success, 1 suite failure / non-convergence / failed
certificate, 2 configuration error.

Config defaults (``{"command": "verify"}`` is a complete config)::

    seed      0
    domain    {"kind": "line1d", "L": 8.0, "n": 257, "dirichlet": true}
              plane2d defaults to n = 64, cylinder to n = 64, n_theta = 64
    group     {"kind": "reflection_z2"} (rotation_zn n = 4, circle_so2 and
              cylinder_shift m_quad = 64, interp "spline")
    suite     {"trials": 50, "rows": all, "m": 1.0}
    energy    {"kinetic": "classical", "V": {"kind": "harmonic"}, "b": 0, "N": 1}
    minimizer {"initializer": "gaussian_offset", "center": 1.5, "max_iters": 20000,
               "tol_energy": 1e-12, "step": 0.5, "backtrack": 0.5, "growth": 1.5}

``verify`` without explicit ``domain``/``group`` blocks runs the default
matrix: line1d + reflection_z2, plane2d + rotation_zn(4), plane2d +
circle_so2(64), cylinder + cylinder_shift(64).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .energy import EnergySpec, Nonlinearity
from .grid import Domain, GridFunction, integrate, lp_norm
from .groups import GroupSpec, build_group
from .io import read_grid_function, write_grid_function
from .kernels import Kernel, positive_definite_check
from .minimizer import MinimizerConfig, ground_state, symmetry_report
from .symmetrize import orbital_mean, sdr, signed_orbital_average, symmetry_deviation
from .verify import ROW_IDS, SuiteConfig, random_function, run_suite

COMMANDS = ("verify", "minimize", "mean", "rearrange", "kernel-check")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schema helpers


def _block(cfg: dict, name: str, allowed: set[str], where: str = "") -> dict:
    blk = cfg.get(name, {})
    if blk is None:
        blk = {}
    if not isinstance(blk, dict):
        raise ConfigError(f"{where}{name} must be an object")
    _no_unknown(blk, allowed, f"{where}{name}")
    return blk


def _no_unknown(obj: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where}")


def _num(obj: dict, key: str, default, kind=float):
    val = obj.get(key, default)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{key} must be an integer")
        return val
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"{key} must be true or false")
        return val
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key} must be a number")
    return float(val)


_TOP = {"command", "seed", "domain", "group", "energy", "minimizer", "suite", "input",
        "mean", "kernel", "kernel_check", "output"}


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    domain: Domain | None = None
    group: GroupSpec | None = None
    explicit_matrix: bool = False
    raw: dict = field(default_factory=dict)
    base: Path = Path(".")


def parse_domain(blk: dict, where="domain") -> Domain:
    _no_unknown(blk, {"kind", "L", "n", "n_theta", "dirichlet"}, where)
    kind = blk.get("kind", "line1d")
    L = _num(blk, "L", 8.0)
    dirichlet = _num(blk, "dirichlet", True, bool)
    try:
        if kind == "line1d":
            if "n_theta" in blk:
                raise ConfigError("n_theta applies to the cylinder only")
            return Domain.line(L, _num(blk, "n", 257, int), dirichlet)
        if kind == "plane2d":
            if "n_theta" in blk:
                raise ConfigError("n_theta applies to the cylinder only")
            return Domain.plane(L, _num(blk, "n", 64, int), dirichlet)
        if kind == "cylinder":
            return Domain.cylinder(L, _num(blk, "n", 64, int), _num(blk, "n_theta", 64, int),
                                   dirichlet)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def parse_group(blk: dict, where="group") -> GroupSpec:
    _no_unknown(blk, {"kind", "n", "m_quad", "interp"}, where)
    try:
        return GroupSpec(blk.get("kind", "reflection_z2"), _num(blk, "n", 4, int),
                         _num(blk, "m_quad", 64, int), blk.get("interp", "spline"))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text: str, base: Path | None = None) -> RunConfig:
    """Validate a JSON config; unknown keys are errors."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _no_unknown(cfg, _TOP, "config")
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}; got {cmd!r}")
    seed = _num(cfg, "seed", 0, int)
    explicit = "domain" in cfg or "group" in cfg
    dom = parse_domain(_block(cfg, "domain", {"kind", "L", "n", "n_theta", "dirichlet"}))
    gblk = _block(cfg, "group", {"kind", "n", "m_quad", "interp"})
    if "kind" not in gblk:
        gblk = dict(gblk, kind={"line1d": "reflection_z2", "plane2d": "rotation_zn",
                                "cylinder": "cylinder_shift"}[dom.kind])
    gs = parse_group(gblk)
    if not gs.compatible_with(dom):
        raise ConfigError(f"group {gs.describe()} cannot act on a {dom.kind} domain")
    rc = RunConfig(cmd, seed, dom, gs, explicit, cfg, base or Path("."))
    # validate the blocks this command uses now, so errors exit with code 2
    if cmd == "verify":
        suite_config(rc)
    elif cmd == "minimize":
        energy_spec(rc)
        minimizer_config(rc)
    elif cmd in ("mean", "rearrange"):
        input_function(rc)
        if cmd == "mean":
            mean_options(rc)
        elif dom.kind == "cylinder":
            raise ConfigError("rearrange is defined on line1d and plane2d only")
    else:
        kernel_check_options(rc)
    return rc


# ---------------------------------------------------------------------------
# blocks


def _path(rc: RunConfig, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else rc.base / q


def parse_kernel(blk: dict, rc: RunConfig, where="kernel") -> Kernel:
    _no_unknown(blk, {"kind", "sigma", "a", "m", "path"}, where)
    kind = blk.get("kind")
    try:
        if kind == "table":
            if "path" not in blk:
                raise ConfigError(f"{where}: table kernel needs a path")
            t = read_grid_function(_path(rc, blk["path"]))
            if t.domain != rc.domain.difference_domain():
                raise ConfigError(f"{where}: table is not sampled on this domain's difference grid")
            return Kernel("table", table=np.real(t.values))
        return Kernel(kind, sigma=_num(blk, "sigma", 1.0), a=_num(blk, "a", 1.0),
                      m=_num(blk, "m", 1.0))
    except (ValueError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def _field(blk, rc: RunConfig, where: str, default_kind: str) -> GridFunction | None:
    """Potential-like fields: zero, harmonic (|x - c|^2 s), gaussian or csv."""
    if blk is None:
        blk = {"kind": default_kind}
    _no_unknown(blk, {"kind", "center", "scale", "width", "path"}, where)
    kind = blk.get("kind", default_kind)
    dom = rc.domain
    x = dom.coords()
    c = np.broadcast_to(np.asarray(blk.get("center", 0.0), dtype=float), (dom.ndim,))
    if dom.kind == "cylinder":
        r2 = (x[0] - c[0]) ** 2
    else:
        r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c))
    s = _num(blk, "scale", 1.0)
    if kind == "zero":
        return None
    if kind == "harmonic":
        return GridFunction(dom, s * r2)
    if kind == "gaussian":
        wd = _num(blk, "width", 1.5)
        return GridFunction(dom, s * np.exp(-r2 / (2 * wd * wd)))
    if kind == "csv":
        try:
            f = read_grid_function(_path(rc, blk["path"]))
        except (KeyError, OSError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if f.domain != dom:
            raise ConfigError(f"{where}: file domain does not match the config domain")
        return f
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def energy_spec(rc: RunConfig) -> EnergySpec:
    blk = _block(rc.raw, "energy", {"kinetic", "m", "V", "b", "kernel", "nonlinearity",
                                    "background", "N", "rel_method"})
    dom = rc.domain
    V = _field(blk.get("V"), rc, "energy.V", "harmonic")
    kernel = parse_kernel(blk["kernel"], rc, "energy.kernel") if blk.get("kernel") else None
    N = _num(blk, "N", 1.0)
    nl = None
    if blk.get("nonlinearity"):
        nb = blk["nonlinearity"]
        _no_unknown(nb, {"p", "gamma", "a"}, "energy.nonlinearity")
        a = _field(nb.get("a"), rc, "energy.nonlinearity.a", "zero") if "a" in nb else None
        try:
            nl = Nonlinearity(_num(nb, "p", 2.0), _num(nb, "gamma", 2.0), a)
        except ValueError as exc:
            raise ConfigError(f"energy.nonlinearity: {exc}") from None
    rho = None
    if blk.get("background"):
        rho = _field(blk["background"], rc, "energy.background", "gaussian")
        if rho is None:
            raise ConfigError("energy.background must be a nonzero density")
        total = integrate(rho)
        if not total > 0:
            raise ConfigError("energy.background must have positive integral")
        # rescale to the configured mass
        rho = GridFunction(dom, np.real(rho.values) * (N / total))
    try:
        return EnergySpec(dom, blk.get("kinetic", "classical"), _num(blk, "m", 1.0), V,
                          _num(blk, "b", 0.0), kernel, nl, rho, N,
                          blk.get("rel_method", "spectral"))
    except ValueError as exc:
        raise ConfigError(f"energy: {exc}") from None


def minimizer_config(rc: RunConfig) -> MinimizerConfig:
    blk = _block(rc.raw, "minimizer", {"step", "max_iters", "tol_energy", "gradient_check",
                                       "initializer", "center", "initial_path", "backtrack",
                                       "growth", "precondition", "sigma", "patience",
                                       "deviation_every"})
    init = blk.get("initializer", "gaussian_offset")
    initial = None
    if init == "custom":
        if "initial_path" not in blk:
            raise ConfigError("minimizer: custom initializer needs initial_path")
        try:
            initial = read_grid_function(_path(rc, blk["initial_path"]))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"minimizer.initial_path: {exc}") from None
    center = blk.get("center", 1.5)
    try:
        return MinimizerConfig(
            step=_num(blk, "step", 0.5), max_iters=_num(blk, "max_iters", 20000, int),
            tol_energy=_num(blk, "tol_energy", 1e-12),
            gradient_check=_num(blk, "gradient_check", False, bool), initializer=init,
            seed=rc.seed, center=center, initial=initial,
            backtrack=_num(blk, "backtrack", 0.5), growth=_num(blk, "growth", 1.5),
            precondition=_num(blk, "precondition", True, bool), sigma=_num(blk, "sigma", 1.0),
            patience=_num(blk, "patience", 10, int),
            deviation_every=_num(blk, "deviation_every", 1, int))
    except ValueError as exc:
        raise ConfigError(f"minimizer: {exc}") from None


def suite_config(rc: RunConfig) -> SuiteConfig:
    blk = _block(rc.raw, "suite", {"trials", "rows", "matrix", "m", "kernel", "tolerance"})
    rows = tuple(blk.get("rows", ROW_IDS))
    bad = [r for r in rows if r not in ROW_IDS]
    if bad:
        raise ConfigError(f"suite: unknown property id {bad[0]!r}")
    if "matrix" in blk:
        if rc.explicit_matrix:
            raise ConfigError("give either suite.matrix or top-level domain/group, not both")
        entries = []
        for i, ent in enumerate(blk["matrix"]):
            _no_unknown(ent, {"domain", "group"}, f"suite.matrix[{i}]")
            d = parse_domain(ent.get("domain", {}), f"suite.matrix[{i}].domain")
            g = parse_group(ent.get("group", {}), f"suite.matrix[{i}].group")
            if not g.compatible_with(d):
                raise ConfigError(f"suite.matrix[{i}]: group {g.describe()} cannot act on "
                                  f"a {d.kind} domain")
            entries.append((d, g))
    elif rc.explicit_matrix:
        entries = [(rc.domain, rc.group)]
    else:
        entries = None
    kernel = parse_kernel(blk["kernel"], rc, "suite.kernel") if blk.get("kernel") else None
    tol = blk.get("tolerance")
    try:
        kw = dict(trials=_num(blk, "trials", 50, int), seed=rc.seed, rows=rows, kernel=kernel,
                  m=_num(blk, "m", 1.0), tolerance=None if tol is None else float(tol))
        if entries is not None:
            kw["entries"] = entries
        return SuiteConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"suite: {exc}") from None


def input_function(rc: RunConfig) -> GridFunction:
    blk = _block(rc.raw, "input", {"path", "smoothness", "seed", "positive"})
    if "path" in blk:
        if len(blk) > 1:
            raise ConfigError("input: path excludes the random-function keys")
        try:
            u = read_grid_function(_path(rc, blk["path"]))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"input.path: {exc}") from None
        if u.domain != rc.domain:
            raise ConfigError("input: file domain does not match the config domain")
        return u
    sm = blk.get("smoothness", "smooth")
    if sm not in ("smooth", "rough", "indicator"):
        raise ConfigError(f"input: unknown smoothness {sm!r}")
    seed = _num(blk, "seed", rc.seed, int)
    return random_function(rc.domain, seed, sm, _num(blk, "positive", False, bool))


def mean_options(rc: RunConfig) -> tuple[float, bool]:
    blk = _block(rc.raw, "mean", {"p", "signed"})
    p = _num(blk, "p", 2.0)
    if p < 1:
        raise ConfigError("mean.p must be at least 1")
    return p, _num(blk, "signed", False, bool)


def kernel_check_options(rc: RunConfig) -> tuple[Kernel, str]:
    blk = _block(rc.raw, "kernel_check", {"mode"})
    mode = blk.get("mode", "all")
    if mode not in ("all", "mean_zero"):
        raise ConfigError(f"kernel_check.mode must be all or mean_zero; got {mode!r}")
    kb = rc.raw.get("kernel")
    if not kb:
        raise ConfigError("kernel-check needs a kernel block")
    return parse_kernel(kb, rc), mode


# ---------------------------------------------------------------------------
# commands


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def cmd_verify(rc: RunConfig, out: Path, args) -> int:
    cfg = suite_config(rc)

    def progress(row):
        if not args.quiet:
            flag = "pass" if row.passed else "FAIL"
            print(f"{flag:4s} {row.id:22s} {row.domain:8s} {row.group:20s} "
                  f"{row.map_class:12s} min_slack={row.min_slack:.3e}", flush=True)
            if row.status != "ok":
                print(f"warning: {row.id} on {row.domain}/{row.group}: {row.status}: "
                      f"{row.message}", file=sys.stderr)

    report = run_suite(cfg, progress)
    (out / "report.csv").write_text(report.to_csv(), encoding="ascii")
    (out / "report.json").write_text(report.to_json() + "\n", encoding="ascii")
    n_fail = sum(not r.passed for r in report.rows)
    _say(args, f"{len(report.rows) - n_fail}/{len(report.rows)} rows passed")
    return 0 if report.passed else 1


def cmd_minimize(rc: RunConfig, out: Path, args) -> int:
    spec = energy_spec(rc)
    mcfg = minimizer_config(rc)
    group = build_group(rc.group, rc.domain)
    trace = ground_state(spec, mcfg, group)
    rows = ["iter,energy,step,mass_residual,symmetry_deviation,accepted"]
    for i, e, st, res, dev, ok in trace.rows():
        rows.append(f"{i},{e:.17g},{st:.17g},{res:.17g},{dev:.17g},{str(ok).lower()}")
    (out / "trace.csv").write_text("\n".join(rows) + "\n", encoding="ascii")
    write_grid_function(out / "u.csv", trace.u)
    summary = trace.summary()
    sym = symmetry_report(trace, group)
    summary.update(group=rc.group.describe(), symmetry_gap=sym.gap,
                   symmetry_pass=sym.passed, energy_terms=None)
    from .energy import energy_terms
    summary["energy_terms"] = energy_terms(spec, trace.u)
    print(_dump(summary))
    if not trace.converged:
        print(f"warning: minimizer did not converge ({trace.message})", file=sys.stderr)
        return 1
    return 0


def cmd_mean(rc: RunConfig, out: Path, args) -> int:
    u = input_function(rc)
    p, signed = mean_options(rc)
    group = build_group(rc.group, rc.domain)
    m = signed_orbital_average(u, group) if signed else orbital_mean(u, group, p)
    write_grid_function(out / "mean.csv", m)
    info = {"group": rc.group.describe(), "p": p, "signed": signed,
            "map_class": group.map_class,
            "symmetry_deviation_input": symmetry_deviation(u, group)}
    if not signed:
        info.update(norm_input=lp_norm(u, p), norm_mean=lp_norm(m, p))
    _say(args, _dump(info))
    return 0


def cmd_rearrange(rc: RunConfig, out: Path, args) -> int:
    u = input_function(rc)
    us = sdr(u)
    write_grid_function(out / "rearranged.csv", us)
    from .energy import kinetic_T
    _say(args, _dump({"T_input": kinetic_T(u), "T_rearranged": kinetic_T(us),
                      "norm2_input": lp_norm(u, 2), "norm2_rearranged": lp_norm(us, 2)}))
    return 0


def cmd_kernel_check(rc: RunConfig, out: Path, args) -> int:
    kernel, mode = kernel_check_options(rc)
    try:
        ok, lo = positive_definite_check(kernel, rc.domain, mode)
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from None
    res = {"kernel": kernel.describe(), "mode": mode, "domain": rc.domain.describe(),
           "pass": ok, "min_eigenvalue": lo}
    (out / "kernel_check.json").write_text(_dump(res) + "\n", encoding="ascii")
    _say(args, _dump(res))
    return 0 if ok else 1


_DISPATCH = {"verify": cmd_verify, "minimize": cmd_minimize, "mean": cmd_mean,
             "rearrange": cmd_rearrange, "kernel-check": cmd_kernel_check}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="symground",
        description="Orbital means, symmetrization inequalities and symmetric ground states "
                    "on grids.",
        epilog="Config defaults: " + __doc__.split("Config defaults")[1].split("``verify``")[0]
        .replace("::", "").strip(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="subcommand; overrides the config's command if both are given")
    ap.add_argument("--config", help="JSON config file (default: {\"command\": <command>})")
    ap.add_argument("--out-dir", default=".", help="directory for output files")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--quiet", action="store_true", help="suppress progress output")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            path = Path(args.config)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            base = path.parent
        elif args.command:
            text, base = json.dumps({"command": args.command}), Path(".")
        else:
            raise ConfigError("give a subcommand or --config")
        if args.command:
            raw = json.loads(text) if text.strip().startswith("{") else None
            if isinstance(raw, dict):
                if raw.get("command", args.command) != args.command:
                    raise ConfigError(f"config command {raw.get('command')!r} conflicts with "
                                      f"subcommand {args.command!r}")
                raw["command"] = args.command
                text = json.dumps(raw)
        if args.seed is not None:
            raw = json.loads(text)
            if isinstance(raw, dict):
                raw["seed"] = args.seed
                text = json.dumps(raw)
        rc = parse_config(text, base)
        out = Path(args.out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory: {exc}") from None
        return _DISPATCH[rc.command](rc, out, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
