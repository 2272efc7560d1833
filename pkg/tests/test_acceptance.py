"""Acceptance criteria AC1-AC9.

Each test prints one ``ACn: PASS/FAIL`` line (visible with ``-s``) and the
session summary repeats them under "acceptance criteria".

The plane Polya-Szego rearrangement row is the one known failure: on a
square lattice no equimeasurable rearrangement keeps the discrete Dirichlet
energy from growing on near-radial inputs (lattice-point discrepancy of a
few percent), so that row is an expected failure rather than a loosened one.
"""

import json
import math
import time
import warnings

import numpy as np
import pytest

from conftest import record
from symground.cli import main
from symground.energy import EnergySpec, kinetic_T, relativistic_R, self_Q
from symground.grid import Domain, GridFunction
from symground.groups import GroupSpec, build_group
from symground.kernels import Kernel
from symground.minimizer import MinimizerConfig, ground_state, symmetry_report
from symground.symmetrize import sdr
from symground.verify import (PropertyCase, SuiteConfig, gradient_check, random_function,
                              run_case, run_suite)

KNOWN_FAIL = {("sdr_polya_szego", "plane2d")}


# ---------------------------------------------------------------------------
# AC1


@pytest.fixture(scope="module")
def default_suite():
    t0 = time.perf_counter()
    rep = run_suite(SuiteConfig(trials=50, seed=0))
    return rep, time.perf_counter() - t0


def test_ac1_default_suite(default_suite):
    rep, secs = default_suite
    bad = [(r.id, r.domain, r.group, r.min_slack) for r in rep.rows if not r.passed]
    unexpected = [b for b in bad if (b[0], b[1]) not in KNOWN_FAIL]
    record("AC1", not bad and secs <= 600,
           f"{len(rep.rows) - len(bad)}/{len(rep.rows)} rows pass in {secs:.0f} s; failing: "
           + (", ".join(f"{i} on {d} (min slack {s:.3g})" for i, d, _, s in bad) or "none"))
    assert secs <= 600
    assert all(r.trials == 50 for r in rep.rows)
    assert not unexpected, unexpected


@pytest.mark.xfail(strict=True, reason="discrete Polya-Szego fails on the square lattice")
def test_ac1_plane_polya_szego(default_suite):
    rep, _ = default_suite
    rows = [r for r in rep.rows if (r.id, r.domain) in KNOWN_FAIL]
    assert rows and all(r.passed for r in rows)


# ---------------------------------------------------------------------------
# AC2


def _direct_Q(f, kernel, dom, block=512):
    x = np.stack([c.reshape(-1) for c in dom.coords()], axis=1)
    fv = f.reshape(-1)
    total = 0.0
    for s in range(0, fv.size, block):
        d = x[s:s + block, None, :] - x[None, :, :]
        if dom.kind == "cylinder":
            r = np.sqrt(d[..., 0] ** 2 + (2 * np.sin(d[..., 1] / 2)) ** 2)
        else:
            r = np.sqrt((d * d).sum(-1))
        total += fv[s:s + block] @ kernel.radial(r, dom.ndim) @ fv
    return dom.cell_volume ** 2 * total


def test_ac2_convolution_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for case in range(100):
        kind = ("line1d", "plane2d", "cylinder")[case % 3]
        n = int(rng.integers(8, 65))
        L = float(rng.uniform(2.0, 10.0))
        if kind == "line1d":
            dom = Domain.line(L, n)
        elif kind == "plane2d":
            dom = Domain.plane(L, n)
        else:
            dom = Domain.cylinder(L, n, int(rng.integers(8, 65)))
        choices = ["gaussian", "box"] + (["neg_abs"] if kind == "line1d" else [])
        kk = choices[case % len(choices)]
        kernel = Kernel(kk, sigma=float(rng.uniform(0.2, 2.0)), a=float(rng.uniform(0.3, 3.0)))
        u = random_function(dom, int(rng.integers(2**32)), ("smooth", "rough")[case % 2])
        f = np.abs(u.values) ** 2
        ref = _direct_Q(f, kernel, dom)
        got = self_Q(u, kernel)
        worst = max(worst, abs(got - ref) / abs(ref))
    record("AC2", worst <= 1e-12, f"worst relative error {worst:.2e} over 100 cases")
    assert worst <= 1e-12


# ---------------------------------------------------------------------------
# AC3


def _ac3_specs():
    line = Domain.line(8.0, 257)
    x = line.coords()[0]
    V = GridFunction(line, x * x)
    rho = GridFunction(line, np.exp(-x * x / (2 * 1.5**2)))
    rho = GridFunction(line, rho.values / (line.cell_volume * rho.values.sum()))
    rl = Domain.line(10.0, 256)
    xr = rl.coords()[0]
    return {
        "T": EnergySpec(line, V=None),
        "T+P": EnergySpec(line, V=V),
        "T+P+bQ": EnergySpec(line, V=V, b=0.5, kernel=Kernel("gaussian")),
        "T+P+H_rho": EnergySpec(line, V=V, b=0.5, kernel=Kernel("neg_abs"), rho=rho),
        "R+P": EnergySpec(rl, kinetic="relativistic", m=1.0, V=GridFunction(rl, xr * xr)),
    }


def test_ac3_gradient_oracle():
    errs = {}
    for k, (name, spec) in enumerate(_ac3_specs().items()):
        u = random_function(spec.domain, 100 + k, "smooth")
        u = GridFunction(spec.domain, u.values / math.sqrt(spec.domain.cell_volume
                                                            * np.sum(u.values ** 2)))
        errs[name] = gradient_check(spec, u, directions=20, seed=k)
    worst = max(errs.values())
    record("AC3", worst <= 1e-5,
           "max relative error " + ", ".join(f"{k}={v:.1e}" for k, v in errs.items()))
    assert worst <= 1e-5


# ---------------------------------------------------------------------------
# AC4


def test_ac4_harmonic_oscillator():
    dom = Domain.line(8.0, 512)
    x = dom.coords()[0]
    spec = EnergySpec(dom, V=GridFunction(dom, x * x))
    G = build_group(GroupSpec("reflection_z2"), dom)
    t0 = time.perf_counter()
    tr = ground_state(spec, MinimizerConfig(initializer="gaussian_offset", center=1.5), G)
    secs = time.perf_counter() - t0
    dev = symmetry_report(tr, G).deviation
    ok = (tr.converged and abs(tr.energy - 1) <= 1e-3 and dev <= 1e-3
          and tr.iterations <= 20000 and secs <= 30)
    record("AC4", ok, f"E={tr.energy:.6f} deviation={dev:.1e} iterations={tr.iterations} "
           f"time={secs:.2f} s")
    assert ok


# ---------------------------------------------------------------------------
# AC5


def _ac5_setups():
    plane = Domain.plane(8.0, 64)
    r2 = plane.radius() ** 2
    line = Domain.line(8.0, 257)
    x = line.coords()[0]
    rho = np.exp(-x * x / (2 * 1.5**2))
    rho_gf = GridFunction(line, rho)
    rho_gf = GridFunction(line, rho_gf.values / (line.cell_volume * rho_gf.values.sum()))
    z2 = build_group(GroupSpec("reflection_z2"), line)
    return {
        "a": (EnergySpec(plane, V=GridFunction(plane, r2)),
              build_group(GroupSpec("rotation_zn", n=4), plane)),
        "b": (EnergySpec(line, V=GridFunction(line, x * x), b=0.5, kernel=Kernel("gaussian")),
              z2),
        "c": (EnergySpec(line, V=GridFunction(line, x * x), b=0.5, kernel=Kernel("neg_abs"),
                         rho=rho_gf), z2),
    }


def test_ac5_symmetric_ground_states():
    out, ok = [], True
    for name, (spec, G) in _ac5_setups().items():
        n_conv, worst_dev = 0, 0.0
        for seed in range(10):
            tr = ground_state(spec, MinimizerConfig(initializer="random", seed=seed), G)
            if not tr.converged:
                continue
            n_conv += 1
            rep = symmetry_report(tr, G)
            worst_dev = max(worst_dev, rep.deviation)
            ok &= rep.deviation <= 1e-3 and rep.passed
        ok &= n_conv > 0
        out.append(f"({name}) {n_conv}/10 converged, max deviation {worst_dev:.1e}")
    record("AC5", ok, "; ".join(out))
    assert ok


# ---------------------------------------------------------------------------
# AC6


def test_ac6_shifted_well():
    dom = Domain.line(8.0, 257)
    x = dom.coords()[0]
    spec = EnergySpec(dom, V=GridFunction(dom, (x - 1) ** 2))
    G = build_group(GroupSpec("reflection_z2"), dom)
    tr = ground_state(spec, MinimizerConfig(), G)
    dev = symmetry_report(tr, G).deviation
    record("AC6", dev >= 0.1, f"symmetry deviation {dev:.3f}")
    assert dev >= 0.1


# ---------------------------------------------------------------------------
# AC7


def test_ac7_relativistic_cross_check():
    worst = {}
    for dom in (Domain.line(10.0, 512), Domain.plane(8.0, 64)):
        w = 0.0
        for seed in range(20):
            u = random_function(dom, 700 + seed, "smooth")
            a = relativistic_R(u, 1.0, "spectral")
            b = relativistic_R(u, 1.0, "kernel")
            w = max(w, abs(a - b) / abs(a))
        worst[dom.kind] = w
    rows = [run_case(PropertyCase("rel_ke_symm", d, g, trials=50))
            for d, g in ((Domain.line(8.0, 257), GroupSpec("reflection_z2")),
                         (Domain.plane(8.0, 64), GroupSpec("rotation_zn", n=4)),
                         (Domain.plane(8.0, 64), GroupSpec("circle_so2", m_quad=64)))]
    line = Domain.line(10.0, 512)
    x = line.coords()[0]
    u = GridFunction(line, math.pi**-0.25 * np.exp(-x * x / 2))
    m = 50.0
    ratios = [relativistic_R(u, m, meth) * 2 * m / kinetic_T(u) for meth in ("spectral", "kernel")]
    ok = (max(worst.values()) <= 0.02 and all(r.passed for r in rows)
          and all(0.9 <= q <= 1.1 for q in ratios))
    record("AC7", ok, f"R spectral/kernel worst rel diff line {worst['line1d']:.1e}, "
           f"plane {worst['plane2d']:.1e}; rel_ke_symm min slack "
           f"{min(r.min_slack for r in rows):.2e}; m=50 ratio {ratios[0]:.5f}/{ratios[1]:.5f}")
    assert ok


# ---------------------------------------------------------------------------
# AC8


@pytest.fixture(scope="module")
def sdr_rows():
    doms = {"line1d": (Domain.line(8.0, 257), GroupSpec("reflection_z2")),
            "plane2d": (Domain.plane(8.0, 64), GroupSpec("rotation_zn", n=4))}
    return {(rid, k): run_case(PropertyCase(rid, d, g, trials=100, tolerance=1e-6))
            for k, (d, g) in doms.items()
            for rid in ("sdr_polya_szego", "sdr_hardy_littlewood")}


def test_ac8_rearrangement(sdr_rows):
    equi = True
    for k, dom in enumerate((Domain.line(8.0, 257), Domain.plane(8.0, 64))):
        for seed in range(100):
            u = random_function(dom, 9000 + 100 * k + seed,
                                ("smooth", "rough", "indicator")[seed % 3])
            s = sdr(u)
            equi &= np.array_equal(np.sort(np.abs(u.values), axis=None),
                                   np.sort(s.values, axis=None))
    bad = [k for k, r in sdr_rows.items() if not r.passed]
    unexpected = [k for k in bad if k not in KNOWN_FAIL]
    record("AC8", equi and not bad,
           f"equimeasurable={equi}; rows " + ", ".join(
               f"{i}/{d}: min slack {r.min_slack:.2e}" for (i, d), r in sdr_rows.items()))
    assert equi
    assert not unexpected, unexpected


@pytest.mark.xfail(strict=True, reason="discrete Polya-Szego fails on the square lattice")
def test_ac8_plane_polya_szego(sdr_rows):
    assert sdr_rows[("sdr_polya_szego", "plane2d")].passed


# ---------------------------------------------------------------------------
# AC9


def _run_twice(tmp_path, cfg, files):
    tmp_path.mkdir(parents=True, exist_ok=True)
    outs = []
    for k in range(2):
        p = tmp_path / f"cfg{k}.json"
        p.write_text(json.dumps(cfg))
        d = tmp_path / f"run{k}"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = main(["--config", str(p), "--out-dir", str(d), "--quiet"])
        outs.append((code, [(d / f).read_bytes() for f in files]))
    return outs[0] == outs[1]


def test_ac9_determinism(tmp_path, capsys):
    cases = {
        "verify": ({"command": "verify", "seed": 3, "suite": {"trials": 3}},
                   ["report.csv", "report.json"]),
        "minimize": ({"command": "minimize", "seed": 4, "domain": {"kind": "plane2d", "n": 32},
                      "energy": {"V": {"kind": "harmonic"}},
                      "minimizer": {"initializer": "random"}}, ["trace.csv", "u.csv"]),
        "mean": ({"command": "mean", "seed": 5, "domain": {"kind": "plane2d", "n": 32},
                  "group": {"kind": "circle_so2", "m_quad": 16}}, ["mean.csv"]),
        "rearrange": ({"command": "rearrange", "seed": 6,
                       "input": {"smoothness": "indicator"}}, ["rearranged.csv"]),
        "kernel-check": ({"command": "kernel-check", "kernel": {"kind": "box"}},
                         ["kernel_check.json"]),
    }
    same = {}
    for name, (cfg, files) in cases.items():
        same[name] = _run_twice(tmp_path / name, cfg, files)
    capsys.readouterr()
    ok = all(same.values())
    record("AC9", ok, "byte-identical: " + ", ".join(f"{k}={v}" for k, v in same.items()))
    assert ok
