import json

import pytest

from symground.cli import ConfigError, main, parse_config
from symground.io import read_grid_function


def run(tmp_path, cfg, *extra):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return main(["--config", str(p), "--out-dir", str(tmp_path / "out"), "--quiet", *extra])


@pytest.mark.parametrize("cfg, key", [
    ({"command": "verify", "bogus": 1}, "bogus"),
    ({"command": "verify", "domain": {"kind": "line1d", "size": 3}}, "size"),
    ({"command": "minimize", "energy": {"Vx": {}}}, "Vx"),
])
def test_unknown_keys_are_named(cfg, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(json.dumps(cfg))


def test_consistency_errors():
    with pytest.raises(ConfigError, match="cylinder"):
        parse_config(json.dumps({"command": "verify", "domain": {"kind": "cylinder"},
                                 "group": {"kind": "rotation_zn"}}))
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"command": "rearrange", "domain": {"kind": "cylinder"}}))
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"command": "fly"}))


def test_exit_code_two_on_config_error(tmp_path, capsys):
    assert run(tmp_path, {"command": "verify", "seed": "x"}) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_verify_writes_reports(tmp_path):
    cfg = {"command": "verify", "domain": {"kind": "line1d", "n": 65},
           "suite": {"trials": 3, "rows": ["norm_preservation", "kinetic_symm"]}}
    assert run(tmp_path, cfg) == 0
    out = tmp_path / "out"
    assert (out / "report.csv").read_text().count("\n") == 3
    assert json.loads((out / "report.json").read_text())["pass"] is True


def test_minimize_outputs(tmp_path, capsys):
    cfg = {"command": "minimize", "domain": {"kind": "line1d", "n": 129},
           "energy": {"V": {"kind": "harmonic"}}}
    assert run(tmp_path, cfg) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["converged"] and abs(summary["energy"] - 1) < 2e-3
    u = read_grid_function(tmp_path / "out" / "u.csv")
    assert u.domain.resolution == (129,)
    assert (tmp_path / "out" / "trace.csv").read_text().startswith("iter,energy,")


def test_minimize_nonconvergence_exit_code(tmp_path):
    cfg = {"command": "minimize", "minimizer": {"max_iters": 2}}
    assert run(tmp_path, cfg) == 1


def test_mean_and_rearrange(tmp_path):
    cfg = {"command": "mean", "domain": {"kind": "plane2d", "n": 16},
           "group": {"kind": "rotation_zn", "n": 4}, "input": {"smoothness": "rough"}}
    assert run(tmp_path, cfg) == 0
    m = read_grid_function(tmp_path / "out" / "mean.csv")
    assert (m.values >= 0).all()
    cfg = {"command": "rearrange", "domain": {"kind": "line1d", "n": 33},
           "input": {"path": str(tmp_path / "out" / "mean.csv")}}
    assert run(tmp_path, cfg) == 2  # domain of the input file differs
    cfg["domain"] = {"kind": "plane2d", "n": 16}
    assert run(tmp_path, cfg) == 0


def test_kernel_check_exit_codes(tmp_path):
    assert run(tmp_path, {"command": "kernel-check", "kernel": {"kind": "gaussian"}}) == 0
    res = json.loads((tmp_path / "out" / "kernel_check.json").read_text())
    assert res["pass"] is True
    assert run(tmp_path, {"command": "kernel-check", "kernel": {"kind": "box"}}) == 1
    assert run(tmp_path, {"command": "kernel-check", "kernel": {"kind": "neg_abs"},
                          "kernel_check": {"mode": "mean_zero"}}) == 0


def test_subcommand_without_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["kernel-check", "--quiet"]) == 2  # needs a kernel block
