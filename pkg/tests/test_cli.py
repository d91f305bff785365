import json
import subprocess
import sys
from pathlib import Path

import pytest

from dampwave.cli import parse_and_dispatch
from dampwave.config import (apply_overrides, defaults, from_echo, load_config,
                             parse_config)
from dampwave.evolution import ConfigError
from dampwave.graded import GradedError

EXAMPLE = Path(__file__).resolve().parents[1] / "configs" / "example.ini"


def _manifest(root: Path) -> dict:
    (run_dir,) = [p for p in root.iterdir() if p.is_dir()]
    return json.loads((run_dir / "manifest.json").read_text())


# ---------------------------------------------------------------- config

def test_example_config_is_complete_and_default():
    cfg = load_config(EXAMPLE)
    assert cfg == defaults()
    assert len(cfg.explicit) == sum(len(v) for v in cfg.values.values())
    sim = cfg.simulation()
    assert sim.grid.points == (8192,) and sim.p == 2.0


def test_minimal_config_gives_full_simulation():
    cfg = parse_config("[data]\np = 3\n")
    sim = cfg.simulation()
    assert sim.p == 3.0 and sim.dt == defaults()["stepper.dt"]


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError, match=r"line 3: unknown key 'dtt'"):
        parse_config("[stepper]\ndt = 0.1\ndtt = 0.2\n", "x.ini")


def test_unknown_section_has_line_number():
    with pytest.raises(ConfigError, match=r"line 2: unknown section \[solver\]"):
        parse_config("\n[solver]\nx = 1\n", "x.ini")


def test_bad_value_has_line_number():
    with pytest.raises(ConfigError, match=r"line 2: bad value for stepper.adaptive"):
        parse_config("[stepper]\nadaptive = maybe\n", "x.ini")


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")


def test_length_mismatch_names_both_lengths():
    cfg = parse_config("[structure]\nweights = 1, 2\ncoeffs = 1.0\nnu0 = 2\n")
    with pytest.raises(GradedError, match="2 weights, 1 coeffs"):
        cfg.structure()


def test_override_precedence():
    cfg = parse_config("[stepper]\ndt = 0.1\n")
    apply_overrides(cfg, ["stepper.dt=0.01", "stepper.dt=0.005"])
    assert cfg["stepper.dt"] == 0.005
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["stepper.nope=1"])
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["dt=1"])


def test_echo_round_trip():
    cfg = parse_config("[structure]\nweights = 1, 2\ncoeffs = 1.0, 0.5\nnu0 = 2\n"
                       "[experiment]\neps_list = 0.1, 0.05\n[stepper]\nadaptive = yes\n")
    again = from_echo(json.loads(json.dumps(cfg.echo())))
    assert again == cfg
    assert parse_config(cfg.to_ini()) == cfg


def test_experiment_defaults_fill_unset_keys():
    cfg = parse_config("[experiment]\neps_list =\n[data]\ngamma = 0.2\n")
    spec = cfg.experiment("lifespan", {"experiment.eps_list": (0.1, 0.05), "data.gamma": 0.25})
    assert spec.eps_list == (0.1, 0.05)
    assert spec.gamma == 0.2


# ---------------------------------------------------------------- command line

def test_classify_critical(tmp_path, capsys):
    code = parse_and_dispatch(["classify", "--Q", "3", "--nu", "2", "--gamma", "0.5", "--p", "2.0",
                               "--s", "1", "--output", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "p_Crit=2 " in out and "regime=critical" in out
    man = _manifest(tmp_path)
    assert man["result"]["regime"] == "critical" and man["passed"] is True


def test_verify_kernels_exit_zero(tmp_path, capsys):
    code = parse_and_dispatch(["verify-kernels", "--delta", "0.1", "--N", "10", "--c", "0.25",
                               "--output", str(tmp_path)])
    assert code == 0
    assert "feasible=True" in capsys.readouterr().out
    run_dir = next(tmp_path.iterdir())
    assert (run_dir / "kernel_bounds.csv").exists()
    assert json.loads((run_dir / "kernel_bounds_manifest.json").read_text())["passed"]


def test_verify_kernels_infeasible_exit_one(tmp_path, capsys):
    code = parse_and_dispatch(["verify-kernels", "--c", "0.6", "--output", str(tmp_path)])
    assert code == 1
    assert "FAIL  pointwise bounds feasible" in capsys.readouterr().out


def test_simulate_bad_dt_exit_two(tmp_path, capsys):
    code = parse_and_dispatch(["simulate", "--set", "stepper.dt=-0.1", "--output", str(tmp_path)])
    assert code == 2
    assert "dt must be positive" in capsys.readouterr().err


def test_unknown_key_exit_two(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[data]\np = 2\nq = 3\n")
    code = parse_and_dispatch(["simulate", "--config", str(ini), "--output", str(tmp_path / "o")])
    assert code == 2
    assert "line 3" in capsys.readouterr().err


def test_bad_subcommand_exit_two(capsys):
    assert parse_and_dispatch(["frobnicate"]) == 2


def test_simulate_blow_up_writes_series(tmp_path, capsys):
    code = parse_and_dispatch([
        "simulate", "--output", str(tmp_path), "--set", "grid.box=400", "--set", "grid.points=1024",
        "--set", "stepper.adaptive=true", "--set", "stepper.t_max=50"])
    out = capsys.readouterr().out
    assert code == 0, out
    assert "status=blew_up" in out
    man = _manifest(tmp_path)
    assert man["result"]["status"] == "blew_up"
    assert Path(man["outputs"]["series"]).exists()
    # the echoed config re-parses to the same configuration
    expected = apply_overrides(defaults(), ["grid.box=400", "grid.points=1024",
                                            "stepper.adaptive=true", "stepper.t_max=50"])
    assert from_echo(man["config"]) == expected


def test_gn_probe_deterministic_outputs(tmp_path):
    args = ["gn-probe", "--seed", "4", "--set", "experiment.fields=8"]
    assert parse_and_dispatch(args + ["--output", str(tmp_path / "a")]) == 0
    assert parse_and_dispatch(args + ["--output", str(tmp_path / "b")]) == 0
    a = next((tmp_path / "a").iterdir()) / "gn_probe.csv"
    b = next((tmp_path / "b").iterdir()) / "gn_probe.csv"
    assert a.read_bytes() == b.read_bytes()


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DAMPWAVE_OUTPUT", str(tmp_path))
    assert parse_and_dispatch(["classify", "--Q", "1", "--nu", "2", "--gamma", "0.25",
                               "--p", "2"]) == 0
    assert _manifest(tmp_path)["result"]["kappa"] == pytest.approx(1.6)


def test_lifespan_abort_exit_one(tmp_path, capsys):
    # tiny amplitudes cannot blow up by t = 5
    code = parse_and_dispatch(["lifespan", "--output", str(tmp_path),
                               "--set", "experiment.eps_list=0.002, 0.001",
                               "--set", "stepper.t_max=5", "--set", "experiment.box=100",
                               "--jobs", "1"])
    assert code == 1
    assert "aborted" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dampwave.cli", "classify", "--Q", "4", "--nu",
                           "2", "--gamma", "1.5", "--p", "1.5", "--output", str(tmp_path)],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert "gamma exceeds gamma_tilde" in proc.stdout
