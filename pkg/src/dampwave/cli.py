"""Command-line entry point.

Exit status: 0 when every check of the run passes, 1 when a check fails or a
suite aborts, 2 on configuration errors (unknown keys, unreadable files,
parameters outside their windows).  Outputs go to a timestamped directory under
``--output`` (default ``$DAMPWAVE_OUTPUT`` or ``./runs``) with a manifest.json.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, apply_overrides, defaults, geometric, load_config
from .evolution import ConfigError, run
from .experiments import (DECAY_CASES, DecayCase, ExperimentError, decay_suite, dichotomy_scan,
                          gn_probe_suite, kernel_bounds_suite, lifespan_suite, testfn_scaling,
                          write_outputs)
from .graded import GradedError, classify, isotropic
from .oracle import OracleError
from .spectral import SpectralError

log = logging.getLogger("dampwave")

ENV_OUTPUT = "DAMPWAVE_OUTPUT"
COMMANDS = ("classify", "simulate", "decay", "lifespan", "scan", "testfn", "gn-probe",
            "verify-kernels")

# per-command defaults for keys a config file leaves unset
SUITE_DEFAULTS = {
    "lifespan": {"data.p": 2.0, "data.gamma": 0.25, "stepper.t_max": 2e4, "stepper.dt": 0.02,
                 "stepper.dt_max": 0.5, "stepper.growth": 0.01,
                 "experiment.eps_list": geometric(0.025, 0.0025, 5)},
    "scan": {"data.gamma": 0.25, "stepper.t_max": 1000.0, "stepper.dt": 0.02,
             "stepper.dt_max": 0.5, "stepper.growth": 0.01, "experiment.epsilon": 0.25,
             "experiment.p_list": (2.0, 3.0, 3.5, 3.8, 4.5)},
    "testfn": {"data.p": 2.0, "experiment.R_list": (4.0, 8.0, 16.0, 32.0, 64.0, 128.0)},
    "gn-probe": {"structure": isotropic(2), "experiment.s": 1.0, "experiment.q": 4.0},
}

CONFIG_ERRORS = (ConfigError, GradedError, SpectralError, OracleError, ExperimentError)


class SuiteAborted(RuntimeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a config value (repeatable)")
    common.add_argument("--output", type=Path, default=None,
                        help=f"output root (default ${ENV_OUTPUT} or ./runs)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized probes")
    common.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: available CPUs)")
    common.add_argument("--plot-data", action="store_true",
                        help="also write tidy long-format CSV for plotting")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(prog="dampwave", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="exponent arithmetic for (Q, nu, gamma, s, p)")
    c.add_argument("--Q", type=float)
    c.add_argument("--nu", type=float)
    c.add_argument("--gamma", type=float)
    c.add_argument("--p", type=float)
    c.add_argument("--s", type=float, default=1.0)

    sub.add_parser("simulate", parents=[common], help="one nonlinear run from a config")
    sub.add_parser("decay", parents=[common], help="oracle decay-rate fits")
    sub.add_parser("lifespan", parents=[common], help="lifespan scaling T_eps ~ eps^-kappa")
    sub.add_parser("scan", parents=[common], help="blow-up / completion scan over p")
    sub.add_parser("testfn", parents=[common], help="test-function scaling integrals")
    sub.add_parser("gn-probe", parents=[common], help="Gagliardo-Nirenberg ratio probe")
    k = sub.add_parser("verify-kernels", parents=[common], help="kernel bound sweeps")
    k.add_argument("--delta", type=float, default=0.1)
    k.add_argument("--N", type=float, default=10.0)
    k.add_argument("--c", type=float, default=0.25)
    return ap


def _output_dir(root: Path | None, command: str) -> Path:
    root = Path(root or os.environ.get(ENV_OUTPUT) or "runs")
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S_%f")
    out = root / f"{command}-{stamp}"
    try:
        out.mkdir(parents=True, exist_ok=False)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc.strerror or exc}") from None
    return out


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else defaults()
    apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        apply_overrides(cfg, [f"experiment.seed={args.seed}"])
    return cfg


def _report(result, out: Path, name: str, manifest: dict, plot: bool) -> dict:
    paths = write_outputs(out, name, result, manifest, plot)
    for label, ok in result.checks().items():
        print(f"{'PASS' if ok else 'FAIL'}  {label}")
    return paths


def _cmd_classify(args, cfg: Config, out: Path, manifest: dict) -> bool:
    if args.Q is None or args.nu is None:
        gs = cfg.structure()
        Q, nu = gs.Q, gs.nu
    else:
        Q, nu = args.Q, args.nu
    gamma = args.gamma if args.gamma is not None else cfg["data.gamma"]
    p = args.p if args.p is not None else cfg["data.p"]
    rep = classify(None, gamma, args.s, p, Q=Q, nu=nu)
    print(rep.summary())
    for note in rep.notes:
        print(f"note: {note}")
    manifest["result"] = {"Q": Q, "nu": nu, "gamma": gamma, "s": args.s, "p": p,
                          "p_crit": rep.p_crit, "gamma_tilde": rep.gamma_tilde,
                          "kappa": rep.kappa, "regime": rep.regime,
                          "global_range": rep.global_range,
                          "hypotheses_met": rep.hypotheses_met, "notes": list(rep.notes)}
    return True


def _cmd_simulate(args, cfg: Config, out: Path, manifest: dict) -> bool:
    sim = cfg.simulation()
    outcome = run(sim)
    csv_path, json_path = outcome.write(out / "run")
    print(f"status={outcome.status} t_end={outcome.t_end:.6g} steps={outcome.steps}")
    ok = not outcome.threshold_sensitive
    if outcome.blew_up:
        print(f"{'PASS' if ok else 'FAIL'}  blow-up time insensitive to the threshold "
              f"(1e6 vs 1e8 within 3%)")
    manifest["result"] = {"status": outcome.status, "t_end": outcome.t_end,
                          "steps": outcome.steps, "threshold_sensitive": outcome.threshold_sensitive}
    manifest["checks"] = {"threshold insensitive": ok}
    manifest["outputs"] = {"series": str(csv_path), "sidecar": str(json_path)}
    return ok


def _cmd_decay(args, cfg: Config, out: Path, manifest: dict) -> bool:
    if args.config or args.overrides:
        gs = cfg.structure()
        cases = [DecayCase(gs, cfg["experiment.s"], cfg["data.gamma"])]
    else:
        cases = list(DECAY_CASES)
    res = decay_suite(cases, jobs=args.jobs)
    for c, f in zip(res.cases, res.fits):
        print(f"{c.label()}: slope={f.slope:.6f} theory={f.theory:.6f} rel_gap={f.rel_gap:.4f}")
    manifest["outputs"] = _report(res, out, "decay", manifest, args.plot_data)
    return all(res.checks().values())


def _cmd_lifespan(args, cfg: Config, out: Path, manifest: dict) -> bool:
    spec = cfg.experiment("lifespan", SUITE_DEFAULTS["lifespan"], args.jobs)
    manifest["experiment"] = spec.echo()
    try:
        res = lifespan_suite(spec)
    except ExperimentError as exc:
        if "aborted" in str(exc):
            raise SuiteAborted(str(exc)) from None
        raise
    print(f"kappa fitted={res.kappa:.4f} theory={res.kappa_theory:.4f} "
          f"rel_gap={res.fit.rel_gap:.4f} box={res.grid.box}")
    manifest["outputs"] = _report(res, out, "lifespan", manifest, args.plot_data)
    return all(res.checks().values())


def _cmd_scan(args, cfg: Config, out: Path, manifest: dict) -> bool:
    spec = cfg.experiment("dichotomy", SUITE_DEFAULTS["scan"], args.jobs)
    manifest["experiment"] = spec.echo()
    res = dichotomy_scan(spec)
    for p, st, t in res.rows():
        print(f"p={p:g}: {st} at t={t:.6g}")
    if res.p_star is not None:
        print(f"transition p*={res.p_star:.4g} +- {res.uncertainty:.3g}; p_Crit={res.p_crit:.6g}")
    manifest["outputs"] = _report(res, out, "scan", manifest, args.plot_data)
    return all(res.checks().values())


def _cmd_testfn(args, cfg: Config, out: Path, manifest: dict) -> bool:
    spec = cfg.experiment("testfn", SUITE_DEFAULTS["testfn"], args.jobs)
    manifest["experiment"] = spec.echo()
    res = testfn_scaling(spec.p, spec.gs, spec.R_list)
    for b, fits in res.fits.items():
        print(f"{b}: " + ", ".join(f"{n} slope={f.slope:.4f} (theory {f.theory:.4g})"
                                  for n, f in zip(res.names, fits)))
    manifest["outputs"] = _report(res, out, "testfn", manifest, args.plot_data)
    return all(res.checks().values())


def _cmd_gn(args, cfg: Config, out: Path, manifest: dict) -> bool:
    spec = cfg.experiment("gn_probe", SUITE_DEFAULTS["gn-probe"], args.jobs)
    manifest["experiment"] = spec.echo()
    res = gn_probe_suite(spec.gs, spec.q, spec.s, spec.fields, spec.points, spec.band, spec.seed)
    print(f"max ratio N={res.points[0]}: {res.max_coarse:.6g}, N={res.points[1]}: "
          f"{res.max_fine:.6g}, relative change {res.rel_change:.3g}")
    manifest["outputs"] = _report(res, out, "gn_probe", manifest, args.plot_data)
    return all(res.checks().values())


def _cmd_kernels(args, cfg: Config, out: Path, manifest: dict) -> bool:
    res = kernel_bounds_suite(args.delta, args.N, args.c)
    print("\n".join(res.lines()))
    manifest["outputs"] = _report(res, out, "kernel_bounds", manifest, args.plot_data)
    return all(res.checks().values())


HANDLERS = {"classify": _cmd_classify, "simulate": _cmd_simulate, "decay": _cmd_decay,
            "lifespan": _cmd_lifespan, "scan": _cmd_scan, "testfn": _cmd_testfn,
            "gn-probe": _cmd_gn, "verify-kernels": _cmd_kernels}


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    try:
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be positive, got {args.jobs}")
        cfg = _config(args)
        out = _output_dir(args.output, args.command)
        manifest = {"command": args.command, "argv": list(argv if argv is not None else sys.argv[1:]),
                    "version": __version__, "jobs": args.jobs, "seed": cfg["experiment.seed"],
                    "config": cfg.echo(), "output_dir": str(out)}
        ok = HANDLERS[args.command](args, cfg, out, manifest)
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SuiteAborted as exc:
        print(f"suite aborted: {exc}", file=sys.stderr)
        return 1
    manifest["passed"] = bool(ok)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True,
                                                  default=_json_default))
    print(f"outputs: {out}")
    return 0 if ok else 1


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
