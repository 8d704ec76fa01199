"""Command-line runner: run, validate-rho, oracle, resume, sweep.

Exit codes: 0 success/all-pass, 1 monitor failure, 2 integrator abort (or an
indeterminate validator verdict for validate-rho), 3 configuration or gate
error, 4 I/O error.
"""
import argparse
import configparser
import itertools
import math
import os
import sys

import numpy as np

from . import conformal as conformal_mod
from . import monitors as monitors_mod
from . import snapshots as snap_io
from . import solver as solver_mod
from .background import background_state
from .config import RunConfig
from .errors import ConfigError, RicciBallError
from .rho import RhoSpec, validate_rho
from .snapshots import render_rho_report

EXIT_OK = 0
EXIT_MONITOR_FAIL = 1
EXIT_ABORT = 2
EXIT_CONFIG = 3
EXIT_IO = 4


def _load_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"no such config file: {path}")
    return RunConfig.from_file(path)


def _gate_rho(cfg: RunConfig, override: bool) -> tuple[bool, str]:
    """Admissibility gate; returns (ok, message)."""
    rho = cfg.rho_spec()
    if rho.is_zero():
        return True, "rho is identically zero: exact background run, gate skipped"
    report = validate_rho(rho, cfg.model(), target=cfg.validator_target(),
                          t_max=cfg.validator_horizon(),
                          n_samples=cfg.getint("validator", "n_samples"),
                          settings=cfg.validator_settings())
    text = render_rho_report(report)
    if report.verdict == "fail" and not override:
        return False, text
    if report.verdict == "fail":
        return True, text + "gate overridden by flag; proceeding\n"
    if report.verdict == "indeterminate":
        return True, text + "indeterminate margins; proceeding\n"
    return True, text


def _execute(cfg: RunConfig):
    model = cfg.model()
    grid = cfg.grid()
    rho = cfg.rho_spec()
    scheme = cfg.scheme()
    settings = cfg.run_settings()
    if cfg.formulation() == "conformal":
        traj = conformal_mod.run_conformal(model, grid, rho, scheme, settings)
    else:
        traj = solver_mod.run(model, grid, rho, scheme, settings)
    report = monitors_mod.run_suite(traj, cfg.monitor_settings(),
                                    cfg.enabled_checks())
    return traj, report


def _write_outputs(outdir: str, cfg: RunConfig, traj, report):
    os.makedirs(outdir, exist_ok=True)
    h = cfg.config_hash()
    try:
        with open(os.path.join(outdir, "config.ini"), "w") as fh:
            fh.write(cfg.to_ini())
        snap_io.write_timeseries(os.path.join(outdir, "timeseries.csv"), traj, h)
        for i, snap in enumerate(traj.snapshots):
            snap_io.save_snapshot(os.path.join(outdir, f"snapshot_{i:04d}.txt"),
                                  snap, cfg.get("scheme", "name"), h)
        if report is not None:
            snap_io.write_monitor_report(
                os.path.join(outdir, "monitor_report.txt"), report, h)
        snap_io.write_summary(os.path.join(outdir, "summary.txt"), traj,
                              report, h)
    except OSError as exc:
        raise IOError(f"cannot write outputs under {outdir}: {exc}") from exc


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    ok, message = _gate_rho(cfg, args.override_rho_gate)
    print(message, end="")
    if not ok:
        print("rho admissibility gate failed (use --override-rho-gate to force)")
        return EXIT_CONFIG
    traj, report = _execute(cfg)
    out_base = args.out or cfg.get("outputs", "directory")
    outdir = os.path.join(out_base, f"run-{cfg.config_hash()}")
    _write_outputs(outdir, cfg, traj, report)
    rec = traj.records[-1]
    print(f"run {cfg.config_hash()}: status={traj.status} t={rec.t:g} "
          f"steps={traj.total_steps} Vol={rec.vol:.6g} "
          f"sup|F1|(compact)={rec.sup_F1_compact:.3e}")
    print(f"outputs in {outdir}")
    if traj.status != "completed":
        print(f"integrator abort: {traj.abort_message}")
        return EXIT_ABORT
    if not report.all_pass:
        print("monitor failures:", ",".join(report.failed_ids()))
        return EXIT_MONITOR_FAIL if cfg.getbool("monitors", "hard_fail") else EXIT_OK
    return EXIT_OK


def cmd_validate_rho(args) -> int:
    cfg = _load_config(args.config)
    rho = cfg.rho_spec()
    report = validate_rho(rho, cfg.model(), target=cfg.validator_target(),
                          t_max=cfg.validator_horizon(),
                          n_samples=cfg.getint("validator", "n_samples"),
                          settings=cfg.validator_settings())
    print(render_rho_report(report), end="")
    return {"pass": EXIT_OK, "fail": EXIT_MONITOR_FAIL,
            "indeterminate": EXIT_ABORT}[report.verdict]


def _oracle_errors(traj, model):
    worst_a = worst_b = 0.0
    for snap in traj.snapshots:
        state = snap if traj.formulation == "ab" else snap.to_metric_state()
        bg = background_state(state.t, model, state.grid)
        worst_a = max(worst_a, float(np.max(np.abs(state.a / bg.a - 1.0))))
        worst_b = max(worst_b, float(np.max(np.abs(state.b[1:] / bg.b[1:] - 1.0))))
    return worst_a, worst_b


def cmd_oracle(args) -> int:
    cfg = _load_config(args.config)
    if not cfg.rho_spec().is_zero():
        print("oracle comparison requires the exact background: forcing rho to zero")
        cfg = cfg.with_overrides({"rho": {"family": "zero", "amplitude": "0.0",
                                          "table_times": "", "table_values": ""}})
    model = cfg.model()
    levels = args.refine_levels
    n0 = cfg.getint("grid", "n_points")
    scheme_name = cfg.get("scheme", "name")
    rows = []
    if scheme_name == "imex-cn":
        # temporal ladder: halve dt_max at fixed grid
        dt0 = cfg.getfloat("scheme", "dt_max")
        for lvl in range(levels):
            sub = cfg.with_overrides({"scheme": {"dt_max": str(dt0 / 2 ** lvl)}})
            traj, _ = _run_for_oracle(sub)
            if traj.status != "completed":
                print(f"level {lvl}: integrator abort: {traj.abort_message}")
                return EXIT_ABORT
            ea, eb = _oracle_errors(traj, model)
            rows.append((f"dt={dt0 / 2 ** lvl:g}", ea, eb, None))
        label = "temporal order"
    else:
        for lvl in range(levels):
            n_pts = (n0 - 1) * 2 ** lvl + 1
            sub = cfg.with_overrides({"grid": {"n_points": str(n_pts)}})
            traj, traj_u = _run_for_oracle(sub)
            if traj.status != "completed":
                print(f"level {lvl}: integrator abort: {traj.abort_message}")
                return EXIT_ABORT
            ea, eb = _oracle_errors(traj, model)
            disc = None
            if traj_u is not None:
                disc = conformal_mod.cross_check(traj, traj_u).discrepancy
            rows.append((f"dr={model.r0 / (n_pts - 1):g}", ea, eb, disc))
        label = "spatial order (dt follows the CFL bound)"
    print(f"{'level':>14s} {'max rel err a':>14s} {'max rel err b':>14s} "
          f"{'order':>7s}" + ("  cross-check" if rows[0][3] is not None else ""))
    prev = None
    for tag, ea, eb, disc in rows:
        err = max(ea, eb)
        order = "" if prev is None else f"{math.log2(prev / err):7.2f}"
        extra = "" if disc is None else f"  {disc:.3e}"
        print(f"{tag:>14s} {ea:14.3e} {eb:14.3e} {order:>7s}{extra}")
        prev = err
    print(f"(order column: observed {label})")
    return EXIT_OK


def _run_for_oracle(cfg: RunConfig):
    model = cfg.model()
    grid = cfg.grid()
    rho = cfg.rho_spec()
    scheme = cfg.scheme()
    settings = cfg.run_settings()
    traj = solver_mod.run(model, grid, rho, scheme, settings)
    traj_u = None
    if model.n == 2:
        traj_u = conformal_mod.run_conformal(model, grid, rho, scheme, settings)
    return traj, traj_u


def cmd_resume(args) -> int:
    cfg = _load_config(args.config)
    try:
        state, header = snap_io.load_snapshot(args.snapshot)
    except (OSError, ConfigError) as exc:
        print(f"cannot load snapshot: {exc}")
        return EXIT_CONFIG
    model = cfg.model()
    grid = cfg.grid()
    form = "conformal" if header["formulation"] == "conformal" else "ab"
    if (int(header["n"]) != model.n
            or abs(float(header["m"]) - model.m) > 1e-12
            or abs(float(header["r0"]) - model.r0) > 1e-12
            or int(header["n_points"]) != grid.n_points
            or form != cfg.formulation()):
        print("snapshot header does not match the configuration")
        return EXIT_CONFIG
    if header.get("scheme", "") not in ("", cfg.get("scheme", "name")):
        print(f"warning: scheme changed from {header['scheme']} to "
              f"{cfg.get('scheme', 'name')}; proceeding")
    rho = cfg.rho_spec()
    scheme = cfg.scheme()
    settings = cfg.run_settings()
    if form == "conformal":
        traj = conformal_mod.run_conformal(model, grid, rho, scheme, settings,
                                           start_state=state)
    else:
        traj = solver_mod.run(model, grid, rho, scheme, settings,
                              start_state=state)
    report = monitors_mod.run_suite(traj, cfg.monitor_settings(),
                                    cfg.enabled_checks())
    out_base = args.out or cfg.get("outputs", "directory")
    outdir = os.path.join(out_base,
                          f"resume-{cfg.config_hash()}-t{state.t:g}")
    _write_outputs(outdir, cfg, traj, report)
    print(f"resumed from t={state.t:g}: status={traj.status}, "
          f"outputs in {outdir}")
    if traj.status != "completed":
        return EXIT_ABORT
    return EXIT_OK if report.all_pass else EXIT_MONITOR_FAIL


def cmd_sweep(args) -> int:
    parser = configparser.ConfigParser()
    try:
        with open(args.config) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        print(f"cannot read sweep config: {exc}")
        return EXIT_CONFIG
    if not parser.has_section("sweep"):
        print("sweep needs a [sweep] section with section.key = v1, v2, ... lines")
        return EXIT_CONFIG
    base = RunConfig.from_file(args.config)
    axes = []
    for dotted, raw in parser.items("sweep"):
        section, key = dotted.split(".", 1)
        values = [tok.strip() for tok in raw.split(",") if tok.strip()]
        axes.append([(section, key, v) for v in values])
    out_base = args.out or base.get("outputs", "directory")
    worst = EXIT_OK
    manifest = []
    for combo in itertools.product(*axes):
        overrides = {}
        for section, key, val in combo:
            overrides.setdefault(section, {})[key] = val
        cfg = base.with_overrides(overrides)
        traj, report = _execute(cfg)
        outdir = os.path.join(out_base, f"run-{cfg.config_hash()}")
        _write_outputs(outdir, cfg, traj, report)
        tag = " ".join(f"{s}.{k}={v}" for s, k, v in combo)
        status = traj.status if traj.status != "completed" else (
            "pass" if report.all_pass else "monitor-fail")
        manifest.append(f"{cfg.config_hash()}  {status:12s}  {tag}")
        if traj.status != "completed":
            worst = max(worst, EXIT_ABORT)
        elif not report.all_pass:
            worst = max(worst, EXIT_MONITOR_FAIL)
    os.makedirs(out_base, exist_ok=True)
    with open(os.path.join(out_base, "sweep_manifest.txt"), "w") as fh:
        fh.write("\n".join(sorted(manifest)) + "\n")
    print("\n".join(sorted(manifest)))
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ricciball",
        description="Rotationally symmetric normalized Ricci flow on a "
                    "hyperbolic ball with prescribed boundary mean curvature")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate and evaluate monitors")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--override-rho-gate", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate-rho", help="check rho admissibility only")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate_rho)

    p_orc = sub.add_parser("oracle", help="compare against the exact background")
    p_orc.add_argument("--config", required=True)
    p_orc.add_argument("--refine-levels", type=int, default=3)
    p_orc.set_defaults(func=cmd_oracle)

    p_res = sub.add_parser("resume", help="continue from a snapshot")
    p_res.add_argument("snapshot")
    p_res.add_argument("--config", required=True)
    p_res.add_argument("--out", default=None)
    p_res.set_defaults(func=cmd_resume)

    p_swp = sub.add_parser("sweep", help="run the cross product of a [sweep] section")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--out", default=None)
    p_swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RicciBallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
