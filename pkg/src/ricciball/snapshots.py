"""Structured-text persistence: snapshots, time series, monitor reports.

Floats are written with %.17g so every float64 round-trips bit-exactly, which
resume and determinism checks rely on.
"""
import math

import numpy as np

from .background import BackgroundModel
from .conformal import ConformalState
from .errors import ConfigError
from .geometry import RadialMetricState
from .grid import RadialGrid

SNAPSHOT_VERSION = 1


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def save_snapshot(path, state, scheme_name: str, config_hash: str = "") -> None:
    formulation = "conformal" if isinstance(state, ConformalState) else "ab"
    if formulation == "ab":
        n, m = state.n, state.m
        cols = ("r", "a", "b")
        arrays = (state.grid.r, state.a, state.b)
    else:
        n, m = state.model.n, state.model.m
        cols = ("r", "u")
        arrays = (state.grid.r, state.u)
    lines = [
        f"# ricciball-snapshot v{SNAPSHOT_VERSION}",
        f"# formulation = {formulation}",
        f"# n = {int(n)}",
        f"# m = {_fmt(m)}",
        f"# r0 = {_fmt(state.grid.r0)}",
        f"# t = {_fmt(state.t)}",
        f"# dr = {_fmt(state.grid.dr)}",
        f"# n_points = {state.grid.n_points}",
        f"# scheme = {scheme_name}",
        f"# config_hash = {config_hash}",
        "# columns = " + " ".join(cols),
    ]
    for row in zip(*arrays):
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_snapshot(path):
    """Returns (state, header dict); state type follows the formulation tag."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("ricciball-snapshot"):
                    version = int(body.split("v")[-1])
                    if version != SNAPSHOT_VERSION:
                        raise ConfigError(f"unsupported snapshot version {version}")
                    header["version"] = version
                elif "=" in body:
                    key, val = body.split("=", 1)
                    header[key.strip()] = val.strip()
            else:
                rows.append([float(tok) for tok in line.split()])
    required = {"version", "formulation", "n", "m", "r0", "t", "n_points",
                "columns"}
    if not required.issubset(header):
        raise ConfigError("snapshot header incomplete or corrupted")
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[0] != int(header["n_points"]):
        raise ConfigError("snapshot body does not match its header")
    grid = RadialGrid(data[:, 0])
    n = int(header["n"])
    m = float(header["m"])
    t = float(header["t"])
    if header["formulation"] == "ab":
        state = RadialMetricState(t=t, a=data[:, 1], b=data[:, 2], grid=grid,
                                  n=n, m=m)
    else:
        model = BackgroundModel(n=n, m=m, r0=grid.r0)
        state = ConformalState(t=t, u=data[:, 1], model=model, grid=grid)
    return state, header


def write_timeseries(path, traj, config_hash: str = "") -> None:
    two_d = traj.model.n == 2
    cols = list(traj.records[0].COLUMNS)
    if two_d:
        cols.append("u_min")
    lines = [",".join(cols)]
    for rec in traj.records:
        lines.append(",".join(_fmt(v) for v in rec.row(two_d)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_monitor_report(path, report, config_hash: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(render_monitor_report(report, config_hash))


def render_monitor_report(report, config_hash: str = "") -> str:
    lines = ["# ricciball-monitor-report v1",
             f"# config_hash = {config_hash}",
             "# columns = check_id verdict margin location_r location_t tolerance note"]
    for r in report.results:
        lines.append("\t".join([
            r.check_id, r.verdict, _fmt(r.worst_margin),
            _fmt(r.worst_location[0]), _fmt(r.worst_location[1]),
            _fmt(r.tolerance), r.note]))
    return "\n".join(lines) + "\n"


def render_rho_report(report) -> str:
    lines = [f"rho validation against {report.target} "
             f"(t_max={_fmt(report.t_max)}, samples={report.n_samples}, "
             f"resolution={_fmt(report.resolution)})"]
    for c in report.conditions:
        line = (f"  {c.condition_id:36s} {c.verdict:13s} "
                f"margin={_fmt(c.worst_margin)} at t={_fmt(c.worst_time)}")
        if c.note:
            line += f"  [{c.note}]"
        lines.append(line)
    lines.append(f"overall: {report.verdict}")
    return "\n".join(lines) + "\n"


def write_summary(path, traj, report, config_hash: str = "") -> None:
    rec = traj.records[-1]
    lines = [
        "# ricciball-summary v1",
        f"config_hash = {config_hash}",
        f"status = {traj.status}",
        f"abort_message = {traj.abort_message}",
        f"formulation = {traj.formulation}",
        f"t_reached = {_fmt(rec.t)}",
        f"total_steps = {traj.total_steps}",
        f"dt_min_used = {_fmt(traj.dt_min_used if math.isfinite(traj.dt_min_used) else 0.0)}",
        f"dt_max_used = {_fmt(traj.dt_max_used)}",
        f"final_vol = {_fmt(rec.vol)}",
        f"final_sup_F1_compact = {_fmt(rec.sup_F1_compact)}",
    ]
    if report is not None:
        lines.append(f"monitors_all_pass = {report.all_pass}")
        lines.append("failed_checks = " + ",".join(report.failed_ids()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
