"""CSV writers and the run manifest.

Floats are written with 17 significant digits so every value round-trips to
the same double, and headers are fixed so files from separate runs diff cleanly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .sim import QUANTITIES

XYZ = ("x", "y", "z")


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def _vec_cols(name):
    return [f"{name}_{a}" for a in XYZ]


TRAJECTORY_HEADER = (
    ["t", "rx", "ry", "rz", "vx", "vy", "vz", "m"]
    + _vec_cols("a_cmd") + _vec_cols("a_applied") + _vec_cols("a_p")
    + _vec_cols("zem") + _vec_cols("zev") + _vec_cols("p") + _vec_cols("divert")
    + _vec_cols("s1") + _vec_cols("s2") + _vec_cols("phi")
    + ["rho_z"] + _vec_cols("d") + ["t_go"]
    + _vec_cols("landing") + _vec_cols("divert_net"))


def write_trajectory(tlog, path):
    cols = [tlog.t[:, None], tlog.r, tlog.v, tlog.m[:, None], tlog.a_cmd, tlog.a_applied,
            tlog.a_p, tlog.zem, tlog.zev, tlog.p, tlog.divert_term, tlog.s1, tlog.s2, tlog.phi,
            tlog.rho_z[:, None], tlog.d, tlog.t_go[:, None], tlog.landing_term, tlog.divert_net]
    return write_csv(path, TRAJECTORY_HEADER, np.hstack(cols))


RUN_HEADER = ["run", "law", "status", "dx", "dy", "dvz", "dm", "flight_time", "penetrations",
              "min_clearance", "x0", "y0", "z0", "vx0", "vy0", "vz0"]


def write_runs(summaries, path):
    """One row per run; ``summaries`` is a list or a dict law -> list."""
    if isinstance(summaries, dict):
        summaries = [s for law in summaries for s in summaries[law]]
    rows = ([s.run, s.law, s.status, s.dx, s.dy, s.dvz, s.dm, s.flight_time, s.penetrations,
             s.min_clearance, *(s.r0 or (math.nan,) * 3), *(s.v0 or (math.nan,) * 3)]
            for s in summaries)
    return write_csv(path, RUN_HEADER, rows)


STATS_HEADER = (["law", "n_ok", "n_failed"] + [f"mean_{q}" for q in QUANTITIES]
                + [f"sd_{q}" for q in QUANTITIES] + [f"mean_abs_{q}" for q in QUANTITIES])


def write_stats(stats, path):
    rows = ([r.law, r.n_ok, r.n_failed] + [r.mean[q] for q in QUANTITIES]
            + [r.sd[q] for q in QUANTITIES] + [r.mean_abs[q] for q in QUANTITIES]
            for r in stats.rows.values())
    return write_csv(path, STATS_HEADER, rows)


TTEST_HEADER = ["quantity", "law_a", "law_b", "n", "mean_diff", "t", "p_value_one_sided"]


def write_ttests(stats, path):
    rows = ([p.quantity, p.a, p.b, p.n, p.mean_diff, p.statistic, p.p_value]
            for p in stats.paired)
    return write_csv(path, TTEST_HEADER, rows)


EVENT_HEADER = ["axis", "trigger", "t_begin", "t_end", "active_at_end"]


def write_events(events, path):
    rows = ([e.axis, e.trigger, e.t_begin, e.t_end, e.active_at_end] for e in events)
    return write_csv(path, EVENT_HEADER, rows)


BARRIER_HEADER = ["r_z", "rho_x_plus", "rho_x_minus", "rho_y_plus", "rho_y_minus"]


def write_barriers(r_z, rho, path):
    """``rho`` is (N, 4) ordered as the header."""
    return write_csv(path, BARRIER_HEADER, np.column_stack([r_z, rho]))


def write_vertical_barrier(lateral, r_z, rho_z, path):
    return write_csv(path, ["lateral", "r_z", "rho_z"], np.column_stack([lateral, r_z, rho_z]))


PFTS_HEADER = (["t", "t_go", "p1", "L", "M"] + _vec_cols("phi") + _vec_cols("settling_bound")
               + _vec_cols("feasible"))


def write_pfts(t, report, path):
    rows = np.column_stack([t, report.t_go, report.feasible_p1, report.L, report.M, report.phi,
                            report.settling_bound, report.feasible.astype(int)])
    return write_csv(path, PFTS_HEADER, ([*r[:-3], *map(int, r[-3:])] for r in rows))


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance record written next to every set of outputs."""
    command: str
    config: dict
    seed: int
    files: dict = field(default_factory=dict)    # name -> sha256
    wall_clock_s: float = 0.0
    tool_version: str = __version__
    python: str = field(default_factory=lambda: sys.version.split()[0])
    platform: str = field(default_factory=platform.platform)
    numpy: str = np.__version__
    started: float = field(default_factory=time.time, repr=False)

    def add(self, path):
        path = Path(path)
        self.files[path.name] = sha256(path)

    def write(self, out_dir):
        self.wall_clock_s = time.time() - self.started
        doc = {k: v for k, v in self.__dict__.items() if k != "started"}
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path
