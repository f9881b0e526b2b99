"""Command-line entry point: ``landing-guidance <subcommand> [options]``.

Every subcommand writes CSV data files plus ``manifest.json`` into the output
directory (``--out``, else ``$LANDING_GUIDANCE_OUT``, else ``./out``).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import detect_divert_events, pfts_check
from .config import campaign_from_tree, load_tree, to_tree
from .errors import ConfigurationError, DomainError, InfeasibleScenarioError, PropagationError
from .guidance import divert_rate, law_tag
from .output import (RunManifest, write_barriers, write_csv, write_events, write_pfts, write_runs,
                     write_stats, write_trajectory, write_ttests, write_vertical_barrier)
from .sim import run_monte_carlo, run_simulation, t_f_min
from .terrain import critical_distance, horizontal_barrier, vertical_barrier

OUT_ENV = "LANDING_GUIDANCE_OUT"


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _u64(text):
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def _law(text):
    try:
        return law_tag(text)
    except ConfigurationError:
        raise argparse.ArgumentTypeError(
            f"unknown law {text!r}; choose ogl, otalg or mss-otalg") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="landing-guidance",
                                 description="Terrain-avoiding powered-descent guidance simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML scenario or campaign file")
    common.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--seed", type=_u64, help="overrides the seed from the config")

    p = sub.add_parser("simulate", parents=[common], help="fly one scenario")
    p.add_argument("--law", type=_law)
    p.add_argument("--perturbed", type=_bool, metavar="BOOL")

    p = sub.add_parser("montecarlo", parents=[common], help="dispersed campaign over several laws")
    p.add_argument("--law", type=_law, action="append",
                   help="restrict to this law (repeatable); default: all laws in the config")
    p.add_argument("--perturbed", type=_bool, metavar="BOOL")
    p.add_argument("--runs", type=_positive_int)

    p = sub.add_parser("barriers", parents=[common], help="sample the barrier geometry")
    p.add_argument("--samples", type=_positive_int, default=501)

    p = sub.add_parser("check-pfts", parents=[common],
                       help="fixed-time stability conditions along a simulated trajectory")
    p.add_argument("--law", type=_law)
    p.add_argument("--perturbed", type=_bool, metavar="BOOL")
    p.add_argument("--theta", type=float, default=0.9)
    p.add_argument("--p1-max", type=float, default=50.0)
    p.add_argument("--stride", type=_positive_int, default=10,
                   help="use every n-th trajectory sample")

    sub.add_parser("tfmin", parents=[common], help="minimum feasible flight time")
    return ap


def _tree(args):
    tree = load_tree(args.config) if args.config else {}
    if args.seed is not None:
        tree["seed"] = args.seed
    return tree


def _scenario(args, parser):
    """Single-run scenario from config and flags. A campaign file contributes its base scenario."""
    mc = campaign_from_tree(_tree(args))
    sc = mc.base
    law = getattr(args, "law", None)
    if law is not None:
        sc = replace(sc, law=law)
    perturbed = getattr(args, "perturbed", None)
    if perturbed is not None:
        sc = replace(mc, base=sc, perturbed=perturbed).scenario()
    return sc


def _out_dir(args):
    out = args.out or Path(os.environ.get(OUT_ENV, "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, parser):
    sc = _scenario(args, parser)
    out = _out_dir(args)
    man = RunManifest("simulate", to_tree(sc), sc.seed)
    tlog = run_simulation(sc)
    man.add(write_trajectory(tlog, out / "trajectory.csv"))
    man.add(write_events(detect_divert_events(tlog), out / "events.csv"))
    man.add(write_runs([tlog.summary], out / "summary.csv"))
    man.write(out)
    s = tlog.summary
    print(f"{s.law}: {s.status} at t = {s.flight_time:.2f} s, dx = {s.dx:.3e} m, "
          f"dy = {s.dy:.3e} m, dvz = {s.dvz:.3f} m/s, fuel = {s.dm:.2f} kg")
    return 0


def cmd_montecarlo(args, parser):
    tree = _tree(args)
    mc = campaign_from_tree(tree)
    if args.law:
        mc = replace(mc, laws=tuple(dict.fromkeys(args.law)))
    if args.perturbed is not None:
        mc = replace(mc, perturbed=args.perturbed)
    if args.runs is not None:
        if args.runs < 2:
            parser.error("--runs must be >= 2 for campaign statistics")
        mc = replace(mc, n_runs=args.runs)
    out = _out_dir(args)
    man = RunManifest("montecarlo", to_tree(mc), mc.seed)
    summaries, stats = run_monte_carlo(mc)
    man.add(write_runs(summaries, out / "runs.csv"))
    man.add(write_stats(stats, out / "stats.csv"))
    man.add(write_ttests(stats, out / "ttest.csv"))
    man.write(out)
    for row in stats.rows.values():
        print(f"{row.law}: {row.n_ok} ok, {row.n_failed} failed, "
              f"fuel {row.mean['dm']:.2f} +/- {row.sd['dm']:.2f} kg, "
              f"dvz {row.mean['dvz']:.3f} m/s")
    for p in stats.paired:
        print(f"paired t ({p.pairing}): t = {p.statistic:.3f}, one-sided p = {p.p_value:.3g}")
    return 0


def cmd_barriers(args, parser):
    sc = _scenario(args, parser)
    b = sc.barriers
    out = _out_dir(args)
    man = RunManifest("barriers", to_tree(sc), sc.seed)
    top = 1.5 * float(b.heights.max())
    r_z = np.linspace(0.0, top, args.samples)
    rho = np.column_stack([horizontal_barrier(b, ax, side, r_z)
                           for ax in (0, 1) for side in (1, -1)])
    man.add(write_barriers(r_z, rho, out / "barriers.csv"))
    lat = np.linspace(0.0, 1.5 * float(b.widths.max()), 61)
    alt = np.linspace(0.0, top, 61)
    L, Z = (a.ravel() for a in np.meshgrid(lat, alt, indexing="ij"))
    rho_z = vertical_barrier(b, np.column_stack([L, np.zeros_like(L), Z]))
    man.add(write_vertical_barrier(L, Z, rho_z, out / "vertical_barrier.csv"))
    man.write(out)
    print(f"wrote {args.samples} horizontal and {L.size} vertical barrier samples to {out}")
    return 0


def cmd_check_pfts(args, parser):
    sc = _scenario(args, parser)
    if sc.law != "MSS_OTALG":
        parser.error("check-pfts needs --law mss-otalg: only that law has a sliding parameter")
    gc = sc.guidance
    l1, l2, _ = gc.gains
    d_star = critical_distance(l1, l2)
    p_max = float(np.max(divert_rate(d_star, gc)))
    out = _out_dir(args)
    man = RunManifest("check-pfts", to_tree(sc), sc.seed)
    tlog = run_simulation(sc)
    idx = np.arange(0, len(tlog.t), args.stride)
    rep = pfts_check(tlog.phi[idx], tlog.t_go[idx], p_max, theta=args.theta, t_f=gc.t_f,
                     p1_search_range=(1.0, args.p1_max), k1=gc.k1, k2=gc.k2,
                     a_p_max=gc.a_p_max)
    man.add(write_pfts(tlog.t[idx], rep, out / "pfts.csv"))
    man.write(out)
    n_found = int(np.sum(np.isfinite(rep.feasible_p1)))
    print(f"p_max = {p_max:.4f} m/s^4; feasible p1 found for {n_found}/{len(idx)} samples; "
          f"M < phi <= L holds on {int(rep.feasible.all(axis=1).sum())}/{len(idx)} samples")
    return 0 if rep.all_p1_found else 3


def cmd_tfmin(args, parser):
    sc = _scenario(args, parser)
    out = _out_dir(args)
    man = RunManifest("tfmin", to_tree(sc), sc.seed)
    tmin = t_f_min(sc.initial, sc.env)
    ok = sc.guidance.t_f >= tmin
    man.add(write_csv(out / "tfmin.csv", ["t_f_min_s", "t_f_s", "t_f_feasible"],
                      [[tmin, sc.guidance.t_f, ok]]))
    man.write(out)
    print(f"t_f_min = {tmin:.4f} s; t_f = {sc.guidance.t_f:g} s "
          f"{'>=' if ok else '<'} t_f_min ({'feasible' if ok else 'infeasible'})")
    return 0


COMMANDS = {"simulate": cmd_simulate, "montecarlo": cmd_montecarlo, "barriers": cmd_barriers,
            "check-pfts": cmd_check_pfts, "tfmin": cmd_tfmin}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args, parser)
    except (ConfigurationError, InfeasibleScenarioError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PropagationError as exc:
        print(f"error: propagation failed ({exc.reason}): {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
