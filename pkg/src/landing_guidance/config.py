"""YAML scenario and campaign files.

Every key carries its unit in the name (``t_f_s``, ``T_max_N``). Missing keys
take the defaults below; unknown keys are rejected with their dotted path.
A file with a ``montecarlo`` section describes a campaign, otherwise a single run.
"""
from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import yaml

from .dynamics import Environment, LanderState, Perturbation
from .errors import ConfigurationError
from .guidance import GuidanceConfig, law_tag
from .sim import McConfig, Scenario
from .terrain import StepTerrain

DEFAULTS = {
    "law": "mss-otalg",
    "seed": 0,
    "dt_s": 0.01,
    "termination_altitude_m": 0.05,
    "t_go_min_s": 0.1,
    "initial": {"r_m": [1051.86, 562.15, 2459.07], "v_m_s": [-165.0, -26.91, 9.45],
                "m_kg": 1905.0},
    "environment": {
        "g_m_s2": [0.0, 0.0, -3.7114], "g_e_m_s2": 9.807, "T_max_N": 31000.0, "I_sp_s": 225.0,
        "actuator_tau_s": 0.0556, "thrust_noise_frac": 0.05, "dry_mass_kg": 0.0,
        "perturbation": {"kind": "none", "coeff": 0.3, "time_scale_s": 3.0},
    },
    "terrain": {"heights_m": [500.0, 1000.0], "half_widths_m": [600.0, 1000.0],
                "lambdas": [20, 6], "theta_deg": 0.05, "delta_m": 95.5,
                "vertical_rule": "lateral"},
    "guidance": {"l1": 1.0, "l2": 9500.0, "l3": 500.0, "Lambda": 2.0, "k1": 0.8, "k2": 0.2,
                 "a_p_max_m_s2": 3.7114, "eps_boundary": 0.1, "r_f_m": [0.0, 0.0, 0.0],
                 "v_f_m_s": [0.0, 0.0, 0.0], "t_f_s": 100.0},
}

MC_KEYS = ("x0_m", "y0_m", "z0_m", "vx0_m_s", "vy0_m_s", "vz0_m_s", "m0_kg")
MC_DEFAULTS = {
    "n_runs": 300,
    "perturbed": False,
    "laws": ["mss-otalg", "otalg", "ogl"],
    "mean": dict(zip(MC_KEYS, [0.0, 0.0, 2500.0, 0.0, 0.0, -80.0, 1905.0])),
    "sd": dict(zip(MC_KEYS, [2200.0, 2200.0, 400.0, 80.0, 80.0, 20.0, 0.0])),
}


def _merge(defaults, given, path=""):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigurationError("expected a mapping", path or "<root>")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigurationError("unknown key", where)
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], val, where)
        else:
            out[key] = val
    return out


def _num(tree, path):
    node = tree
    for k in path.split("."):
        node = node[k]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigurationError(f"expected a number, got {node!r}", path)
    return float(node)


def _vec(tree, path, n=3, allow_scalar=False):
    node = tree
    for k in path.split("."):
        node = node[k]
    if allow_scalar and isinstance(node, (int, float)) and not isinstance(node, bool):
        return float(node)
    try:
        arr = np.asarray(node, dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected a list of numbers, got {node!r}", path) from None
    if arr.ndim != 1 or (n and arr.size != n):
        raise ConfigurationError(f"expected {n or 'a list of'} numbers, got {node!r}", path)
    return tuple(float(x) for x in arr)


def _bool(val, path):
    if isinstance(val, bool):
        return val
    raise ConfigurationError(f"expected true/false, got {val!r}", path)


def scenario_from_tree(tree):
    t = _merge(DEFAULTS, {k: v for k, v in tree.items() if k != "montecarlo"})
    env_t = t["environment"]
    pert = env_t["perturbation"]
    if pert["kind"] not in ("none", "sinusoidal"):
        raise ConfigurationError("kind must be 'none' or 'sinusoidal'",
                                 "environment.perturbation.kind")
    law = law_tag(t["law"])
    env = Environment(
        g=_vec(t, "environment.g_m_s2"), g_e=_num(t, "environment.g_e_m_s2"),
        T_max=_num(t, "environment.T_max_N"), I_sp=_num(t, "environment.I_sp_s"),
        actuator_tau=_num(t, "environment.actuator_tau_s"),
        thrust_noise_frac=_num(t, "environment.thrust_noise_frac"),
        perturbation=Perturbation(pert["kind"], _num(t, "environment.perturbation.coeff"),
                                  _num(t, "environment.perturbation.time_scale_s")),
        dry_mass=_num(t, "environment.dry_mass_kg"))
    ter = t["terrain"]
    if not isinstance(ter["lambdas"], (list, tuple)):
        raise ConfigurationError(f"expected a list of even integers, got {ter['lambdas']!r}",
                                 "terrain.lambdas")
    terrain = StepTerrain(_vec(t, "terrain.heights_m", 0), _vec(t, "terrain.half_widths_m", 0),
                          tuple(ter["lambdas"]), _num(t, "terrain.theta_deg"))
    gc = GuidanceConfig(
        l1=_vec(t, "guidance.l1", allow_scalar=True), l2=_vec(t, "guidance.l2", allow_scalar=True),
        l3=_vec(t, "guidance.l3", allow_scalar=True), Lambda=_num(t, "guidance.Lambda"),
        k1=_num(t, "guidance.k1"), k2=_num(t, "guidance.k2"),
        a_p_max=_num(t, "guidance.a_p_max_m_s2"), eps_boundary=_num(t, "guidance.eps_boundary"),
        r_f=_vec(t, "guidance.r_f_m"), v_f=_vec(t, "guidance.v_f_m_s"),
        t_f=_num(t, "guidance.t_f_s"))
    seed = t["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigurationError(f"expected an unsigned integer, got {seed!r}", "seed")
    sc = Scenario(
        initial=LanderState(_vec(t, "initial.r_m"), _vec(t, "initial.v_m_s"),
                            _num(t, "initial.m_kg")),
        env=env, terrain=terrain, guidance=gc, law=law, dt=_num(t, "dt_s"), seed=seed,
        termination_altitude=_num(t, "termination_altitude_m"),
        delta=_num(t, "terrain.delta_m"), vertical_rule=str(ter["vertical_rule"]),
        t_go_min=_num(t, "t_go_min_s"))
    sc.barriers   # validates delta and the vertical rule
    return sc


def campaign_from_tree(tree):
    base = scenario_from_tree(tree)
    mc_t = _merge(MC_DEFAULTS, tree.get("montecarlo"), "montecarlo")
    n = mc_t["n_runs"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigurationError(f"expected an integer, got {n!r}", "montecarlo.n_runs")
    laws = mc_t["laws"]
    if isinstance(laws, str):
        laws = [laws]
    for i, name in enumerate(laws):
        try:
            law_tag(name)
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc).split(": ", 1)[-1], f"montecarlo.laws[{i}]") from None
    mean = tuple(_num(mc_t, f"mean.{k}") for k in MC_KEYS)
    sd = tuple(_num(mc_t, f"sd.{k}") for k in MC_KEYS)
    return McConfig(base=base, n_runs=n, mean=mean, sd=sd, laws=tuple(laws),
                    perturbed=_bool(mc_t["perturbed"], "montecarlo.perturbed"), seed=base.seed)


def load_tree(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed YAML: {exc}", str(path)) from None
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ConfigurationError("top level must be a mapping", str(path))
    return tree


def parse_config(path):
    """Scenario, or McConfig when the file has a ``montecarlo`` section."""
    tree = load_tree(path)
    if "montecarlo" in tree:
        return campaign_from_tree(tree)
    return scenario_from_tree(tree)


def _f(x):
    return [float(v) for v in np.atleast_1d(x)] if np.ndim(x) else float(x)


def to_tree(cfg):
    """Inverse of :func:`parse_config` for a Scenario or McConfig."""
    if isinstance(cfg, McConfig):
        tree = to_tree(cfg.base)
        tree["seed"] = int(cfg.seed)
        tree["montecarlo"] = {
            "n_runs": int(cfg.n_runs), "perturbed": bool(cfg.perturbed),
            "laws": [law.lower().replace("_", "-") for law in cfg.laws],
            "mean": dict(zip(MC_KEYS, map(float, cfg.mean))),
            "sd": dict(zip(MC_KEYS, map(float, cfg.sd)))}
        return tree
    sc, env, gc, ter = cfg, cfg.env, cfg.guidance, cfg.terrain
    return {
        "law": sc.law.lower().replace("_", "-"), "seed": int(sc.seed), "dt_s": float(sc.dt),
        "termination_altitude_m": float(sc.termination_altitude),
        "t_go_min_s": float(sc.t_go_min),
        "initial": {"r_m": _f(sc.initial.r), "v_m_s": _f(sc.initial.v), "m_kg": float(sc.initial.m)},
        "environment": {
            "g_m_s2": _f(env.g), "g_e_m_s2": float(env.g_e), "T_max_N": float(env.T_max),
            "I_sp_s": float(env.I_sp), "actuator_tau_s": float(env.actuator_tau),
            "thrust_noise_frac": float(env.thrust_noise_frac),
            "dry_mass_kg": float(env.dry_mass),
            "perturbation": {"kind": env.perturbation.kind,
                             "coeff": float(env.perturbation.coeff),
                             "time_scale_s": float(env.perturbation.time_scale_s)}},
        "terrain": {"heights_m": _f(ter.heights), "half_widths_m": _f(ter.half_widths),
                    "lambdas": [int(x) for x in ter.lambdas], "theta_deg": float(ter.theta_deg),
                    "delta_m": float(sc.delta), "vertical_rule": sc.vertical_rule},
        "guidance": {"l1": _f(gc.l1), "l2": _f(gc.l2), "l3": _f(gc.l3),
                     "Lambda": float(gc.Lambda), "k1": float(gc.k1), "k2": float(gc.k2),
                     "a_p_max_m_s2": float(gc.a_p_max), "eps_boundary": float(gc.eps_boundary),
                     "r_f_m": _f(gc.r_f), "v_f_m_s": _f(gc.v_f), "t_f_s": float(gc.t_f)},
    }


def dump_config(cfg, path=None):
    text = yaml.safe_dump(to_tree(cfg), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text
