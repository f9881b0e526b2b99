"""Closed-loop simulation, Monte Carlo campaigns and terminal statistics."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as sps

from . import _kernel as K
from .dynamics import Environment, LanderState, Perturbation, lag_decay
from .errors import (ConfigurationError, InfeasibleScenarioError, PropagationError,
                     UndefinedStatisticError)
from .guidance import LAWS, GuidanceConfig, law_tag
from .terrain import StepTerrain, build_barriers, ground_height

log = logging.getLogger(__name__)

NOMINAL_R0 = (1051.86, 562.15, 2459.07)
NOMINAL_V0 = (-165.0, -26.91, 9.45)
NOMINAL_M0 = 1905.0

STATUS = {K.LANDED: "landed", K.TIME_UP: "t_f reached", K.FUEL: "fuel depleted",
          K.NONFINITE: "non-finite state", K.IMPACT: "terrain impact"}
CHUNK = 1000   # steps of thrust noise drawn per rng call


def default_terrain():
    return StepTerrain(heights=(500.0, 1000.0), half_widths=(600.0, 1000.0), lambdas=(20, 6),
                       theta_deg=0.05)


@dataclass
class Scenario:
    initial: LanderState = field(
        default_factory=lambda: LanderState(NOMINAL_R0, NOMINAL_V0, NOMINAL_M0))
    env: Environment = field(default_factory=Environment)
    terrain: StepTerrain = field(default_factory=default_terrain)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    law: str = "MSS_OTALG"
    dt: float = 0.01                  # [s]
    seed: int = 0
    termination_altitude: float = 0.05   # [m]
    delta: float = 95.5               # vertical barrier margin [m]
    vertical_rule: str = "lateral"
    t_go_min: float = 0.1             # [s]

    def __post_init__(self):
        self.law = law_tag(self.law)
        if not 0 < self.dt < self.guidance.t_f:
            raise ConfigurationError("dt must lie in (0, t_f)", "dt_s")
        if not self.t_go_min > 0:
            raise ConfigurationError("t_go_min must be > 0", "t_go_min_s")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer", "seed")
        if not self.initial.m > 0:
            raise ConfigurationError("initial mass must be > 0", "initial.m_kg")

    @property
    def barriers(self):
        return build_barriers(self.terrain, self.delta, vertical_rule=self.vertical_rule)


@dataclass
class RunSummary:
    law: str
    status: str
    dx: float           # final lateral miss [m]
    dy: float
    dvz: float          # final vertical speed error [m/s]
    dm: float           # fuel used [kg]
    flight_time: float  # [s]
    penetrations: int   # log samples inside the true terrain
    min_clearance: float
    run: int = 0
    r0: tuple = ()
    v0: tuple = ()

    @property
    def ok(self):
        return self.status in ("landed", "t_f reached")


@dataclass
class TrajectoryLog:
    """Per-step telemetry. Row k holds the state at ``t[k]`` and the commands applied over the
    following step; the final row is the terminal state (commands evaluated there, not applied)."""
    law: str
    dt: float
    t: np.ndarray
    r: np.ndarray
    v: np.ndarray
    m: np.ndarray
    a_cmd: np.ndarray        # guidance output before the thrust limit
    a_applied: np.ndarray
    a_p: np.ndarray
    zem: np.ndarray
    zev: np.ndarray
    p: np.ndarray
    divert_term: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    phi: np.ndarray
    rho_z: np.ndarray
    d: np.ndarray
    t_go: np.ndarray
    landing_term: np.ndarray   # 6/tgo^2 ZEM - 2/tgo ZEV with gravity included
    divert_net: np.ndarray     # divert contribution left after the switching term
    summary: RunSummary

    @classmethod
    def from_rows(cls, law, dt, rows, summary):
        col = lambda i, w=3: rows[:, i:i + w].copy() if w > 1 else rows[:, i].copy()
        return cls(law, dt, col(K.T, 1), col(K.R), col(K.V), col(K.M, 1), col(K.A_CMD),
                   col(K.A_APP), col(K.A_P), col(K.ZEM), col(K.ZEV), col(K.P), col(K.DIV),
                   col(K.S1), col(K.S2), col(K.PHI), col(K.RHO_Z, 1), col(K.D),
                   col(K.TGO, 1), col(K.LAND), col(K.DIV_NET), summary)

    def __len__(self):
        return len(self.t)


def t_f_min(initial, env):
    """Shortest flight time that lets a full-thrust burn null the descent rate."""
    g = abs(env.g[2])
    a_max = env.T_max / initial.m
    if a_max <= g:
        raise InfeasibleScenarioError(f"T_max/m0 = {a_max:.4g} m/s^2 does not exceed g = {g}")
    net = a_max - g
    vz, rz = initial.v[2], initial.r[2]
    first = -vz / net
    arg = vz * vz - 2.0 * net * rz
    if arg < 0:
        return max(first, 0.0)
    return max(first, (-vz + math.sqrt(arg)) / net, 0.0)


def _noise_chunk(rngs, frac, n_steps):
    if frac == 0:
        return np.ones((len(rngs), n_steps, 3))
    return np.stack([rng.uniform(1.0 - frac, 1.0 + frac, size=(n_steps, 3)) for rng in rngs])


def _integrate(sc, r0, v0, m0, noise_seeds, record):
    """Run a batch of initial conditions through the compiled loop."""
    env, gc, b = sc.env, sc.guidance, sc.barriers
    n = r0.shape[0]
    n_max = int(round(gc.t_f / sc.dt))
    r, v, m = r0.astype(float).copy(), v0.astype(float).copy(), m0.astype(float).copy()
    a_lag, a_app, a_p = np.zeros((n, 3)), np.zeros((n, 3)), np.zeros((n, 3))
    status = np.zeros(n, np.int64)
    step = np.zeros(n, np.int64)
    t_now = np.zeros(n)
    n_pen = np.zeros(n, np.int64)
    min_clear = np.full(n, np.inf)
    ground = np.array([K._ground(ri, b.heights, b.widths) for ri in r])
    min_clear[:] = r[:, 2] - ground
    n_pen[:] = min_clear <= 0
    status[r[:, 2] <= sc.termination_altitude] = K.LANDED
    rows = np.full((n, n_max + 1, K.N_FIELDS) if record else (1, 1, K.N_FIELDS), np.nan)

    l1, l2, l3 = gc.gains
    gp = np.array([gc.Lambda, gc.k1, gc.k2, gc.a_p_max, gc.eps_boundary, sc.t_go_min])
    pert = env.perturbation
    coeff = pert.coeff if env.perturbed else 0.0
    law = LAWS.index(sc.law)
    rngs = [np.random.default_rng(int(s)) for s in noise_seeds]
    for c0 in range(0, n_max, CHUNK):
        live = np.flatnonzero(status == K.RUNNING)
        if live.size == 0:
            break
        c = min(CHUNK, n_max - c0)
        noise = np.ones((n, c, 3))
        noise[live] = _noise_chunk([rngs[i] for i in live], env.thrust_noise_frac, c)
        K.advance(law, r, v, m, a_lag, a_app, a_p, status, step, t_now, n_pen, min_clear,
                  noise, c0, n_max, sc.dt, gc.t_f, sc.termination_altitude,
                  env.g_vec, env.I_sp * env.g_e, env.T_max,
                  lag_decay(env.actuator_tau, sc.dt), coeff, pert.time_scale_s, env.dry_mass,
                  l1, l2, l3, gp, np.asarray(gc.r_f, float), np.asarray(gc.v_f, float),
                  b.heights, b.widths, b.alpha, b.beta, b.gamma, b.lam, b.delta,
                  0 if b.vertical_rule == "lateral" else 1, record, rows)
    return dict(r=r, v=v, m=m, status=status, step=step, t=t_now, n_pen=n_pen,
                min_clear=min_clear, rows=rows)


def _summaries(sc, out, m0, r0, v0):
    gc = sc.guidance
    res = []
    for i in range(len(m0)):
        res.append(RunSummary(
            law=sc.law, status=STATUS.get(int(out["status"][i]), "running"),
            dx=float(out["r"][i, 0] - gc.r_f[0]), dy=float(out["r"][i, 1] - gc.r_f[1]),
            dvz=float(out["v"][i, 2] - gc.v_f[2]), dm=float(m0[i] - out["m"][i]),
            flight_time=float(out["t"][i]), penetrations=int(out["n_pen"][i]),
            min_clearance=float(out["min_clear"][i]), run=i,
            r0=tuple(map(float, r0[i])), v0=tuple(map(float, v0[i]))))
    return res


def run_simulation(sc):
    """Fly one scenario and return its full telemetry."""
    tmin = t_f_min(sc.initial, sc.env)
    if sc.guidance.t_f < tmin:
        warnings.warn(f"t_f = {sc.guidance.t_f} s is below t_f_min = {tmin:.3f} s", stacklevel=2)
    r0, v0 = sc.initial.r[None], sc.initial.v[None]
    m0 = np.array([sc.initial.m])
    out = _integrate(sc, r0, v0, m0, [sc.seed], record=True)
    summary = _summaries(sc, out, m0, r0, v0)[0]
    last = int(out["step"][0])
    rows = out["rows"][0, :last + 1]
    status = int(out["status"][0])
    if status == K.NONFINITE:
        rows = rows[:last]
    tlog = TrajectoryLog.from_rows(sc.law, sc.dt, rows, summary)
    if status == K.NONFINITE:
        raise PropagationError(f"non-finite state after t = {rows[-1, K.T]:.3f} s", tlog)
    if status == K.FUEL:
        raise PropagationError(f"fuel depleted at t = {out['t'][0]:.3f} s", tlog, reason="fuel")
    return tlog


def terrain_penetrations(tlog, sc):
    """Number of log samples at or below the true stepped terrain."""
    return int(np.sum(tlog.r[:, 2] <= ground_height(sc.barriers, tlog.r)))


# ---------------------------------------------------------------- Monte Carlo

IC_NAMES = ("x0", "y0", "z0", "vx0", "vy0", "vz0", "m0")


@dataclass
class McConfig:
    base: Scenario = field(default_factory=Scenario)
    n_runs: int = 300
    mean: tuple = (0.0, 0.0, 2500.0, 0.0, 0.0, -80.0, 1905.0)
    sd: tuple = (2200.0, 2200.0, 400.0, 80.0, 80.0, 20.0, 0.0)
    laws: tuple = LAWS
    perturbed: bool = False
    seed: int = 0

    def __post_init__(self):
        if int(self.n_runs) < 2:
            raise ConfigurationError("n_runs must be >= 2", "montecarlo.n_runs")
        if len(self.mean) != 7 or len(self.sd) != 7:
            raise ConfigurationError(f"need 7 entries ordered {IC_NAMES}", "montecarlo")
        if any(s < 0 for s in self.sd):
            raise ConfigurationError("standard deviations must be >= 0", "montecarlo.sd")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer", "montecarlo.seed")
        self.laws = tuple(law_tag(x) for x in self.laws)
        if not self.laws:
            raise ConfigurationError("at least one law required", "montecarlo.laws")

    def scenario(self, law=None):
        env = self.base.env
        pert = Perturbation("sinusoidal", env.perturbation.coeff, env.perturbation.time_scale_s) \
            if self.perturbed else Perturbation("none", env.perturbation.coeff,
                                                env.perturbation.time_scale_s)
        return replace(self.base, env=replace(env, perturbation=pert),
                       law=law or self.base.law)


@dataclass
class InitialDraws:
    r0: np.ndarray
    v0: np.ndarray
    m0: np.ndarray
    noise_seeds: np.ndarray
    rejected: int


def draw_initial_conditions(mc):
    """Initial states from independent normals; z0 <= 0 draws are redrawn."""
    ic_seq, noise_seq = np.random.SeedSequence(int(mc.seed)).spawn(2)
    rng = np.random.default_rng(ic_seq)
    mean, sd = np.asarray(mc.mean, float), np.asarray(mc.sd, float)
    x = np.empty((mc.n_runs, 7))
    rejected = 0
    for i in range(mc.n_runs):
        while True:
            x[i] = mean + sd * rng.standard_normal(7)
            if x[i, 2] > 0 and x[i, 6] > 0:
                break
            rejected += 1
    if rejected:
        log.info("redrew %d initial conditions with non-positive altitude or mass", rejected)
    seeds = noise_seq.generate_state(mc.n_runs, dtype=np.uint64)
    return InitialDraws(x[:, :3], x[:, 3:6], x[:, 6], seeds, rejected)


def run_scenario_for(mc, draws, i, law):
    """The single-run scenario equivalent to campaign run ``i`` (for replay and debugging)."""
    sc = mc.scenario(law)
    return replace(sc, initial=LanderState(draws.r0[i], draws.v0[i], draws.m0[i]),
                   seed=int(draws.noise_seeds[i]))


@dataclass
class LawStats:
    law: str
    n_ok: int
    n_failed: int
    mean: dict
    sd: dict
    mean_abs: dict


@dataclass
class PairedTTest:
    quantity: str
    a: str
    b: str
    n: int
    mean_diff: float
    statistic: float
    p_value: float   # one-sided, H1: mean(a - b) > 0

    @property
    def pairing(self):
        return f"{self.quantity}({self.a}) - {self.quantity}({self.b}), {self.n} common runs"


@dataclass
class DispersionStats:
    rows: dict
    paired: list
    n_runs: int
    rejected_draws: int = 0


QUANTITIES = ("dm", "dx", "dy", "dvz")


def law_stats(law, summaries):
    ok = [s for s in summaries if s.ok]
    vals = {q: np.array([getattr(s, q) for s in ok]) for q in QUANTITIES}
    mean = {q: float(np.mean(x)) if len(x) else math.nan for q, x in vals.items()}
    sd = {q: float(np.std(x, ddof=1)) if len(x) > 1 else math.nan for q, x in vals.items()}
    mabs = {q: float(np.mean(np.abs(x))) if len(x) else math.nan for q, x in vals.items()}
    return LawStats(law, len(ok), len(summaries) - len(ok), mean, sd, mabs)


def paired_t_test(a, b):
    """One-sided paired t statistic ``mean(a-b) / (sd(a-b)/sqrt(n))`` and its p-value."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise UndefinedStatisticError("need two equal-length series with at least 2 entries")
    diff = a - b
    sd = np.std(diff, ddof=1)
    if sd == 0:
        raise UndefinedStatisticError("differences have zero variance")
    t = float(np.mean(diff) / (sd / math.sqrt(diff.size)))
    return t, float(sps.t.sf(t, diff.size - 1))


def run_monte_carlo(mc):
    """Fly every law over the same initial draws and noise streams.

    Returns ``(summaries, stats)`` with ``summaries[law]`` a list of per-run results.
    """
    draws = draw_initial_conditions(mc)
    summaries = {}
    for law in mc.laws:
        sc = mc.scenario(law)
        out = _integrate(sc, draws.r0, draws.v0, draws.m0, draws.noise_seeds, record=False)
        summaries[law] = _summaries(sc, out, draws.m0, draws.r0, draws.v0)
        n_fail = sum(not s.ok for s in summaries[law])
        if n_fail:
            log.warning("%s: %d of %d runs failed", law, n_fail, mc.n_runs)
    rows = {law: law_stats(law, summaries[law]) for law in mc.laws}
    paired = []
    if "MSS_OTALG" in mc.laws:
        for other in mc.laws:
            if other == "MSS_OTALG":
                continue
            both = [(a.dm, b.dm) for a, b in zip(summaries["MSS_OTALG"], summaries[other])
                    if a.ok and b.ok]
            if len(both) < 2:
                continue
            x, y = np.array(both).T
            try:
                t, pv = paired_t_test(x, y)
            except UndefinedStatisticError:
                continue
            paired.append(PairedTTest("dm", "MSS_OTALG", other, len(both),
                                      float(np.mean(x - y)), t, pv))
    return summaries, DispersionStats(rows, paired, mc.n_runs, draws.rejected)
