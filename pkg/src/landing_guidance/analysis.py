"""Post-processing of trajectory logs: divert-manoeuvre detection, Lyapunov monitors and
practical fixed-time stability (PFTS) checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .guidance import divert_rate
from .terrain import critical_distance

AXES = "xyz"


@dataclass
class DivertEvent:
    axis: str
    t_begin: float
    t_end: Optional[float]   # None: still active when the log ends
    trigger: str             # "magnitude" or "velocity_sign"

    @property
    def active_at_end(self):
        return self.t_end is None


def _ddot_sign(d, t, rho_jump, deadband):
    """Sign of the barrier-distance rate, held inside the dead-band and across barrier switches."""
    rate = np.diff(d) / np.diff(t)
    sgn = np.zeros(len(d), dtype=int)
    cur = 0
    for k, r in enumerate(rate, start=1):
        if not rho_jump[k - 1] and abs(r) > deadband:
            cur = 1 if r > 0 else -1
        sgn[k] = cur
    sgn[0] = sgn[1] if len(sgn) > 1 else 0
    return sgn


def detect_divert_events(log, hysteresis=0.01, deadband=1e-3, net=True):
    """Dominant divert manoeuvres per axis.

    A magnitude event runs while the divert acceleration outweighs the landing
    (ZEM/ZEV) term, with a relative hysteresis band on both crossings. While
    no magnitude event is running, a change of sign of the barrier-distance
    rate opens a velocity-sign event that lasts until the next sign change.

    ``net=True`` measures the divert contribution that survives in the issued
    command (``log.divert_net``, equal to the raw divert term except under the
    sliding-mode law); ``net=False`` uses the raw ``p t_go^2/12`` series.
    """
    if log is None or len(log.t) < 2:
        return []
    t = log.t
    div = np.abs(log.divert_net if net else log.divert_term)
    land = np.abs(log.landing_term)
    rho_jump = np.zeros(len(t) - 1, bool)
    events = []
    for i, ax in enumerate(AXES):
        if i == 2:
            rho_jump = np.diff(log.rho_z) != 0
        sgn = _ddot_sign(log.d[:, i], t, rho_jump, deadband)
        mag_open = vel_open = None
        for k in range(len(t)):
            if mag_open is None and div[k, i] > land[k, i] * (1 + hysteresis) and div[k, i] > 0:
                if vel_open is not None:
                    events.append(DivertEvent(ax, vel_open, float(t[k]), "velocity_sign"))
                    vel_open = None
                mag_open = float(t[k])
            elif mag_open is not None and div[k, i] < land[k, i] * (1 - hysteresis):
                events.append(DivertEvent(ax, mag_open, float(t[k]), "magnitude"))
                mag_open = None
            elif mag_open is None and k > 0 and sgn[k] != sgn[k - 1] and sgn[k - 1] != 0:
                if vel_open is None:
                    vel_open = float(t[k])
                else:
                    events.append(DivertEvent(ax, vel_open, float(t[k]), "velocity_sign"))
                    vel_open = None
        if mag_open is not None:
            events.append(DivertEvent(ax, mag_open, None, "magnitude"))
        if vel_open is not None:
            events.append(DivertEvent(ax, vel_open, None, "velocity_sign"))
    return events


def first_event(events, axis, trigger="magnitude"):
    hits = [e for e in events if e.axis == axis and e.trigger == trigger]
    return min(hits, key=lambda e: e.t_begin) if hits else None


def lyapunov_series(log):
    """``V1 = |s1|^2 / 2`` and ``V2 = |s2|^2 / 2`` per log sample."""
    return 0.5 * np.sum(log.s1**2, axis=-1), 0.5 * np.sum(log.s2**2, axis=-1)


# ------------------------------------------------------------------ PFTS bounds

def p1_condition_rhs(p1):
    """``2^(p1/2) (p1 - 1) / (1 + p1)``, strictly increasing for p1 > 1."""
    p1 = np.asarray(p1, float)
    return 2.0 ** (p1 / 2) * (p1 - 1) / (1 + p1)


def upper_bound_L(p1, t_go):
    return p1_condition_rhs(p1) * np.asarray(t_go, float) ** 2 / 12.0


def lower_bound_M(p1, t_go, theta, t_f):
    return 1.0 / (12.0 / (p1_condition_rhs(p1) * np.asarray(t_go, float) ** 2) + t_f * theta / math.sqrt(2))


def settling_bound(p1, phi, theta, t_go):
    """Settling-time bound for the sliding variable given p1, Phi and theta."""
    p1 = np.asarray(p1, float)
    return (2.0 / (math.sqrt(2) * np.asarray(phi, float) * theta)
            - 2 * (1 + p1) / (2 ** ((p1 + 1) / 2) * (p1 - 1) * theta) * 12.0
            / np.asarray(t_go, float) ** 2)


@dataclass
class PftsReport:
    t_go: np.ndarray            # (N,)
    phi: np.ndarray             # (N, 3)
    feasible_p1: np.ndarray     # (N,), NaN where the search found none
    L: np.ndarray               # (N,), at feasible_p1
    M: np.ndarray               # (N,)
    settling_bound: np.ndarray  # (N, 3)
    feasible: np.ndarray        # (N, 3): M < phi <= L

    @property
    def all_p1_found(self):
        return bool(np.all(np.isfinite(self.feasible_p1)))


def p1_grid(p1_range=(1.0, 50.0), n=2000):
    lo, hi = p1_range
    if not (1.0 <= lo < hi) or n < 2:
        raise ConfigurationError("p1 search range must satisfy 1 <= lo < hi with >= 2 points",
                                 "pfts.p1_range")
    return lo + np.geomspace(1e-3 * (hi - lo) / n, hi - lo, n)


def _search_p1(lhs, grid, rhs):
    """Smallest p1 on the grid with rhs >= lhs, refined by bisection towards the threshold."""
    k = int(np.searchsorted(rhs, lhs, side="left"))
    if k >= len(grid):
        return math.nan
    if k == 0:
        return float(grid[0])
    lo, hi = float(grid[k - 1]), float(grid[k])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if p1_condition_rhs(mid) >= lhs:
            hi = mid
        else:
            lo = mid
    return hi


def pfts_check(phi_series, t_go_series, p_max, theta=0.9, t_f=100.0, p1_search_range=(1.0, 50.0),
               *, k1=0.8, k2=0.2, a_p_max=3.7114, n_grid=2000):
    """Per-sample check of the fixed-time stability conditions ``M < Phi <= L``.

    For every t_go sample the smallest p1 satisfying
    ``k1 p_max + 12 k2 a_p_max / t_go^2 <= 2^(p1/2)(p1-1)/(1+p1)`` is searched;
    L, M and the settling-time bound are reported at that p1.
    """
    if not 0 < theta <= 1:
        raise ConfigurationError("theta must lie in (0, 1]", "pfts.theta")
    if p_max < 0:
        raise ConfigurationError("p_max must be >= 0", "pfts.p_max")
    t_go = np.atleast_1d(np.asarray(t_go_series, float))
    phi = np.asarray(phi_series, float).reshape(len(t_go), -1)
    grid = p1_grid(p1_search_range, n_grid)
    rhs = p1_condition_rhs(grid)
    lhs = k1 * p_max + 12.0 * k2 * a_p_max / t_go**2
    p1 = np.array([_search_p1(x, grid, rhs) for x in lhs])
    with np.errstate(invalid="ignore", divide="ignore"):
        L = upper_bound_L(p1, t_go)
        M = lower_bound_M(p1, t_go, theta, t_f)
        T = settling_bound(p1[:, None], phi, theta, t_go[:, None])
    feasible = (M[:, None] < phi) & (phi <= L[:, None])
    return PftsReport(t_go, phi, p1, L, M, T, feasible)


def divert_slope_scan(cfg, axis=0, span=10.0, n=20001):
    """Numeric check that the divert term decreases with distance beyond the critical distance.

    Returns ``(holds, d_grid, slope)`` where ``holds`` is True if the slope of
    ``p(d)`` is negative on the whole of ``(d*, span * d*]``.
    """
    l1, l2, _ = (g[axis] for g in cfg.gains)
    d_star = float(critical_distance(l1, l2))
    d = np.linspace(d_star, span * d_star, n)[1:]
    pd = np.zeros((len(d), 3))
    pd[:, axis] = d
    slope = np.gradient(divert_rate(pd, cfg)[:, axis], d)
    return bool(np.all(slope < 0)), d, slope
