"""Stepped terrain approximations and the polynomial barriers wrapped around them.

A terrain of ``n`` steps is described by heights ``h_1 < ... < h_n`` and lateral
half-widths ``w_1 < ... < w_n`` (``h_0 = w_0 = 0`` implied). Around each step
edge sits a barrier ``rho(r_z) = beta * (r_z - h_{j-1})**(1/lambda) + w_{j-1}``
joining ``(h_{j-1}, w_{j-1})`` to ``(h_j, w_j)``. Above the top step the
barrier opens up linearly with slope ``cot(theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

VERTICAL_RULES = ("lateral", "altitude")


@dataclass(frozen=True)
class StepTerrain:
    heights: tuple            # h_j [m], j = 1..n
    half_widths: tuple        # w_j [m]
    lambdas: tuple            # even exponents, one per step
    theta_deg: float = 0.05   # slope angle of the outer linear barrier [deg]
    symmetric: bool = True

    def __post_init__(self):
        h = np.asarray(self.heights, float)
        w = np.asarray(self.half_widths, float)
        lam = np.asarray(self.lambdas)
        if h.ndim != 1 or h.size == 0 or h.shape != w.shape or lam.shape != h.shape:
            raise ConfigurationError("heights, half_widths and lambdas need one entry per step",
                                     "terrain")
        if np.any(np.diff(np.r_[0.0, h]) <= 0):
            raise ConfigurationError("heights must be positive and strictly increasing",
                                     "terrain.heights_m")
        if np.any(np.diff(np.r_[0.0, w]) <= 0):
            raise ConfigurationError("half-widths must be positive and strictly increasing",
                                     "terrain.half_widths_m")
        for lj in self.lambdas:
            if float(lj) != int(lj) or int(lj) < 2 or int(lj) % 2:
                raise ConfigurationError(f"exponent {lj} is not an even integer >= 2",
                                         "terrain.lambdas")
        if not 0.0 < self.theta_deg < 90.0:
            raise ConfigurationError("slope angle must lie in (0, 90) degrees",
                                     "terrain.theta_deg")

    @property
    def n(self):
        return len(self.heights)


@dataclass(frozen=True)
class BarrierSet:
    """Barrier coefficient tables, one row per lateral axis (x, y).

    Column ``j`` of ``alpha``/``beta``/``gamma`` holds barrier ``j+1``; the last
    column is the linear outer barrier (``lambda = 1``).
    """
    alpha: np.ndarray       # (2, n+1) [m]
    beta: np.ndarray        # (2, n+1)
    gamma: np.ndarray       # (2, n+1) [m]
    lam: np.ndarray         # (2, n+1)
    heights: np.ndarray     # (2, n+1) step table incl. h_0 = 0
    widths: np.ndarray      # (2, n+1) incl. w_0 = 0
    delta: float            # vertical safety margin [m]
    vertical_rule: str = "lateral"

    @property
    def n(self):
        return self.heights.shape[1] - 1


def _axis_tables(terrain):
    h = np.r_[0.0, np.asarray(terrain.heights, float)]
    w = np.r_[0.0, np.asarray(terrain.half_widths, float)]
    lam = np.r_[np.asarray(terrain.lambdas, float), 1.0]
    n = terrain.n
    alpha = w.copy()
    gamma = -h
    beta = np.empty(n + 1)
    beta[:n] = (w[1:] - w[:-1]) / (h[1:] - h[:-1]) ** (1.0 / lam[:n])
    beta[n] = 1.0 / math.tan(math.radians(terrain.theta_deg))
    return alpha, beta, gamma, lam, h, w


def build_barriers(terrain, delta, terrain_y=None, vertical_rule="lateral"):
    """Coefficient tables for every barrier of ``terrain`` (mirrored onto y unless given)."""
    if not delta > 0:
        raise ConfigurationError("delta must be > 0", "terrain.delta_m")
    if vertical_rule not in VERTICAL_RULES:
        raise ConfigurationError(f"unknown rule {vertical_rule!r}, expected one of {VERTICAL_RULES}",
                                 "terrain.vertical_rule")
    tx = _axis_tables(terrain)
    ty = _axis_tables(terrain_y) if terrain_y is not None else tx
    if len(tx[0]) != len(ty[0]):
        raise ConfigurationError("x and y terrain profiles need the same number of steps", "terrain")
    same = all(np.array_equal(a, b) for a, b in zip(tx, ty))
    if vertical_rule == "altitude" and not same:
        raise ConfigurationError("the altitude-first vertical rule needs identical x/y profiles",
                                 "terrain.vertical_rule")
    alpha, beta, gamma, lam, h, w = (np.vstack([a, b]) for a, b in zip(tx, ty))
    return BarrierSet(alpha, beta, gamma, lam, h, w, float(delta), vertical_rule)


def horizontal_barrier(b, axis, side, r_z):
    """Lateral barrier position on ``side`` (+1/-1) of ``axis`` (0 = x, 1 = y) at altitude ``r_z``."""
    r_z = np.asarray(r_z, float)
    if np.any(r_z < 0):
        raise DomainError("horizontal barrier is undefined below r_z = 0")
    h = b.heights[axis]
    # segment index j-1 such that h_{j-1} <= r_z <= h_j; n means the linear branch
    j = np.minimum(np.searchsorted(h[1:], r_z, side="left"), b.n)
    rho = b.beta[axis, j] * (r_z + b.gamma[axis, j]) ** (1.0 / b.lam[axis, j]) + b.alpha[axis, j]
    return np.sign(side) * rho


def ground_height(b, position):
    """Height of the true stepped terrain below each lateral position."""
    pos = np.asarray(position, float)
    g = np.zeros(pos.shape[:-1])
    for axis in (0, 1):
        k = np.searchsorted(b.widths[axis, 1:], np.abs(pos[..., axis]), side="left")
        g = np.maximum(g, b.heights[axis, k])
    return g


def vertical_barrier(b, position):
    """Altitude of the vertical barrier that applies at ``position``.

    Rule ``"lateral"`` picks the step whose lateral band contains the lander
    (outermost step beyond the last band), so the barrier always sits ``delta``
    above the ground directly underneath. Rule ``"altitude"`` is the literal
    case table: above the top step it always returns ``h_n + delta``; below it
    both altitude and lateral band must match, with ``delta`` as fallback.
    """
    pos = np.asarray(position, float)
    if b.vertical_rule == "lateral":
        return ground_height(b, pos) + b.delta
    h, w = b.heights[0], b.widths[0]
    lat = np.max(np.abs(pos[..., :2]), axis=-1)
    rz = pos[..., 2]
    out = np.full(rz.shape, b.delta)
    for j in range(b.n, 0, -1):
        hit = (h[j - 1] <= rz) & (rz <= h[j]) & (w[j - 1] <= lat) & (lat <= w[j])
        out = np.where(hit, h[j - 1] + b.delta, out)
    return np.where(rz >= h[-1], h[-1] + b.delta, out)


def barrier_distance(b, position):
    """Signed distance from the lander to the nearest barrier on each axis."""
    pos = np.asarray(position, float)
    rz = np.maximum(pos[..., 2], 0.0)
    d = np.empty(pos.shape)
    for axis in (0, 1):
        side = np.where(np.signbit(pos[..., axis]), -1.0, 1.0)
        d[..., axis] = pos[..., axis] - horizontal_barrier(b, axis, side, rz)
    d[..., 2] = pos[..., 2] - vertical_barrier(b, pos)
    return d


def critical_distance(l1, l2):
    """Barrier distance at which the divert rate peaks."""
    l1 = np.asarray(l1, float)
    l2 = np.asarray(l2, float)
    if np.any(l1 <= 0) or np.any(l2 <= 0):
        raise ConfigurationError("l1 and l2 must be > 0", "guidance")
    return np.sqrt(np.sqrt(l2**2 - 2 * l1 * l2 + 4 * l1**2) + l2 - l1) / math.sqrt(3.0)
