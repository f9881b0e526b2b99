"""3-DOF point-mass lander: thrust limits, engine lag, thrust noise and RK4 propagation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, PropagationError

MARS_G = (0.0, 0.0, -3.7114)


@dataclass
class LanderState:
    r: np.ndarray   # position, ENU, origin at the landing site [m]
    v: np.ndarray   # [m/s]
    m: float        # [kg]
    t: float = 0.0  # [s]

    def __post_init__(self):
        self.r = np.asarray(self.r, float)
        self.v = np.asarray(self.v, float)
        self.m = float(self.m)


@dataclass(frozen=True)
class Perturbation:
    """``a_p = coeff * a_c * sin(pi * t / time_scale)``; ``kind="none"`` disables it."""
    kind: str = "none"
    coeff: float = 0.3
    time_scale_s: float = 3.0


@dataclass(frozen=True)
class Environment:
    g: tuple = MARS_G                 # [m/s^2]
    g_e: float = 9.807                # [m/s^2]
    T_max: float = 31000.0            # [N]
    I_sp: float = 225.0               # [s]
    actuator_tau: float = 0.0556      # [s]
    thrust_noise_frac: float = 0.05
    perturbation: Perturbation = field(default_factory=Perturbation)
    dry_mass: float = 0.0             # [kg]

    def __post_init__(self):
        if not self.T_max > 0:
            raise ConfigurationError("T_max must be > 0", "environment.T_max_N")
        if not self.I_sp > 0:
            raise ConfigurationError("I_sp must be > 0", "environment.I_sp_s")
        if not self.g_e > 0:
            raise ConfigurationError("g_e must be > 0", "environment.g_e_m_s2")
        if not self.actuator_tau >= 0:
            raise ConfigurationError("actuator_tau must be >= 0", "environment.actuator_tau_s")
        if not 0 <= self.thrust_noise_frac < 1:
            raise ConfigurationError("thrust_noise_frac must lie in [0, 1)",
                                     "environment.thrust_noise_frac")
        if self.perturbation.kind not in ("none", "sinusoidal"):
            raise ConfigurationError("kind must be 'none' or 'sinusoidal'",
                                     "environment.perturbation.kind")
        if not self.dry_mass >= 0:
            raise ConfigurationError("dry_mass must be >= 0", "environment.dry_mass_kg")

    @property
    def g_vec(self):
        return np.asarray(self.g, float)

    @property
    def perturbed(self):
        return self.perturbation.kind != "none"


@dataclass
class ActuatorState:
    """Engine output. ``a_lag`` is the noise-free filter state, ``a_applied`` what the engine delivers."""
    a_lag: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_applied: np.ndarray = field(default_factory=lambda: np.zeros(3))


def thrust_saturate(a_cmd, m, T_max):
    """Scale ``a_cmd`` down to ``T_max / m`` if it asks for more thrust than available."""
    a_cmd = np.asarray(a_cmd, float)
    a_lim = T_max / m
    norm = np.linalg.norm(a_cmd, axis=-1, keepdims=True)
    scale = np.where(norm > a_lim, a_lim / np.where(norm > 0, norm, 1.0), 1.0)
    return a_cmd * scale


def lag_decay(tau, dt):
    return 0.0 if tau == 0 else math.exp(-dt / tau)


def actuator_step(act, a_ideal, tau, dt, noise_frac, rng):
    """One step of the first-order engine lag followed by multiplicative thrust noise."""
    a_ideal = np.asarray(a_ideal, float)
    k = lag_decay(tau, dt)
    a_lag = a_ideal + (act.a_lag - a_ideal) * k
    noise = rng.uniform(1.0 - noise_frac, 1.0 + noise_frac, size=a_lag.shape) if noise_frac else 1.0
    return ActuatorState(a_lag=a_lag, a_applied=a_lag * noise)


def atmospheric_perturbation(t, a_c, env):
    if not env.perturbed:
        return np.zeros_like(np.asarray(a_c, float))
    p = env.perturbation
    return p.coeff * np.asarray(a_c, float) * math.sin(math.pi * t / p.time_scale_s)


def dynamics_step(s, a_applied, a_p, env, dt):
    """Advance the state by ``dt`` with classical RK4, thrust and disturbance held constant."""
    a_applied = np.asarray(a_applied, float)
    acc = a_applied + env.g_vec + np.asarray(a_p, float)
    burn = np.linalg.norm(a_applied) / (env.I_sp * env.g_e)   # mdot = -burn * m

    def f(v, m):
        return v, acc, -burn * m

    r, v, m = s.r, s.v, s.m
    k1r, k1v, k1m = f(v, m)
    k2r, k2v, k2m = f(v + 0.5 * dt * k1v, m + 0.5 * dt * k1m)
    k3r, k3v, k3m = f(v + 0.5 * dt * k2v, m + 0.5 * dt * k2m)
    k4r, k4v, k4m = f(v + dt * k3v, m + dt * k3m)
    r_new = r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    m_new = m + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
    out = LanderState(r_new, v_new, m_new, s.t + dt)
    if m_new <= env.dry_mass:
        raise PropagationError(f"fuel depleted at t = {out.t:.3f} s", reason="fuel")
    return out
