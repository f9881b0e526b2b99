"""ZEM/ZEV feedback guidance with a barrier-driven divert term and a sliding-mode robustifier.

Three laws share the building blocks below:

* ``OGL``        optimal ZEM/ZEV feedback, ``6/tgo^2 ZEM - 2/tgo ZEV``
* ``OTALG``      OGL plus the divert term ``p tgo^2 / 12``
* ``MSS_OTALG``  OTALG with a switching term ``-Phi sat(s2/eps)`` that keeps the
                 second sliding surface at zero under bounded disturbances
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

LAWS = ("OGL", "OTALG", "MSS_OTALG")


def law_tag(name):
    """Normalise user spellings such as ``mss-otalg`` to a law tag."""
    tag = str(name).upper().replace("-", "_")
    if tag not in LAWS:
        raise ConfigurationError(f"unknown law {name!r}; expected ogl, otalg or mss-otalg", "law")
    return tag


def _vec3(x):
    return np.broadcast_to(np.asarray(x, float), (3,)).copy()


@dataclass(frozen=True)
class GuidanceConfig:
    l1: object = 1.0          # per-axis, scalar broadcasts
    l2: object = 9500.0
    l3: object = 500.0
    Lambda: float = 2.0
    k1: float = 0.8
    k2: float = 0.2
    a_p_max: float = 3.7114   # [m/s^2]
    eps_boundary: float = 0.1
    r_f: tuple = (0.0, 0.0, 0.0)
    v_f: tuple = (0.0, 0.0, 0.0)
    t_f: float = 100.0        # [s]

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            if np.any(_vec3(getattr(self, name)) <= 0):
                raise ConfigurationError(f"{name} > 0 required", f"guidance.{name}")
        if not self.Lambda > 0:
            raise ConfigurationError("Lambda > 0 required", "guidance.Lambda")
        if self.Lambda not in (2, 3):
            warnings.warn(f"Lambda = {self.Lambda}: the s2 cancellation argument needs 2 or 3",
                          stacklevel=3)
        for name in ("k1", "k2"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1]", f"guidance.{name}")
        if not self.a_p_max >= 0:
            raise ConfigurationError("a_p_max >= 0 required", "guidance.a_p_max_m_s2")
        if not self.eps_boundary > 0:
            raise ConfigurationError("eps_boundary > 0 required", "guidance.eps_boundary")
        if not self.t_f > 0:
            raise ConfigurationError("t_f > 0 required", "guidance.t_f_s")

    @property
    def gains(self):
        """(l1, l2, l3) as per-axis 3-vectors."""
        return _vec3(self.l1), _vec3(self.l2), _vec3(self.l3)


@dataclass
class GuidanceOutput:
    a_cmd: np.ndarray
    zem: np.ndarray
    zev: np.ndarray
    p: np.ndarray
    divert_term: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    phi: np.ndarray
    law: str


def sat(x, eps):
    """Boundary-layer signum: ``x/eps`` clipped to [-1, 1]."""
    return np.clip(np.asarray(x, float) / eps, -1.0, 1.0)


def zem_zev(s, cfg, g, t_go):
    g = np.asarray(g, float)
    zem = np.asarray(cfg.r_f, float) - (s.r + s.v * t_go + 0.5 * g * t_go**2)
    zev = np.asarray(cfg.v_f, float) - (s.v + g * t_go)
    return zem, zev


def ogl_accel(zem, zev, t_go):
    return 6.0 / t_go**2 * np.asarray(zem) - 2.0 / t_go * np.asarray(zev)


def divert_rate(d, cfg):
    """Barrier repulsion ``p_i = l2 l3 d e^{-psi} / (d^2 + l1)^2`` with ``psi = l2 / (d^2 + l1)``."""
    l1, l2, l3 = cfg.gains
    d = np.asarray(d, float)
    q = d * d + l1
    return l2 * l3 * d * np.exp(-l2 / q) / (q * q)


def divert_term(p, t_go):
    return np.asarray(p) * t_go**2 / 12.0


def otalg_accel(zem, zev, p, t_go):
    return ogl_accel(zem, zev, t_go) + divert_term(p, t_go)


def sliding_surfaces(s, cfg, t_go):
    s1 = s.r - np.asarray(cfg.r_f, float)
    s2 = (s.v - np.asarray(cfg.v_f, float)) + (cfg.Lambda / t_go) * s1
    return s1, s2


def s1_closed_form(s1_0, t_go, t_f, Lambda):
    """Solution of the virtual controller ``ds1/dt = -(Lambda/t_go) s1`` started at t = 0."""
    return np.asarray(s1_0, float) * (np.asarray(t_go, float) / t_f) ** Lambda


def sliding_parameter(p, t_go, cfg):
    return cfg.k1 * np.abs(p) * t_go**2 / 12.0 + cfg.k2 * cfg.a_p_max


def mss_command(a_otalg, phi, s2, eps, g):
    """Switching law around an OTALG command: ``a_otalg - phi sat(s2/eps) - g``."""
    return a_otalg - phi * sat(s2, eps) - np.asarray(g, float)


def mss_otalg_accel(s, d, cfg, g, t_go):
    """MSS-OTALG command.

    The OTALG part is formed from gravity-free ZEM/ZEV, so the explicit ``-g``
    supplies the gravity compensation exactly once. Along ``s2``-dynamics this
    gives ``ds2/dt = -(c/t_go) s2 + (divert + a_p - phi sat)`` for Lambda in {2, 3}.
    """
    zem, zev = zem_zev(s, cfg, np.zeros(3), t_go)
    p = divert_rate(d, cfg)
    s1, s2 = sliding_surfaces(s, cfg, t_go)
    phi = sliding_parameter(p, t_go, cfg)
    a = mss_command(otalg_accel(zem, zev, p, t_go), phi, s2, cfg.eps_boundary, g)
    return GuidanceOutput(a, zem, zev, p, divert_term(p, t_go), s1, s2, phi, "MSS_OTALG")


def guidance_command(law, s, d, cfg, g, t_go):
    """Evaluate any of the three laws and return the full set of intermediates."""
    law = law_tag(law)
    if law == "MSS_OTALG":
        return mss_otalg_accel(s, d, cfg, g, t_go)
    zem, zev = zem_zev(s, cfg, g, t_go)
    s1, s2 = sliding_surfaces(s, cfg, t_go)
    zero = np.zeros(3)
    if law == "OGL":
        return GuidanceOutput(ogl_accel(zem, zev, t_go), zem, zev, zero, zero.copy(),
                              s1, s2, zero.copy(), law)
    p = divert_rate(d, cfg)
    return GuidanceOutput(otalg_accel(zem, zev, p, t_go), zem, zev, p, divert_term(p, t_go),
                          s1, s2, zero, law)
