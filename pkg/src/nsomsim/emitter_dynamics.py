"""
Two-level emitter photophysics for the single-photon tip.

Times are in ns and angular frequencies in rad/ns; positions in nm with the
speed of light :data:`C_NM_PER_NS`. :func:`spontaneous_rate` works in natural
units (hbar = c = 1); :func:`spontaneous_rate_si` converts from SI inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .em_core import _separation, dipole_kernels, vec3
from .errors import InvalidPopulation, NegativeTime
from .halfspace import Vacuum, electric_dipole_fields_env

C_NM_PER_NS = constants.c  # 1 m/s == 1 nm/ns


@dataclass(frozen=True)
class TwoLevelEmitter:
    omega_eg: float
    gamma: float
    lamb_shift: float = 0.0
    mu_ge: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "mu_ge", vec3(self.mu_ge))
        object.__setattr__(self, "position", vec3(self.position, float))
        if not self.gamma > 0:
            raise ValueError("spontaneous rate must be positive")
        if not np.linalg.norm(self.mu_ge) > 0:
            raise ValueError("transition dipole must be non-zero")

    @property
    def omega0(self) -> complex:
        """Complex pole ``omega_eg - Delta - i Gamma / 2``."""
        return self.omega_eg - self.lamb_shift - 0.5j * self.gamma


@dataclass(frozen=True)
class LaserDrive:
    omega_L: float
    rabi: complex = 0.0
    phase0: float = 0.0


def survival_probability(em: TwoLevelEmitter, t) -> float:
    if np.any(np.asarray(t) < 0):
        raise NegativeTime("t must be non-negative")
    return np.exp(-em.gamma * np.asarray(t, dtype=float))


def spontaneous_rate(mu_ge, omega_eg) -> float:
    """``(omega / c)^3 |mu|^2 / (3 pi)`` with hbar = c = 1."""
    if not omega_eg > 0:
        raise ValueError("transition frequency must be positive")
    mu2 = float(np.sum(np.abs(np.asarray(mu_ge)) ** 2))
    return omega_eg**3 * mu2 / (3.0 * np.pi)


def spontaneous_rate_si(mu_cm, omega_rad_s) -> float:
    """Same rate from SI inputs (dipole in C m, omega in rad/s), in 1/ns."""
    mu2 = float(np.sum(np.abs(np.asarray(mu_cm)) ** 2))
    rate = omega_rad_s**3 * mu2 / (3.0 * np.pi * constants.epsilon_0 * constants.hbar
                                   * constants.c**3)
    return rate * 1e-9


def transient_field(em: TwoLevelEmitter, r, t, c: float = C_NM_PER_NS) -> np.ndarray:
    """Retarded field of the decaying transition dipole, zero ahead of the light front."""
    R, Rn = _separation(r, em.position)
    t_ret = t - Rn[..., 0] / c
    k0 = em.omega0 / c
    E, _ = dipole_kernels(em.mu_ge, R, k0)
    env = np.where(t_ret >= 0, np.exp(-1j * em.omega0 * t), 0.0)
    return E * np.asarray(env)[..., None]


def pumping_rate(drive: LaserDrive, em: TwoLevelEmitter) -> float:
    half = 0.5 * em.gamma
    detuning = drive.omega_L - em.omega_eg + em.lamb_shift
    return 0.5 * abs(drive.rabi) ** 2 * half / (half**2 + detuning**2)


def evolve_populations(sigma_ee0, gamma, gamma_p, t):
    """Closed-form ``(sigma_ee, sigma_gg)`` of the pumped rate equations."""
    if not 0.0 <= sigma_ee0 <= 1.0:
        raise InvalidPopulation("initial excited population must lie in [0, 1]")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeTime("t must be non-negative")
    rate = 2.0 * gamma_p + gamma
    ss = gamma_p / rate
    ee = ss + (sigma_ee0 - ss) * np.exp(-rate * t)
    return ee, 1.0 - ee


def stationary_population(gamma, gamma_p):
    """Steady state ``(sigma_ee, |sigma_eg|^2)``; equal in the weak-field limit."""
    if not gamma > 0 or gamma_p < 0:
        raise ValueError("need gamma > 0 and gamma_p >= 0")
    if np.isinf(gamma_p):
        return 0.5, 0.5
    ee = gamma_p / (2.0 * gamma_p + gamma)
    return ee, ee


def _classical_dipole(em, drive):
    _, coh2 = stationary_population(em.gamma, pumping_rate(drive, em))
    return em.mu_ge * np.sqrt(coh2)


def equivalent_fields(em: TwoLevelEmitter, drive: LaserDrive, r, env=None, side="below",
                      c: float = C_NM_PER_NS):
    """E and B of the classical dipole ``mu_ge sigma_eg`` driven at ``omega_L``."""
    k = drive.omega_L / c
    P = _classical_dipole(em, drive)
    r = np.asarray(r, dtype=float)
    E, B = electric_dipole_fields_env(P, em.position, k, r, env or Vacuum(), side)
    if r.ndim == 1:
        return E[0], B[0]
    return E, B


def emission_intensity(em, drive, r, env=None, **kw) -> float:
    """Photodetection signal of an electric-dipole detector, ``|E|^2``."""
    E, _ = equivalent_fields(em, drive, r, env, **kw)
    return np.sum(np.abs(E) ** 2, axis=-1)


def magnetic_intensity(em, drive, r, env=None, **kw) -> float:
    """Signal of a detector sensitive to the magnetic field, ``|B|^2``."""
    _, B = equivalent_fields(em, drive, r, env, **kw)
    return np.sum(np.abs(B) ** 2, axis=-1)


def mixed_detector(a, b, i, j, em, drive, r, env=None, **kw) -> float:
    """``|a E_i + b B_j|^2`` for Cartesian axis indices ``i, j`` in 0..2."""
    for ax in (i, j):
        if ax not in (0, 1, 2):
            raise ValueError(f"invalid axis index {ax!r}")
    E, B = equivalent_fields(em, drive, r, env, **kw)
    return np.abs(a * E[..., i] + b * B[..., j]) ** 2
