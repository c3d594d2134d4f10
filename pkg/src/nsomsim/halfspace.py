"""
Image-method fields above a dielectric half-space (substrate at z < 0).

Valid in the near-field zone only. A dipole ``P`` at height ``h`` is
mirrored to ``z = -h`` with moment ``beta (2 (P.z) z - P)`` for the upper
region; the lower region sees ``tau`` times the vacuum field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .em_core import EPS_R, FieldPair, _separation, dipole_kernels, dipole_sum, vec3
from .errors import InvalidGeometry, SingularPoint
from .sources import RingAperture, converged_sum, rim_distance, segment_dipoles

SIDES = ("below", "above")


@dataclass(frozen=True)
class Vacuum:
    kind = "vacuum"


@dataclass(frozen=True)
class HalfSpace:
    epsilon: float = 2.25

    kind = "halfspace"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidGeometry("permittivity must be positive")

    @property
    def beta(self) -> float:
        return (self.epsilon - 1.0) / (self.epsilon + 1.0)

    @property
    def tau(self) -> float:
        return 2.0 / (self.epsilon + 1.0)


def image_moment(P, hs: HalfSpace) -> np.ndarray:
    """``beta (2 (P.z) z - P)``: ``-beta P`` horizontal, ``+beta P_z`` vertical."""
    P = np.asarray(P, dtype=complex)
    out = -hs.beta * P
    out[..., 2] = hs.beta * P[..., 2]
    return out


def image_dipole(P, r0, hs: HalfSpace):
    r0 = vec3(r0, float)
    if not r0[2] > 0:
        raise InvalidGeometry("source height must be positive")
    return image_moment(vec3(P), hs), r0 * np.array([1.0, 1.0, -1.0])


def _check_side(z, above):
    if above and z < 0:
        raise InvalidGeometry("upper branch needs z >= 0")
    if not above and z > 0:
        raise InvalidGeometry("lower branch needs z <= 0")


def field_above(P, r0, k, r, hs: HalfSpace) -> FieldPair:
    """Source plus image dipole, for ``z >= 0``."""
    r = np.asarray(r, dtype=float)
    _check_side(r[2], True)
    P_img, r0_img = image_dipole(P, r0, hs)
    R, _ = _separation(r, r0)
    Ri, _ = _separation(r, r0_img)
    E, B = dipole_kernels(vec3(P), R, k)
    Ei, Bi = dipole_kernels(P_img, Ri, k)
    return E + Ei, B + Bi


def field_below(P, r0, k, r, hs: HalfSpace) -> FieldPair:
    """Transmitted field ``tau G0 P``, for ``z <= 0``."""
    r = np.asarray(r, dtype=float)
    _check_side(r[2], False)
    if not vec3(r0, float)[2] > 0:
        raise InvalidGeometry("source height must be positive")
    R, _ = _separation(r, r0)
    E, B = dipole_kernels(vec3(P), R, k)
    return hs.tau * E, hs.tau * B


def _is_above(z, side):
    """Region selector; ``z == 0`` follows ``side``."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    return np.where(z == 0, side == "above", z > 0)


def electric_dipole_fields_env(P, r0, k, r, env, side="below") -> FieldPair:
    """Vectorised point-dipole fields at ``r`` (N, 3) in any environment."""
    P = vec3(P)
    r0 = vec3(r0, float)
    r = np.atleast_2d(np.asarray(r, dtype=float))
    R = r - r0
    if np.any(np.linalg.norm(R, axis=-1) < EPS_R):
        raise SingularPoint("observation point coincides with the dipole")
    E, B = dipole_kernels(P, R, k)
    if isinstance(env, Vacuum) or env is None:
        return E, B
    if not r0[2] > 0:
        raise InvalidGeometry("source height must be positive")
    up = _is_above(r[:, 2], side)
    img_pos = r0 * np.array([1.0, 1.0, -1.0])
    Ei, Bi = dipole_kernels(image_moment(P, env), r - img_pos, k)
    E = np.where(up[:, None], E + Ei, env.tau * E)
    B = np.where(up[:, None], B + Bi, env.tau * B)
    return E, B


def magnetic_dipole_field_halfspace(M, r0, k, r, hs: HalfSpace, side="below") -> np.ndarray:
    """E of a magnetic dipole above the substrate, ``(i/k) curl(G . M)``.

    Each electric constituent of the half-space Green tensor contributes
    minus its B kernel, with ``M`` run through the same image rule.
    """
    M = vec3(M)
    r0 = vec3(r0, float)
    if not r0[2] > 0:
        raise InvalidGeometry("source height must be positive")
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    r = np.atleast_2d(r)
    R = r - r0
    if np.any(np.linalg.norm(R, axis=-1) < EPS_R):
        raise SingularPoint("observation point coincides with the dipole")
    _, B = dipole_kernels(M, R, k)
    _, Bi = dipole_kernels(image_moment(M, hs), r - r0 * np.array([1.0, 1.0, -1.0]), k)
    up = _is_above(r[:, 2], side)
    E = np.where(up[:, None], -(B + Bi), -hs.tau * B)
    return E[0] if single else E


def _ring_env_sum(points, p, m, k, r, env, up):
    mag = m if np.any(m) else None
    if isinstance(env, Vacuum):
        return dipole_sum(points, p, r, k, mag)
    E, B = np.empty((len(r), 3), complex), np.empty((len(r), 3), complex)
    lo = ~up
    if np.any(up):
        # image dipoles only; fictitious magnetic sources radiate as in vacuum
        Ed, Bd = dipole_sum(points, p, r[up], k, mag)
        img = points * np.array([1.0, 1.0, -1.0])
        Ei, Bi = dipole_sum(img, image_moment(p, env), r[up], k)
        E[up], B[up] = Ed + Ei, Bd + Bi
    if np.any(lo):
        Ed, Bd = dipole_sum(points, p, r[lo], k)
        E[lo], B[lo] = env.tau * Ed, env.tau * Bd
        if mag is not None:
            Em, Bm = dipole_sum(points, np.zeros_like(p), r[lo], k, mag)
            E[lo] += Em
            B[lo] += Bm
    return E, B


def ring_fields_env(ring: RingAperture, k, r, env, side="below", rel_tol=1e-8,
                    adaptive=False) -> FieldPair:
    """Vectorised ring fields at ``r`` (N, 3), each segment dipole imaged."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    if np.any(rim_distance(ring, r) < EPS_R):
        raise SingularPoint("observation point on the ring")
    if isinstance(env, Vacuum) or env is None:
        env = Vacuum()
    elif not ring.position[2] > 0:
        raise InvalidGeometry("ring height must be positive")
    up = _is_above(r[:, 2], side)

    def evaluate(n, idx):
        return _ring_env_sum(*segment_dipoles(ring, n), k, r[idx], env, up[idx])

    return converged_sum(evaluate, ring.n_segments, np.arange(len(r)), rel_tol, adaptive)


def ring_fields_halfspace(ring: RingAperture, k, r, hs: HalfSpace, side="below",
                          rel_tol=1e-8, adaptive=False) -> FieldPair:
    if not ring.position[2] > 0:
        raise InvalidGeometry("ring height must be positive")
    E, B = ring_fields_env(ring, k, np.asarray(r, dtype=float)[None], hs, side,
                           rel_tol, adaptive)
    return E[0], B[0]
