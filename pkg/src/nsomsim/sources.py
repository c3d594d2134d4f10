"""
Ring-like model of an aperture tip.

Charges and currents live on the rim of radius ``a`` in the tip plane. The
electric distribution (cos-like charge, sin-like azimuthal current) is
x-polarised; the optional fictitious magnetic distribution adds a
y-oriented magnetic dipole ``M = 2 e_z x P``. With ``c = 1`` the angular
frequency equals ``k``, so every segment dipole ``i J a dphi / omega`` is
independent of the wavelength.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .em_core import EPS_R, FieldPair, dipole_sum, vec3, wavenumber
from .errors import InvalidGeometry, NonConverged, SingularPoint

DEFAULT_WAVELENGTH = 600.0
#: Largest quadrature size the adaptive evaluator will try.
MAX_SEGMENTS = 46080


@dataclass(frozen=True)
class RingAperture:
    radius: float = 40.0
    sigma0: float = 1.0
    include_magnetic: bool = True
    n_segments: int = 360
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidGeometry("ring radius must be positive")
        if self.n_segments < 16 or self.n_segments % 2:
            raise InvalidGeometry("n_segments must be even and at least 16")
        object.__setattr__(self, "position", vec3(self.position, float))

    def moved(self, position) -> "RingAperture":
        return RingAperture(self.radius, self.sigma0, self.include_magnetic,
                            self.n_segments, position)


def ring_line_densities(ring: RingAperture, phi, k=None):
    """Line densities ``(eta, J_phi, gamma, K_phi)`` on the rim at angle ``phi``.

    ``k`` plays the role of omega (``c = 1``); defaults to the 600 nm value.
    """
    w = wavenumber(DEFAULT_WAVELENGTH) if k is None else k
    a, s0 = ring.radius, ring.sigma0
    c, s = np.cos(phi), np.sin(phi)
    eta = s0 * c
    J = 1j * w * a * s0 * s
    gamma = 2.0 * s0 * s
    K = -2j * w * a * s0 * c
    return eta, J, gamma, K


def quadrature_nodes(ring: RingAperture, n=None):
    """Periodic trapezoid nodes: angles, rim points, and the weight ``2 pi / n``."""
    n = ring.n_segments if n is None else n
    phi = 2.0 * np.pi * np.arange(n) / n
    pts = ring.position + ring.radius * np.stack(
        [np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)
    return phi, pts, 2.0 * np.pi / n


def _azimuthal(phi):
    return np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)


def segment_dipoles(ring: RingAperture, n=None):
    """Elementary dipoles carried by each quadrature segment.

    Returns ``(points, p, m)`` where ``p = i J a dphi / omega`` and
    ``m = i K a dphi / omega``; ``m`` is all zeros when the magnetic
    distribution is disabled.
    """
    phi, pts, w = quadrature_nodes(ring, n)
    a2s = ring.radius**2 * ring.sigma0
    tang = _azimuthal(phi)
    p = (-a2s * np.sin(phi) * w)[:, None] * tang + 0j
    if ring.include_magnetic:
        m = (2.0 * a2s * np.cos(phi) * w)[:, None] * tang + 0j
    else:
        m = np.zeros_like(p)
    return pts, p, m


def equivalent_electric_dipole(ring: RingAperture) -> np.ndarray:
    """Closed-form far-field dipole ``sigma0 a^2 pi e_x``."""
    return np.array([ring.sigma0 * ring.radius**2 * np.pi, 0.0, 0.0], dtype=complex)


def electric_dipole_quadrature(ring: RingAperture, n=None):
    """Both quadrature routes to ``P``: ``(integral r eta, i integral J / omega)``."""
    phi, pts, w = quadrature_nodes(ring, n)
    eta = ring.sigma0 * np.cos(phi)
    from_charge = np.sum((pts - ring.position) * (eta * ring.radius * w)[:, None], axis=0)
    _, p, _ = segment_dipoles(ring, n)
    return from_charge + 0j, np.sum(p, axis=0)


def magnetic_moment_of_current(ring: RingAperture, k=None, n=None) -> np.ndarray:
    """``(1/2c) integral r x J`` of the electric current (vanishes)."""
    phi, pts, w = quadrature_nodes(ring, n)
    _, J, _, _ = ring_line_densities(ring, phi, k)
    Jvec = J[:, None] * _azimuthal(phi) * (ring.radius * w)
    return 0.5 * np.sum(np.cross(pts - ring.position, Jvec), axis=0)


def equivalent_magnetic_dipole(ring: RingAperture, k=None) -> np.ndarray:
    """Net magnetic dipole of the rim sources, by quadrature.

    The electric current alone contributes nothing; the magnetic charge
    distribution adds ``2 e_z x P``.
    """
    M = magnetic_moment_of_current(ring, k)
    if ring.include_magnetic:
        phi, pts, w = quadrature_nodes(ring)
        gamma = 2.0 * ring.sigma0 * np.sin(phi)
        M = M + np.sum((pts - ring.position) * (gamma * ring.radius * w)[:, None], axis=0)
    return M


def rim_distance(ring: RingAperture, r) -> np.ndarray:
    """Distance from ``r`` (..., 3) to the rim circle."""
    d = np.asarray(r, dtype=float) - ring.position
    rho = np.hypot(d[..., 0], d[..., 1])
    return np.hypot(rho - ring.radius, d[..., 2])


def _segment_sum(points, p, m, k, r):
    """Sum of the segment dipole fields at observation points ``r`` (N, 3)."""
    return dipole_sum(points, p, r, k, m if np.any(m) else None)


def converged_sum(evaluate, n, idx, rel_tol, adaptive, what="ring"):
    """Periodic trapezoid with a doubling check.

    ``evaluate(n, idx)`` returns the ``n``-node quadrature at the observation
    points selected by the index array ``idx``. The ``n``-node result is kept
    where doubling changes E by at most ``rel_tol``; with ``adaptive`` the
    other points are refined until they pass or :data:`MAX_SEGMENTS` is
    exceeded.
    """
    E, B = evaluate(n, idx)
    todo = np.arange(len(idx))
    while True:
        E2, B2 = evaluate(2 * n, idx[todo])
        scale = np.linalg.norm(E2, axis=-1)
        diff = np.linalg.norm(E2 - E[todo], axis=-1)
        bad = diff > rel_tol * np.maximum(scale, np.finfo(float).tiny)
        if not np.any(bad):
            return E, B
        if not adaptive or 2 * n > MAX_SEGMENTS:
            worst = float(np.max(diff[bad] / np.maximum(scale[bad], np.finfo(float).tiny)))
            raise NonConverged(
                f"{what} quadrature with {n} nodes changed by {worst:.3g} on doubling")
        todo = todo[bad]
        E[todo], B[todo] = E2[bad], B2[bad]
        n *= 2


def ring_fields_many(ring: RingAperture, k, r, rel_tol=1e-8, adaptive=False,
                     check=True) -> FieldPair:
    """Vectorised :func:`ring_fields` over points ``r`` of shape (N, 3)."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    if np.any(rim_distance(ring, r) < EPS_R):
        raise SingularPoint("observation point on the ring")

    def evaluate(n, idx):
        return _segment_sum(*segment_dipoles(ring, n), k, r[idx])

    idx = np.arange(len(r))
    if not check:
        return evaluate(ring.n_segments, idx)
    return converged_sum(evaluate, ring.n_segments, idx, rel_tol, adaptive)


def ring_fields(ring: RingAperture, k, r, rel_tol=1e-8, adaptive=False) -> FieldPair:
    """E and B of the rim sources at a single point ``r``.

    Each trapezoid segment is an exact point-dipole kernel, so B needs no
    numerical curl. Raises :class:`NonConverged` if doubling the number of
    segments changes E by more than ``rel_tol``.
    """
    E, B = ring_fields_many(ring, k, np.asarray(r, dtype=float)[None], rel_tol, adaptive)
    return E[0], B[0]
