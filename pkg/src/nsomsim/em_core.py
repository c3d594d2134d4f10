"""
Free-space harmonic fields of point dipoles.

All vectors are numpy arrays with a trailing axis of length 3; complex
arrays carry phasors under the ``exp(-i omega t)`` convention. Lengths are in
nm and fields in Heaviside-Lorentz units, so only relative intensities carry
meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from .errors import SingularPoint

#: Distance below which an observation point is treated as sitting on a source.
EPS_R = 1e-9
#: Central-difference step used by :func:`maxwell_residual`.
FD_STEP = 0.01

FieldPair = Tuple[np.ndarray, np.ndarray]


def vec3(v, dtype=complex) -> np.ndarray:
    """Coerce ``v`` to a length-3 array (complex by default)."""
    a = np.asarray(v, dtype=dtype)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def norm2(v) -> float:
    v = np.asarray(v)
    return float(np.sum(np.abs(v) ** 2, axis=-1))


def cross(a, b) -> np.ndarray:
    return np.cross(a, b)


@dataclass(frozen=True)
class Wavenumber:
    """Vacuum wavenumber ``k = 2 pi / wavelength`` in rad/nm."""

    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("wavenumber must be positive")

    @classmethod
    def from_wavelength(cls, wavelength: float) -> "Wavenumber":
        if not wavelength > 0:
            raise ValueError("wavelength must be positive")
        return cls(2.0 * np.pi / wavelength)

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.k

    def __float__(self):
        return float(self.k)


def wavenumber(wavelength: float) -> float:
    return 2.0 * np.pi / wavelength


@dataclass(frozen=True)
class PointDipole:
    """Electric (``P``) or magnetic (``M``) point dipole at ``position``."""

    moment: np.ndarray
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    kind: str = "electric"

    def __post_init__(self):
        object.__setattr__(self, "moment", vec3(self.moment))
        object.__setattr__(self, "position", vec3(self.position, float))
        if self.kind not in ("electric", "magnetic"):
            raise ValueError(f"unknown dipole kind {self.kind!r}")


def _separation(r, r0):
    R = np.asarray(r, dtype=float) - np.asarray(r0, dtype=float)
    Rn = np.linalg.norm(R, axis=-1, keepdims=True)
    if np.any(Rn < EPS_R):
        raise SingularPoint("observation point coincides with a dipole")
    return R, Rn


def scalar_green(k, r, r0):
    """``exp(ikR) / (4 pi R)`` with ``R = |r - r0|``."""
    _, Rn = _separation(r, r0)
    Rn = Rn[..., 0]
    g = np.exp(1j * k * Rn) / (4.0 * np.pi * Rn)
    return g if g.ndim else complex(g)


def _radial_terms(R, k):
    """Unit vector and the three radial coefficients of the dipole propagator."""
    R = np.asarray(R, dtype=float)
    inv = 1.0 / np.sqrt(R[..., 0] ** 2 + R[..., 1] ** 2 + R[..., 2] ** 2)
    n = (R[..., 0] * inv, R[..., 1] * inv, R[..., 2] * inv)
    phase = np.exp(1j * k / inv) * (inv / (4.0 * np.pi))
    ikr = 1j * k * inv
    k2 = k * k
    inv2 = inv * inv
    a = phase * (k2 + ikr - inv2)  # multiplies P
    b = phase * (3.0 * inv2 - 3.0 * ikr - k2)  # multiplies n (n.P)
    c = phase * (k2 + ikr)  # multiplies n x P in B
    return n, a, b, c


def _combine(n, a, b, c, P, M=None, axis=None):
    """E and B of electric ``P`` (and magnetic ``M``) dipoles; optional sum over ``axis``."""
    nx, ny, nz = n
    px, py, pz = P[..., 0], P[..., 1], P[..., 2]
    bnp = b * (nx * px + ny * py + nz * pz)
    E = [a * px + bnp * nx, a * py + bnp * ny, a * pz + bnp * nz]
    B = [c * (ny * pz - nz * py), c * (nz * px - nx * pz), c * (nx * py - ny * px)]
    if M is not None:
        mx, my, mz = M[..., 0], M[..., 1], M[..., 2]
        bnm = b * (nx * mx + ny * my + nz * mz)
        E[0] -= c * (ny * mz - nz * my)
        E[1] -= c * (nz * mx - nx * mz)
        E[2] -= c * (nx * my - ny * mx)
        B[0] += a * mx + bnm * nx
        B[1] += a * my + bnm * ny
        B[2] += a * mz + bnm * nz
    if axis is not None:
        E = [e.sum(axis=axis) for e in E]
        B = [v.sum(axis=axis) for v in B]
    return np.stack(E, axis=-1), np.stack(B, axis=-1)


def dipole_kernels(P, R, k, M=None) -> FieldPair:
    """Exact E and B of electric dipoles ``P`` seen from separations ``R``.

    Broadcasts over leading axes. ``k`` may be complex (decaying sources).
    Magnetic dipoles ``M`` at the same places are added through duality.
    The caller is responsible for the singularity guard.
    """
    P = np.asarray(P, dtype=complex)
    n, a, b, c = _radial_terms(R, k)
    shape = np.broadcast_shapes(P.shape[:-1], a.shape)
    P = np.broadcast_to(P, shape + (3,))
    if M is not None:
        M = np.broadcast_to(np.asarray(M, dtype=complex), shape + (3,))
    n = tuple(np.broadcast_to(v, shape) for v in n)
    a, b, c = (np.broadcast_to(v, shape) for v in (a, b, c))
    return _combine(n, a, b, c, P, M)


def dipole_sum(points, P, r, k, M=None) -> FieldPair:
    """Fields at ``r`` (N, 3) of dipoles ``P`` (and ``M``) at ``points`` (S, 3), summed over S."""
    R = np.asarray(r, dtype=float)[:, None, :] - np.asarray(points, dtype=float)[None, :, :]
    n, a, b, c = _radial_terms(R, k)
    P = np.asarray(P, dtype=complex)[None]
    if M is not None:
        M = np.asarray(M, dtype=complex)[None]
    return _combine(n, a, b, c, P, M, axis=1)


def electric_dipole_fields(dip: PointDipole, k, r) -> FieldPair:
    """E and B radiated by an electric point dipole (full propagator)."""
    R, _ = _separation(r, dip.position)
    return dipole_kernels(dip.moment, R, k)


def electric_dipole_nearfield(dip: PointDipole, r, k) -> FieldPair:
    """Quasi-static ``kR << 1`` limits: E ~ 1/R^3, B ~ ik/R^2."""
    R, Rn = _separation(r, dip.position)
    n = R / Rn
    P = dip.moment
    nP = np.sum(n * P, axis=-1, keepdims=True)
    E = (3.0 * n * nP - P) / (4.0 * np.pi * Rn**3)
    B = 1j * k * np.cross(n, P) / (4.0 * np.pi * Rn**2)
    return E, B


def dual(E, B) -> FieldPair:
    """Electric-magnetic duality map ``(E, B) -> (-B, E)``.

    Applied to the fields of an electric distribution it yields the fields
    of the mirror magnetic distribution (``E -> B``, ``B -> -E``).
    Applying it twice gives ``(-E, -B)``.
    """
    return -np.asarray(B), np.asarray(E)


def magnetic_dipole_fields(dip: PointDipole, k, r) -> FieldPair:
    """Fields of a magnetic point dipole ``M`` by duality."""
    R, _ = _separation(r, dip.position)
    Ee, Be = dipole_kernels(dip.moment, R, k)
    return dual(Ee, Be)


def dipole_fields(dip: PointDipole, k, r) -> FieldPair:
    if dip.kind == "electric":
        return electric_dipole_fields(dip, k, r)
    return magnetic_dipole_fields(dip, k, r)


def numerical_curl(sampler: Callable, point, step: float = FD_STEP) -> np.ndarray:
    """Central-difference curl of a vector field ``sampler(r) -> (3,)``."""
    p = np.asarray(point, dtype=float)
    J = np.empty((3, 3), dtype=complex)  # J[i, j] = dF_i / dx_j
    for j in range(3):
        d = np.zeros(3)
        d[j] = step
        J[:, j] = (np.asarray(sampler(p + d)) - np.asarray(sampler(p - d))) / (2.0 * step)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def numerical_divergence(sampler: Callable, point, step: float = FD_STEP) -> complex:
    p = np.asarray(point, dtype=float)
    div = 0j
    for j in range(3):
        d = np.zeros(3)
        d[j] = step
        div += (sampler(p + d)[j] - sampler(p - d)[j]) / (2.0 * step)
    return complex(div)


def maxwell_residual(field_sampler: Callable, k, point, step: float = FD_STEP):
    """Finite-difference residuals ``curl E - ik B`` and ``div E``.

    ``field_sampler(r)`` must return ``(E, B)``. The point should be at least
    ``10 * step`` from any source; interpreting magnitudes is left to the
    caller.
    """
    p = np.asarray(point, dtype=float)
    _, B = field_sampler(p)
    curl = numerical_curl(lambda q: field_sampler(q)[0], p, step)
    div = numerical_divergence(lambda q: field_sampler(q)[0], p, step)
    return curl - 1j * k * np.asarray(B), div
