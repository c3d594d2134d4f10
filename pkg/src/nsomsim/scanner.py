"""
Scan-image synthesis over isotropic fluorescent emitters.

The tip hovers at height ``h`` above the interface ``z = 0`` and is moved
along x; each emitter lying on the interface reports ``|E|^2`` and the
detected signal is the incoherent sum over emitters. Field maps and field
lines live in the ``y = 0`` plane.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .em_core import wavenumber
from .errors import InvalidGeometry, SingularPoint
from .halfspace import HalfSpace, Vacuum, electric_dipole_fields_env, ring_fields_env
from .sources import RingAperture, rim_distance

log = logging.getLogger(__name__)

AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
#: Minimum distance kept between map nodes and the sources.
MAP_EXCLUSION = 0.5
#: Field lines stop when they get this close to a source.
LINE_STOP_DISTANCE = 1.0


def orientation_vector(o) -> np.ndarray:
    if isinstance(o, str):
        try:
            return np.array(AXES[o.lower()])
        except KeyError:
            raise ValueError(f"unknown orientation {o!r}") from None
    v = np.asarray(o, dtype=float)
    if v.shape != (3,):
        raise ValueError("orientation must be a 3-vector")
    return v


@dataclass(frozen=True)
class TipModel:
    """Point-dipole tip or ring-aperture tip at ``height`` above the interface."""

    kind: str = "point"
    height: float = 10.0
    wavelength: float = 600.0
    orientation: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    ring: Optional[RingAperture] = None

    def __post_init__(self):
        if self.kind not in ("point", "aperture"):
            raise ValueError(f"unknown tip kind {self.kind!r}")
        if not self.height > 0:
            raise InvalidGeometry("height must be positive")
        if not self.wavelength > 0:
            raise InvalidGeometry("wavelength must be positive")
        o = tuple(float(c) for c in orientation_vector(self.orientation))
        object.__setattr__(self, "orientation", o)
        if self.kind == "point" and abs(np.linalg.norm(o) - 1.0) > 1e-12:
            raise InvalidGeometry("orientation must be a unit vector")
        if self.kind == "aperture" and self.ring is None:
            object.__setattr__(self, "ring", RingAperture())

    @classmethod
    def point(cls, orientation="z", height=10.0, wavelength=600.0) -> "TipModel":
        return cls("point", height, wavelength, orientation_vector(orientation))

    @classmethod
    def aperture(cls, ring=None, height=10.0, wavelength=600.0) -> "TipModel":
        return cls("aperture", height, wavelength, ring=ring or RingAperture())

    @property
    def k(self) -> float:
        return wavenumber(self.wavelength)

    def at_height(self, h) -> "TipModel":
        return replace(self, height=h)

    def source_position(self, tip_xy=(0.0, 0.0)) -> np.ndarray:
        return np.array([tip_xy[0], tip_xy[1], self.height], dtype=float)

    def source_distance(self, tip_xy, points) -> np.ndarray:
        """Distance from ``points`` (N, 3) to the tip singularity (point or rim)."""
        c = self.source_position(tip_xy)
        if self.kind == "point":
            return np.linalg.norm(np.asarray(points) - c, axis=-1)
        return rim_distance(self.ring.moved(c), points)

    def fields(self, points, env=None, tip_xy=(0.0, 0.0), side="below", adaptive=False,
               check=True):
        """E and B of the tip at ``points`` (N, 3)."""
        env = env or Vacuum()
        c = self.source_position(tip_xy)
        if self.kind == "point":
            return electric_dipole_fields_env(np.array(self.orientation), c, self.k, points,
                                              env, side)
        ring = self.ring.moved(c)
        if not check:
            ring = replace(ring, n_segments=2 * ring.n_segments)
            return _unchecked_ring(ring, self.k, points, env, side)
        return ring_fields_env(ring, self.k, points, env, side, adaptive=adaptive)

    def describe(self) -> dict:
        d = {"kind": self.kind, "height_nm": self.height, "wavelength_nm": self.wavelength}
        if self.kind == "point":
            d["orientation"] = list(self.orientation)
        else:
            d.update(radius_nm=self.ring.radius, sigma0=self.ring.sigma0,
                     include_magnetic=self.ring.include_magnetic,
                     n_segments=self.ring.n_segments)
        return d


def _unchecked_ring(ring, k, points, env, side):
    from .halfspace import _is_above, _ring_env_sum
    from .sources import segment_dipoles

    pts = np.atleast_2d(np.asarray(points, dtype=float))
    env = env if isinstance(env, HalfSpace) else Vacuum()
    return _ring_env_sum(*segment_dipoles(ring), k, pts, env, _is_above(pts[:, 2], side))


@dataclass(frozen=True)
class Sample:
    """Isotropic point emitters on the interface plane."""

    emitters: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        e = np.asarray(self.emitters, dtype=float).reshape(-1, 3)
        if np.any(e[:, 2] != 0):
            raise InvalidGeometry("emitters must lie on the interface z = 0")
        object.__setattr__(self, "emitters", e)

    @classmethod
    def from_x(cls, xs: Sequence[float]) -> "Sample":
        xs = np.asarray(xs, dtype=float)
        return cls(np.stack([xs, np.zeros_like(xs), np.zeros_like(xs)], axis=-1))

    def shifted(self, dx=0.0, dy=0.0) -> "Sample":
        return Sample(self.emitters + np.array([dx, dy, 0.0]))


@dataclass
class ScanResult:
    positions: np.ndarray
    signal: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.positions.shape != self.signal.shape:
            raise ValueError("positions and signal must have equal length")

    def normalized(self) -> "ScanResult":
        peak = self.signal.max() if self.signal.size else 0.0
        sig = self.signal / peak if peak > 0 else self.signal.copy()
        return ScanResult(self.positions, sig, dict(self.metadata, normalized=True))


def detected_signal(tip: TipModel, sample: Sample, env=None, tip_xy=(0.0, 0.0),
                    side="below") -> float:
    """Sum of ``|E|^2`` over the emitters for one tip position."""
    if len(sample.emitters) == 0:
        return 0.0
    E, _ = tip.fields(sample.emitters, env, tip_xy, side)
    return float(np.sum(np.abs(E) ** 2))


def resolve_threads(threads) -> int:
    """``0`` or ``None`` means one thread per core."""
    threads = int(threads or 0)
    return threads if threads > 0 else (os.cpu_count() or 1)


def scan_positions(x_range, step) -> np.ndarray:
    x0, x1 = map(float, x_range)
    if not step > 0:
        raise ValueError("step must be positive")
    if x1 < x0:
        raise ValueError("x_range must be ascending")
    n = int(np.floor((x1 - x0) / step + 1e-9)) + 1
    return x0 + step * np.arange(n)


def scan_line(tip: TipModel, sample: Sample, env=None, x_range=(-200.0, 200.0), step=1.0,
              threads=1, side="below") -> ScanResult:
    """Constant-height line scan along x at y = 0.

    Each position is evaluated independently, so the output does not depend
    on the number of worker threads.
    """
    xs = scan_positions(x_range, step)

    def one(x):
        return detected_signal(tip, sample, env, (x, 0.0), side)

    n_threads = resolve_threads(threads)
    if n_threads == 1:
        sig = [one(x) for x in xs]
    else:
        with ThreadPoolExecutor(n_threads) as pool:
            sig = list(pool.map(one, xs))
    env_desc = ({"kind": "halfspace", "epsilon": env.epsilon} if isinstance(env, HalfSpace)
                else {"kind": "vacuum"})
    meta = {"tip": tip.describe(), "h": tip.height, "wavelength": tip.wavelength,
            "environment": env_desc, "emitters": sample.emitters[:, 0].tolist(), "side": side}
    return ScanResult(xs, np.array(sig), meta)


@dataclass(frozen=True)
class Grid:
    """Map grid in the y = 0 plane; odd-integer default nodes stay off the sources."""

    x_range: Tuple[float, float] = (-121.0, 121.0)
    z_range: Tuple[float, float] = (-81.0, 119.0)
    nx: int = 122
    nz: int = 101

    @property
    def xs(self):
        return np.linspace(*self.x_range, self.nx)

    @property
    def zs(self):
        return np.linspace(*self.z_range, self.nz)

    def points(self) -> np.ndarray:
        X, Z = np.meshgrid(self.xs, self.zs)
        return np.stack([X.ravel(), np.zeros(X.size), Z.ravel()], axis=-1)


def field_map(tip: TipModel, env=None, grid: Grid = Grid(), side="below", threads=1,
              chunk=512) -> np.ndarray:
    """``log10 |E|^2`` on ``grid``, shape ``(nz, nx)`` with row ``i`` at ``zs[i]``.

    Ring quadratures are refined adaptively near the rim.
    """
    pts = grid.points()
    if np.any(tip.source_distance((0.0, 0.0), pts) < MAP_EXCLUSION):
        raise SingularPoint(f"grid passes within {MAP_EXCLUSION} nm of a source")

    def block(s):
        E, _ = tip.fields(pts[s:s + chunk], env, side=side, adaptive=True)
        return np.log10(np.sum(np.abs(E) ** 2, axis=-1))

    starts = range(0, len(pts), chunk)
    n_threads = resolve_threads(threads)
    if n_threads == 1:
        parts = [block(s) for s in starts]
    else:
        with ThreadPoolExecutor(n_threads) as pool:
            parts = list(pool.map(block, starts))
    return np.concatenate(parts).reshape(grid.nz, grid.nx)


@dataclass
class FieldLine:
    points: np.ndarray
    seed_index: int
    termination: Tuple[str, str]  # (backward end, forward end)


def _trace(direction, stop, seeds, sign, arc_step, max_steps):
    """Fixed-step RK4 along ``sign * direction`` for all seeds at once."""
    n = len(seeds)
    paths = [[s.copy()] for s in seeds]
    tags = ["max_steps"] * n
    pos = seeds.copy()
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        p = pos[idx]
        k1, ok1 = direction(p)
        k2, ok2 = direction(p + 0.5 * arc_step * sign * k1)
        k3, ok3 = direction(p + 0.5 * arc_step * sign * k2)
        k4, ok4 = direction(p + arc_step * sign * k3)
        new = p + arc_step * sign * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        ok = ok1 & ok2 & ok3 & ok4
        reason = stop(new)
        for j, i in enumerate(idx):
            if not ok[j]:
                tags[i], active[i] = "null", False
                continue
            paths[i].append(new[j])
            pos[i] = new[j]
            if reason[j]:
                tags[i], active[i] = reason[j], False
    return [np.array(p) for p in paths], tags


def field_lines(tip: TipModel, env=None, seeds=(), arc_step=0.5, max_steps=10_000,
                bounds=None, side="below") -> List[FieldLine]:
    """Lines of ``Re E`` (the t = 0 snapshot) through each seed, both directions.

    ``bounds`` is ``((xmin, xmax), (ymin, ymax), (zmin, zmax))``; lines end on
    domain exit, within ``LINE_STOP_DISTANCE`` of a source, at a field null,
    or after ``max_steps`` steps. One line is returned per seed.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float)).reshape(-1, 3)
    if not arc_step > 0:
        raise ValueError("arc_step must be positive")
    if len(seeds) == 0:
        return []
    if bounds is None:
        g = Grid()
        bounds = (g.x_range, (-150.0, 150.0), g.z_range)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def direction(p):
        E, _ = tip.fields(p, env, side=side, check=False)
        v = E.real
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        ok = nrm[:, 0] > 0
        return np.where(ok[:, None], v / np.where(nrm > 0, nrm, 1.0), 0.0), ok

    def stop(p):
        near = tip.source_distance((0.0, 0.0), p) < LINE_STOP_DISTANCE
        out = np.any((p < lo) | (p > hi), axis=-1)
        return np.where(near, "singularity", np.where(out, "exit", ""))

    fwd, ftags = _trace(direction, stop, seeds, 1.0, arc_step, max_steps)
    bwd, btags = _trace(direction, stop, seeds, -1.0, arc_step, max_steps)
    lines = []
    for i in range(len(seeds)):
        pts = np.concatenate([bwd[i][::-1], fwd[i][1:]], axis=0)
        lines.append(FieldLine(pts, len(bwd[i]) - 1, (btags[i], ftags[i])))
    return lines


def detect_peaks(sr: ScanResult) -> List[Tuple[float, float]]:
    """Strict interior local maxima, plateaus at their midpoint, highest first."""
    x, s = sr.positions, sr.signal
    peaks = []
    i, n = 1, len(s)
    while i < n - 1:
        if s[i] > s[i - 1]:
            j = i
            while j + 1 < n and s[j + 1] == s[i]:
                j += 1
            if j + 1 < n and s[j + 1] < s[i]:
                peaks.append((0.5 * (x[i] + x[j]), float(s[i])))
            i = j + 1
        else:
            i += 1
    peaks.sort(key=lambda p: (-p[1], p[0]))
    return peaks


def dominant_peaks(sr: ScanResult, fraction=0.5):
    """Peaks reaching at least ``fraction`` of the highest one."""
    peaks = detect_peaks(sr)
    if not peaks:
        return []
    return [p for p in peaks if p[1] >= fraction * peaks[0][1]]


@dataclass
class Resolution:
    resolved: bool
    dip_contrast: float
    peaks: Tuple = ()
    valley: Optional[float] = None
    note: str = ""


def sparrow_resolved(sr: ScanResult, emitter_xs) -> Resolution:
    """Sparrow-type test: is there a dip between the peaks flanking the midpoint?

    Uses the highest peak on each side of the emitter midpoint; fewer than
    two usable peaks gives ``resolved=False`` with zero contrast.
    """
    mid = 0.5 * (float(emitter_xs[0]) + float(emitter_xs[1]))
    peaks = detect_peaks(sr)
    left = [p for p in peaks if p[0] < mid]
    right = [p for p in peaks if p[0] > mid]
    if not left or not right:
        return Resolution(False, 0.0, tuple(peaks), None, "UnresolvedPeaks")
    pl, pr = left[0], right[0]
    between = (sr.positions > pl[0]) & (sr.positions < pr[0])
    valley = float(sr.signal[between].min())
    top = min(pl[1], pr[1])
    if not valley < top:
        return Resolution(False, 0.0, (pl, pr), valley)
    return Resolution(True, (top - valley) / (top + valley), (pl, pr), valley)


@dataclass
class SweepRow:
    h: float
    resolved: bool
    dip_contrast: float


@dataclass
class SweepTable:
    rows: List[SweepRow]
    violations: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return not self.violations


def resolution_sweep(tip: TipModel, d, h_list, env=None, x_range=(-200.0, 200.0), step=1.0,
                     threads=1, side="below") -> SweepTable:
    """Two emitters at ``+-d/2``, one scan per height."""
    h_list = [float(h) for h in h_list]
    if any(h <= 0 for h in h_list) or h_list != sorted(h_list):
        raise ValueError("h_list must be positive and ascending")
    xs = (-0.5 * d, 0.5 * d)
    sample = Sample.from_x(xs)
    rows = []
    for h in h_list:
        sr = scan_line(tip.at_height(h), sample, env, x_range, step, threads, side)
        res = sparrow_resolved(sr, xs)
        rows.append(SweepRow(h, res.resolved, res.dip_contrast))
    violations = [(a.h, b.h) for a, b in zip(rows, rows[1:]) if b.dip_contrast > a.dip_contrast]
    if violations and tip.kind == "point":
        log.warning("dip contrast increases with height at %s", violations)
    return SweepTable(rows, violations)
