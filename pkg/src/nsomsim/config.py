"""Sectioned key-value run configuration (INI syntax)."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields
from typing import Tuple

from .errors import NsomError, ParseError, ValidationError
from .halfspace import HalfSpace, Vacuum
from .scanner import Grid, Sample, TipModel
from .sources import RingAperture


@dataclass(frozen=True)
class TipConfig:
    kind: str = "point"
    orientation: str = "z"
    radius: float = 40.0
    sigma0: float = 1.0
    include_magnetic: bool = True
    n_segments: int = 360
    height: float = 10.0
    wavelength: float = 600.0


@dataclass(frozen=True)
class EnvironmentConfig:
    kind: str = "halfspace"
    epsilon: float = 2.25
    side: str = "below"


@dataclass(frozen=True)
class SampleConfig:
    emitters: Tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class ScanConfig:
    x_min: float = -200.0
    x_max: float = 200.0
    step: float = 1.0
    heights: Tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 50.0, 100.0)
    threads: int = 0


@dataclass(frozen=True)
class GridConfig:
    x_min: float = -121.0
    x_max: float = 121.0
    z_min: float = -81.0
    z_max: float = 119.0
    nx: int = 122
    nz: int = 101
    seeds: str = "auto"
    arc_step: float = 0.5
    max_steps: int = 10000


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    normalize: bool = False
    log_decades: float = 6.0


@dataclass(frozen=True)
class QuantumConfig:
    gamma: float = 0.1
    pumping: float = 0.01
    sigma_ee0: float = 1.0
    t_max: float = 100.0
    n_times: int = 201
    saturation_max: float = 100.0
    n_saturation: int = 201


@dataclass(frozen=True)
class RunConfig:
    tip: TipConfig = field(default_factory=TipConfig)
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    quantum: QuantumConfig = field(default_factory=QuantumConfig)

    # model builders; parse_config already ran them once

    def tip_model(self, height=None) -> TipModel:
        t = self.tip
        h = t.height if height is None else height
        if t.kind == "point":
            return TipModel.point(_orientation(t.orientation), h, t.wavelength)
        ring = RingAperture(t.radius, t.sigma0, t.include_magnetic, t.n_segments)
        return TipModel.aperture(ring, h, t.wavelength)

    def env_model(self):
        e = self.environment
        return Vacuum() if e.kind == "vacuum" else HalfSpace(e.epsilon)

    def sample_model(self) -> Sample:
        return Sample.from_x(self.sample.emitters)

    def grid_model(self) -> Grid:
        g = self.grid
        return Grid((g.x_min, g.x_max), (g.z_min, g.z_max), g.nx, g.nz)

    def seed_points(self):
        """Field-line seeds in the y = 0 plane."""
        import numpy as np

        g = self.grid
        if g.seeds.strip() != "auto":
            pts = []
            for item in g.seeds.split(","):
                x, z = item.split()
                pts.append((float(x), 0.0, float(z)))
            return np.array(pts)
        ang = 2 * np.pi * (np.arange(12) + 0.5) / 12
        ring = np.stack([np.cos(ang), np.zeros_like(ang), np.sin(ang)], axis=-1)
        h = self.tip.height
        if self.tip.kind == "point":
            return np.array([0.0, 0.0, h]) + 3.0 * ring
        out = [np.array([s * self.tip.radius, 0.0, h]) + 3.0 * ring for s in (-1, 1)]
        return np.concatenate(out)


SECTIONS = {f.name: f.default_factory for f in fields(RunConfig)}


def _orientation(text):
    text = text.strip().lower()
    if text in ("x", "y", "z"):
        return text
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError("orientation must be x, y, z or three comma-separated numbers")
    return tuple(parts)


def _convert(ftype, raw: str):
    ftype = str(ftype)
    if "bool" in ftype:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if "Tuple" in ftype:
        return tuple(float(p) for p in raw.split(",") if p.strip())
    if "int" in ftype:
        return int(raw)
    if "float" in ftype:
        return float(raw)
    return raw.strip()


def _line_of(text, section, key=None):
    cur = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return no
            continue
        if key is not None and cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return no
    return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; omitted keys take their defaults."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any section", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(str(exc).split(":")[0], exc.lineno) from None
    sections = {}
    for name in cp.sections():
        if name not in SECTIONS:
            raise ParseError(f"unknown section [{name}]", _line_of(text, name))
        cls = type(SECTIONS[name]())
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ParseError(f"unknown key {name}.{key}", _line_of(text, name, key))
            try:
                values[key] = _convert(known[key], raw)
            except ValueError as exc:
                raise ParseError(f"bad value for {name}.{key}: {exc}",
                                 _line_of(text, name, key)) from None
        sections[name] = cls(**values)
    cfg = RunConfig(**sections)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    """Re-check every physical invariant by building the models."""
    t, e, s, g = cfg.tip, cfg.environment, cfg.scan, cfg.grid
    if t.kind not in ("point", "aperture"):
        raise ValidationError(f"tip kind must be point or aperture, not {t.kind!r}")
    if e.kind not in ("vacuum", "halfspace"):
        raise ValidationError(f"environment kind must be vacuum or halfspace, not {e.kind!r}")
    if e.side not in ("below", "above"):
        raise ValidationError("environment side must be below or above")
    if not s.step > 0:
        raise ValidationError("scan step must be positive")
    if s.x_max < s.x_min:
        raise ValidationError("scan range must be ascending")
    if list(s.heights) != sorted(s.heights) or any(h <= 0 for h in s.heights):
        raise ValidationError("sweep heights must be positive and ascending")
    if s.threads < 0:
        raise ValidationError("threads must be >= 0")
    if g.nx < 2 or g.nz < 2:
        raise ValidationError("grid needs at least 2 nodes per axis")
    if not g.arc_step > 0 or g.max_steps < 1:
        raise ValidationError("field-line arc_step and max_steps must be positive")
    if not cfg.output.log_decades > 0:
        raise ValidationError("log_decades must be positive")
    q = cfg.quantum
    if not q.gamma > 0 or q.pumping < 0 or not 0 <= q.sigma_ee0 <= 1:
        raise ValidationError("quantum needs gamma > 0, pumping >= 0, sigma_ee0 in [0, 1]")
    if q.n_times < 2 or q.n_saturation < 2 or not q.t_max > 0 or not q.saturation_max > 0:
        raise ValidationError("quantum time and saturation grids must be non-degenerate")
    try:
        cfg.tip_model()
        cfg.env_model()
        cfg.sample_model()
        cfg.grid_model()
        cfg.seed_points()
    except (NsomError, ValueError) as exc:
        raise ValidationError(str(exc)) from None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def render_config(cfg: RunConfig, skip=()) -> str:
    """Inverse of :func:`parse_config`; ``skip`` holds ``section.key`` names to omit."""
    out = []
    for sec in fields(RunConfig):
        out.append(f"[{sec.name}]")
        obj = getattr(cfg, sec.name)
        for f in fields(obj):
            if f"{sec.name}.{f.name}" in skip:
                continue
            out.append(f"{f.name} = {_fmt(getattr(obj, f.name))}")
        out.append("")
    return "\n".join(out)
