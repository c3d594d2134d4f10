"""Analytic near-field optics models of point-like and aperture NSOM tips."""

from .em_core import PointDipole, Wavenumber, electric_dipole_fields, magnetic_dipole_fields
from .errors import NonConverged, SingularPoint
from .halfspace import HalfSpace, Vacuum
from .scanner import Grid, Sample, ScanResult, TipModel, scan_line
from .sources import RingAperture

__version__ = "0.1.0"

__all__ = [
    "Grid", "HalfSpace", "NonConverged", "PointDipole", "RingAperture", "Sample",
    "ScanResult", "SingularPoint", "TipModel", "Vacuum", "Wavenumber",
    "electric_dipole_fields", "magnetic_dipole_fields", "scan_line",
]
