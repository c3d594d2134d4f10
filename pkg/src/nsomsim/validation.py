"""
Self-check suite behind ``nsomsim validate``.

Each check returns ``(name, passed, detail)``. The checks are cheap
property evaluations on fixed pseudo-random inputs, not a replacement for
the test suite.
"""

from __future__ import annotations

import numpy as np

from . import emitter_dynamics as dyn
from .em_core import (PointDipole, dipole_kernels, electric_dipole_fields,
                      electric_dipole_nearfield, maxwell_residual, wavenumber)
from .halfspace import HalfSpace, Vacuum, electric_dipole_fields_env, ring_fields_env
from .scanner import Sample, TipModel, detect_peaks, resolution_sweep, scan_line
from .sources import (RingAperture, equivalent_electric_dipole, equivalent_magnetic_dipole,
                      quadrature_nodes, rim_distance, ring_fields, ring_fields_many)

K600 = wavenumber(600.0)
_checks = []


def check(name):
    def deco(fn):
        _checks.append((name, fn))
        return fn
    return deco


def _rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def _directions(n=26, seed=3):
    v = np.random.default_rng(seed).normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@check("dipole fields are linear in the moment")
def _linearity():
    rng = np.random.default_rng(1)
    P1, P2 = rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3) + 0j
    r = np.array([30.0, -20.0, 45.0])
    E1, _ = electric_dipole_fields(PointDipole(P1), K600, r)
    E2, _ = electric_dipole_fields(PointDipole(P2), K600, r)
    E12, _ = electric_dipole_fields(PointDipole(P1 + P2), K600, r)
    err = _rel(E1 + E2, E12)
    return err < 1e-12, f"relative error {err:.2e}"


@check("fields are translation covariant")
def _translation():
    P = np.array([0.3, -1.0, 0.4])
    r, s = np.array([12.0, 7.0, -30.0]), np.array([5.0, -8.0, 2.0])
    a, _ = electric_dipole_fields(PointDipole(P), K600, r)
    b, _ = electric_dipole_fields(PointDipole(P, s), K600, r + s)
    err = _rel(b, a)
    return err < 1e-12, f"relative error {err:.2e}"


@check("near-field limit deviates by at most 2 kR")
def _nearfield():
    worst = 0.0
    for n in _directions():
        for kR in (1e-2, 1e-3, 1e-4):
            dip = PointDipole([1.0, 0.5, -0.2])
            r = n * kR / K600
            Ef, _ = electric_dipole_fields(dip, K600, r)
            En, _ = electric_dipole_nearfield(dip, r, K600)
            worst = max(worst, _rel(Ef, En) / kR)
    return worst <= 2.0, f"max deviation / kR = {worst:.2e}"


@check("electric-dipole B is transverse")
def _transverse():
    dirs = _directions()
    _, B = dipole_kernels(np.array([0.2, 1.0, 0.7]), 100.0 * dirs, K600)
    dots = np.abs(np.sum(dirs * B, axis=1)) / np.linalg.norm(B, axis=1)
    return float(dots.max()) < 1e-12, f"max |n.B|/|B| = {dots.max():.1e}"


@check("Maxwell residuals of both tips")
def _maxwell():
    rng = np.random.default_rng(7)
    dip = PointDipole([0.3, 0.2, 1.0])
    ring = RingAperture()
    worst_c = worst_d = 0.0
    samplers = ((lambda q: electric_dipole_fields(dip, K600, q), lambda r: np.linalg.norm(r)),
                (lambda q: ring_fields(ring, K600, q), lambda r: float(rim_distance(ring, r))))
    for sampler, dist in samplers:
        done = 0
        while done < 10:
            n = rng.normal(size=3)
            r = n / np.linalg.norm(n) * rng.uniform(20.0, 500.0)
            d = dist(r)
            if d < 20.0:
                continue
            E, B = sampler(r)
            c, dv = maxwell_residual(sampler, K600, r)
            worst_c = max(worst_c, np.linalg.norm(c) / (K600 * np.linalg.norm(B)))
            worst_d = max(worst_d, abs(dv) * d / np.linalg.norm(E))
            done += 1
    ok = worst_c < 1e-4 and worst_d < 1e-4
    return ok, f"curl {worst_c:.1e}, div {worst_d:.1e}"


@check("ring matches its equivalent dipoles on the far axis")
def _far_axis():
    ring = RingAperture()
    P, M = equivalent_electric_dipole(ring), equivalent_magnetic_dipole(ring, K600)
    r = np.array([0.0, 0.0, 50 * 600.0])
    E, _ = ring_fields(ring, K600, r)
    Ep, Bp = dipole_kernels(P, r, K600)
    _, Bm = dipole_kernels(M, r, K600)
    err = _rel(E, Ep - Bm)
    return err < 40.0 / r[2] * 10, f"relative deviation {err:.1e}"


@check("ring charge and magnetic charge vanish")
def _neutral():
    ring = RingAperture()
    phi, _, w = quadrature_nodes(ring)
    q = abs(np.sum(np.cos(phi)) * ring.radius * w)
    g = abs(np.sum(2 * np.sin(phi)) * ring.radius * w)
    return max(q, g) < 1e-12, f"|Q| = {q:.1e}, |G| = {g:.1e}"


@check("ring mirror symmetry under y -> -y")
def _mirror():
    ring = RingAperture()
    r = np.array([[13.0, 9.0, 25.0], [13.0, -9.0, 25.0]])
    E, _ = ring_fields_many(ring, K600, r)
    ex = abs(E[0, 0] - E[1, 0]) / abs(E[0, 0])
    ey = abs(E[0, 1] + E[1, 1]) / abs(E[0, 1])
    return max(ex, ey) < 1e-10, f"even/odd mismatch {max(ex, ey):.1e}"


@check("half-space vacuum limit")
def _vacuum_limit():
    P, r0 = np.array([1.0, 0.3, 0.5]), np.array([0.0, 0.0, 20.0])
    pts = np.array([[10.0, 4.0, 33.0], [-7.0, 1.0, -12.0]])
    a, _ = electric_dipole_fields_env(P, r0, K600, pts, HalfSpace(1.0))
    b, _ = electric_dipole_fields_env(P, r0, K600, pts, Vacuum())
    ring = RingAperture(position=[0, 0, 20.0])
    c, _ = ring_fields_env(ring, K600, pts, HalfSpace(1.0))
    d, _ = ring_fields_env(ring, K600, pts, Vacuum())
    err = max(_rel(a, b), _rel(c, d))
    return err < 1e-12, f"relative error {err:.1e}"


@check("tangential E continuous across the interface")
def _continuity():
    hs = HalfSpace(2.25)
    P, r0 = np.array([1.0, 0.4, 0.0]), np.array([0.0, 0.0, 20.0])
    pts = np.array([[15.0, -6.0, 0.0], [-40.0, 22.0, 0.0]])
    up, _ = electric_dipole_fields_env(P, r0, K600, pts, hs, side="above")
    lo, _ = electric_dipole_fields_env(P, r0, K600, pts, hs, side="below")
    err = _rel(up[:, :2], lo[:, :2])
    return err < 1e-10, f"relative mismatch {err:.1e}"


@check("reflection factor monotone in (0, 1)")
def _beta():
    eps = np.linspace(1.001, 100.0, 500)
    b = np.array([HalfSpace(e).beta for e in eps])
    ok = bool(np.all(np.diff(b) > 0) and b.min() > 0 and b.max() < 1)
    return ok, f"beta in [{b.min():.3f}, {b.max():.3f}]"


@check("populations stay in [0, 1] and relax monotonically")
def _populations():
    t = np.linspace(0.0, 100.0, 401)
    ok = True
    for s0 in (0.0, 0.2, 1.0):
        for gp in (0.0, 0.05, 1.0):
            ee, gg = dyn.evolve_populations(s0, 0.1, gp, t)
            ss = gp / (2 * gp + 0.1)
            dist = np.abs(ee - ss)
            ok &= bool(np.all((ee >= 0) & (ee <= 1)) and np.all(np.diff(dist) <= 1e-15))
            ok &= bool(np.max(np.abs(ee + gg - 1)) < 1e-14)
    return ok, "9 parameter combinations"


@check("quantum detector equals classical dipole intensity")
def _classical():
    k = K600
    em = dyn.TwoLevelEmitter(omega_eg=k * dyn.C_NM_PER_NS, gamma=0.1,
                             mu_ge=[0.0, 0.6, 0.8], position=[0, 0, 10.0])
    drive = dyn.LaserDrive(omega_L=k * dyn.C_NM_PER_NS, rabi=0.02)
    r = np.array([[17.0, -5.0, 0.0], [3.0, 9.0, 40.0]])
    Ie = dyn.emission_intensity(em, drive, r, HalfSpace(2.25))
    coh = dyn.stationary_population(em.gamma, dyn.pumping_rate(drive, em))[1]
    E, _ = electric_dipole_fields_env(em.mu_ge * np.sqrt(coh), em.position, k, r, HalfSpace(2.25))
    err = float(np.max(np.abs(Ie - np.sum(np.abs(E) ** 2, axis=1)) / Ie))
    return err < 1e-12, f"relative error {err:.1e}"


@check("transient field is causal")
def _causal():
    em = dyn.TwoLevelEmitter(omega_eg=3e6, gamma=0.1)
    r = np.array([0.0, 3e8, 0.0])  # 1 ns of flight
    before = dyn.transient_field(em, r, 0.999)
    after = dyn.transient_field(em, r, 1.001)
    ok = bool(np.all(before == 0) and np.linalg.norm(after) > 0)
    return ok, "zero ahead of the light front"


@check("scan translation invariance and parity")
def _scan_symmetry():
    env = HalfSpace(2.25)
    tip = TipModel.point("z", 20.0)
    a = scan_line(tip, Sample.from_x([-25.0, 25.0]), env, (-60.0, 60.0), 2.0)
    b = [tip.fields(Sample.from_x([-25.0 + 7.0, 25.0 + 7.0]).emitters, env, (x + 7.0, 0.0))[0]
         for x in a.positions]
    b = np.array([np.sum(np.abs(E) ** 2) for E in b])
    shift = float(np.max(np.abs(a.signal - b)) / a.signal.max())
    par = float(np.max(np.abs(a.signal - a.signal[::-1])) / a.signal.max())
    return max(shift, par) < 1e-10, f"shift {shift:.1e}, parity {par:.1e}"


@check("point tip (y, z) single-peaked, aperture double-peaked")
def _peak_counts():
    env = HalfSpace(2.25)
    one = Sample.from_x([0.0])
    counts = {o: len(detect_peaks(scan_line(TipModel.point(o, h), one, env, step=2.0)))
              for o in "yz" for h in (10.0, 50.0, 100.0)}
    ap = len(detect_peaks(scan_line(TipModel.aperture(height=10.0), one, env, step=2.0)))
    ok = set(counts.values()) == {1} and ap >= 2
    return ok, f"aperture peaks {ap}"


@check("dip contrast non-increasing with height")
def _contrast():
    table = resolution_sweep(TipModel.point("z"), 50.0, [10, 20, 30, 40, 50, 100],
                             HalfSpace(2.25), step=1.0)
    return table.monotone, ", ".join(f"{r.dip_contrast:.3f}" for r in table.rows)


def run_all():
    results = []
    for name, fn in _checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
