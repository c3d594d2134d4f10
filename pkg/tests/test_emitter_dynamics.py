import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsomsim.em_core import PointDipole, electric_dipole_fields
from nsomsim.emitter_dynamics import (C_NM_PER_NS, LaserDrive, TwoLevelEmitter,
                                      emission_intensity, equivalent_fields,
                                      evolve_populations, magnetic_intensity, mixed_detector,
                                      pumping_rate, spontaneous_rate, spontaneous_rate_si,
                                      stationary_population, survival_probability,
                                      transient_field)
from nsomsim.errors import InvalidPopulation, NegativeTime, SingularPoint
from nsomsim.halfspace import HalfSpace, electric_dipole_fields_env

OMEGA = 2 * np.pi * C_NM_PER_NS / 600.0  # rad/ns at 600 nm
EM = TwoLevelEmitter(omega_eg=OMEGA, gamma=0.1)


def rk4(sigma_ee0, gamma, gamma_p, t_end, n):
    """Fourth-order integration of the pumped two-level rate equations."""
    def f(y):
        ee, gg = y
        return np.array([-gamma * ee + gamma_p * (gg - ee), gamma * ee - gamma_p * (gg - ee)])

    y = np.array([sigma_ee0, 1 - sigma_ee0], dtype=float)
    dt = t_end / n
    out = [y.copy()]
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + dt / 2 * k1)
        k3 = f(y + dt / 2 * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


def test_speed_of_light_units():
    assert C_NM_PER_NS == pytest.approx(2.99792458e8)


def test_survival_probability():
    assert survival_probability(EM, 0.0) == 1.0
    assert survival_probability(EM, np.log(2) / EM.gamma) == pytest.approx(0.5)
    assert survival_probability(EM, 10.0) == pytest.approx(0.367879, abs=1e-6)
    with pytest.raises(NegativeTime):
        survival_probability(EM, -1.0)


def test_omega0_pole():
    em = TwoLevelEmitter(omega_eg=5.0, gamma=0.2, lamb_shift=0.3)
    assert em.omega0 == pytest.approx(4.7 - 0.1j)


def test_spontaneous_rate_scaling():
    base = spontaneous_rate([0, 0, 1.0], 2.0)
    assert spontaneous_rate([0, 0, 2.0], 2.0) == pytest.approx(4 * base)
    assert spontaneous_rate([0, 0, 1.0], 4.0) == pytest.approx(8 * base)
    mu = np.sqrt(0.1 * 3 * np.pi / 8.0)
    assert spontaneous_rate([mu, 0, 0], 2.0) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        spontaneous_rate([1, 0, 0], 0.0)


def test_spontaneous_rate_si():
    # one debye at 600 nm gives a rate of a few per microsecond
    debye = 3.33564e-30
    omega = 2 * np.pi * 2.99792458e8 / 600e-9
    rate = spontaneous_rate_si([0, 0, debye], omega)
    expect = omega**3 * debye**2 / (3 * np.pi * 8.8541878128e-12 * 1.054571817e-34
                                    * 2.99792458e8**3) * 1e-9
    assert rate == pytest.approx(expect, rel=1e-6)
    assert 1e-3 < rate < 1e-2


def test_transient_causality_and_decay():
    em = TwoLevelEmitter(omega_eg=OMEGA, gamma=0.5)
    r = np.array([0.0, 3.0e8, 0.0])  # one nanosecond of travel
    front = np.linalg.norm(r) / C_NM_PER_NS
    assert np.all(transient_field(em, r, front * 0.999) == 0)
    t = front + np.linspace(0.5, 6.0, 23)
    I = np.array([np.sum(np.abs(transient_field(em, r, tt)) ** 2) for tt in t])
    slope = np.polyfit(t - front, np.log(I), 1)[0]
    assert slope == pytest.approx(-em.gamma, rel=1e-6)
    em0 = TwoLevelEmitter(omega_eg=OMEGA, gamma=1e-15)
    a = np.linalg.norm(transient_field(em0, r, front + 10.0))
    b = np.linalg.norm(transient_field(em0, r, front + 1000.0))
    assert a == pytest.approx(b, rel=1e-9)


def test_transient_matches_static_at_front():
    em = TwoLevelEmitter(omega_eg=OMEGA, gamma=1e-12)
    r = np.array([250.0, 40.0, 10.0])
    t = np.linalg.norm(r) / C_NM_PER_NS
    E = transient_field(em, r, t)
    Es, _ = electric_dipole_fields(PointDipole(em.mu_ge), em.omega0 / C_NM_PER_NS, r)
    assert np.linalg.norm(E) == pytest.approx(np.linalg.norm(Es), rel=1e-6)
    with pytest.raises(SingularPoint):
        transient_field(em, em.position, 1.0)


def test_pumping_rate():
    d = LaserDrive(omega_L=EM.omega_eg, rabi=0.02)
    assert pumping_rate(d, EM) == pytest.approx(0.02**2 / EM.gamma)
    off = LaserDrive(omega_L=EM.omega_eg + EM.gamma / 2, rabi=0.02)
    assert pumping_rate(off, EM) == pytest.approx(0.5 * pumping_rate(d, EM))
    assert pumping_rate(LaserDrive(omega_L=EM.omega_eg), EM) == 0
    shifted = TwoLevelEmitter(omega_eg=10.0, gamma=0.1, lamb_shift=0.4)
    res = LaserDrive(omega_L=9.6, rabi=0.02)
    assert pumping_rate(res, shifted) == pytest.approx(0.02**2 / 0.1)


def test_evolve_closed_forms():
    t = np.linspace(0, 50, 11)
    ee, gg = evolve_populations(1.0, 0.1, 0.0, t)
    assert np.allclose(ee, np.exp(-0.1 * t), rtol=1e-14)
    ee, _ = evolve_populations(0.0, 0.1, 0.1, 1e4)
    assert ee == pytest.approx(1 / 3)
    with pytest.raises(InvalidPopulation):
        evolve_populations(1.2, 0.1, 0.0, 1.0)
    with pytest.raises(NegativeTime):
        evolve_populations(0.5, 0.1, 0.0, -1.0)


@pytest.mark.parametrize("s0, gp", [(1.0, 0.0), (0.0, 0.05), (0.3, 0.2), (1.0, 1.0)])
def test_evolve_matches_rk4(s0, gp):
    gamma = 0.1
    t_end = 10 / gamma
    num = rk4(s0, gamma, gp, t_end, 20000)
    t = np.linspace(0, t_end, 20001)
    ee, gg = evolve_populations(s0, gamma, gp, t)
    assert np.max(np.abs(num[:, 0] - ee)) < 1e-9
    assert np.max(np.abs(num[:, 1] - gg)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(s0=st.floats(0, 1), gamma=st.floats(1e-3, 10), gp=st.floats(0, 10),
       t=st.floats(0, 1e3))
def test_population_bounds(s0, gamma, gp, t):
    ee, gg = evolve_populations(s0, gamma, gp, t)
    assert -1e-15 <= ee <= 1 + 1e-15
    assert abs(ee + gg - 1) < 1e-14


def test_monotone_approach():
    t = np.linspace(0, 100, 200)
    ee, _ = evolve_populations(1.0, 0.1, 0.05, t)
    assert np.all(np.diff(ee) <= 0)
    ee, _ = evolve_populations(0.0, 0.1, 0.05, t)
    assert np.all(np.diff(ee) >= 0)


def test_stationary_population():
    ee, coh = stationary_population(1.0, 1e-4)
    assert ee == pytest.approx(1e-4, rel=2.1e-4) and coh == ee
    assert stationary_population(1.0, 1e12)[0] == pytest.approx(0.5, rel=1e-11)
    assert stationary_population(1.0, np.inf) == (0.5, 0.5)
    assert stationary_population(0.1, 0.1)[0] == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        stationary_population(0.0, 1.0)


DRIVE = LaserDrive(omega_L=OMEGA, rabi=0.01)
POINTS = np.array([[30.0, 10.0, -5.0], [0.0, 0.0, 40.0], [-80.0, 25.0, 3.0]])


def classical(env=None):
    _, coh2 = stationary_population(EM.gamma, pumping_rate(DRIVE, EM))
    P = EM.mu_ge * np.sqrt(coh2)
    return electric_dipole_fields_env(P, EM.position + [0, 0, 1.0], OMEGA / C_NM_PER_NS,
                                      POINTS, env or HalfSpace(1.0))


def test_classical_equivalence():
    em = TwoLevelEmitter(omega_eg=OMEGA, gamma=0.1, position=[0, 0, 1.0])
    E, B = classical()
    I = emission_intensity(em, DRIVE, POINTS)
    assert np.allclose(I, np.sum(np.abs(E) ** 2, 1), rtol=1e-12, atol=0)
    Im = magnetic_intensity(em, DRIVE, POINTS)
    assert np.allclose(Im, np.sum(np.abs(B) ** 2, 1), rtol=1e-12, atol=0)
    Eh, _ = classical(HalfSpace(2.25))
    Ih = emission_intensity(em, DRIVE, POINTS, env=HalfSpace(2.25))
    assert np.allclose(Ih, np.sum(np.abs(Eh) ** 2, 1), rtol=1e-12, atol=0)


def test_intensity_scaling_and_zero():
    I1 = emission_intensity(EM, DRIVE, [30.0, 0, 10.0])
    # in the weak-field regime |sigma_eg|^2 grows with |Omega|^2
    strong = LaserDrive(omega_L=OMEGA, rabi=0.02)
    gp1, gp2 = pumping_rate(DRIVE, EM), pumping_rate(strong, EM)
    ratio = stationary_population(EM.gamma, gp2)[1] / stationary_population(EM.gamma, gp1)[1]
    assert emission_intensity(EM, strong, [30.0, 0, 10.0]) == pytest.approx(ratio * I1)
    assert emission_intensity(EM, LaserDrive(omega_L=OMEGA), [30.0, 0, 10.0]) == 0


def test_magnetic_intensity_geometry():
    assert magnetic_intensity(EM, DRIVE, [0.0, 0.0, 50.0]) == 0
    kR = 1e3
    r = [kR * C_NM_PER_NS / OMEGA, 0.0, 0.0]
    ratio = magnetic_intensity(EM, DRIVE, r) / emission_intensity(EM, DRIVE, r)
    # equatorial closed form |k^2 + ik/R|^2 / |k^2 + ik/R - 1/R^2|^2
    u = 1 / kR
    assert ratio == pytest.approx((1 + u**2) / ((1 - u**2) ** 2 + u**2), rel=1e-9)
    assert abs(ratio - 1) < 1e-5


def test_mixed_detector():
    r = [20.0, 15.0, 5.0]
    E, B = equivalent_fields(EM, DRIVE, r)
    assert mixed_detector(2.0, 0.0, 0, 1, EM, DRIVE, r) == pytest.approx(4 * abs(E[0]) ** 2)
    assert mixed_detector(0.0, 1j, 0, 1, EM, DRIVE, r) == pytest.approx(abs(B[1]) ** 2)
    with pytest.raises(ValueError):
        mixed_detector(1, 1, 3, 0, EM, DRIVE, r)


@settings(max_examples=50, deadline=None)
@given(a=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       b=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       i=st.integers(0, 2), j=st.integers(0, 2))
def test_mixed_detector_triangle(a, b, i, j):
    r = [20.0, 15.0, 5.0]
    E, B = equivalent_fields(EM, DRIVE, r)
    val = mixed_detector(a, b, i, j, EM, DRIVE, r)
    bound = (abs(a) * abs(E[i]) + abs(b) * abs(B[j])) ** 2
    assert val <= bound * (1 + 1e-12) + 1e-300
