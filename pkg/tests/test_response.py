import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from oracles import ohmic_green
from qlangevin.bath import BathModel, BlackbodyRadiation, Ohmic, SingleRelaxation, TabulatedImpedance
from qlangevin.errors import CausalityError, DomainError, PoleError, UnsupportedOperation, ValidationError
from qlangevin.response import (ResponseFunction, SystemConfig, driven_mean, green_function,
                                green_function_numeric, initial_value_mean, nonrunaway_trajectory,
                                position_commutator, susceptibility)
from qlangevin.sampling import SampledFunction


def _ohmic(m=1.0, K=1.0, zeta=0.3):
    return ResponseFunction(SystemConfig(m, K), Ohmic(zeta))


def _tabulated_sr(zeta=0.5, r=3.0):
    w = np.geomspace(1e-4, 1e4, 4001)
    return TabulatedImpedance(SampledFunction(w, zeta * r**2 / (w**2 + r**2)))


ALL = {
    "ohmic": lambda: _ohmic(),
    "ohmic_free": lambda: _ohmic(K=0.0),
    "overdamped": lambda: _ohmic(zeta=5.0),
    "single_relaxation": lambda: ResponseFunction(SystemConfig(1.0, 2.0), SingleRelaxation(0.5, 3.0)),
    "blackbody": lambda: ResponseFunction(SystemConfig(1.0, 1.0), BlackbodyRadiation(1.0, 0.5)),
    "tabulated": lambda: ResponseFunction(SystemConfig(1.0, 2.0), _tabulated_sr()),
}


# --- susceptibility ------------------------------------------------------------------

def test_static_susceptibility():
    assert susceptibility(_ohmic(K=2.0), 0.0) == 0.5


def test_ohmic_closed_form():
    m, K, zeta = 2.0, 3.0, 0.4
    r = _ohmic(m, K, zeta)
    w0sq, g = K / m, zeta / m
    w = np.linspace(0.01, 5, 50)
    assert np.allclose(r.susceptibility(w), 1 / (m * (w0sq - w**2 - 1j * w * g)), rtol=1e-14)


def test_free_particle_pole_at_zero():
    with pytest.raises(PoleError):
        _ohmic(K=0.0).susceptibility(0.0)


@pytest.mark.parametrize("name", list(ALL))
def test_fd_identity(name):
    r = ALL[name]()
    w = np.sort(np.random.default_rng(11).uniform(1e-3, 20, 200))
    a = r.susceptibility(w)
    rhs = w * np.abs(a) ** 2 * r.bath.spectral_distribution(w)
    assert np.allclose(a.imag, rhs, rtol=1e-12, atol=0)
    assert np.allclose(r.im_alpha_fd(w), a.imag, rtol=1e-12, atol=0)
    assert np.all(a.imag >= 0)


@pytest.mark.parametrize("zeta", [0.2, 3.0])
def test_kramers_kronig_dispersion(zeta):
    r = _ohmic(1.0, 1.0, zeta)
    L = 2e3
    for w in (0.3, 1.0, 2.5):
        f = lambda x: 2 / math.pi * x * r.im_alpha_fd(x) / (x + w)  # noqa: E731
        body = quad(f, 0, L, weight="cauchy", wvar=w, limit=500)[0]
        tail = quad(lambda x: 2 / math.pi * x * r.im_alpha_fd(x) / (x * x - w * w), L, np.inf)[0]
        assert body + tail == pytest.approx(r.susceptibility(w).real, rel=1e-3)


# --- poles ------------------------------------------------------------------------------

class _Antidamped(BathModel):
    kind = "antidamped"

    def spectral_distribution(self, omega):
        return 0.0 * np.asarray(omega)

    def memory_fourier(self, z):
        return -0.5 + 0j * np.asarray(z)


@pytest.mark.parametrize("name", list(ALL))
def test_no_upper_half_plane_poles(name):
    assert ALL[name]().count_upper_half_plane_poles() == 0


def test_growing_mode_detected():
    with pytest.raises(CausalityError):
        ResponseFunction(SystemConfig(1.0, 1.0), _Antidamped())


def test_blackbody_mass_must_match():
    with pytest.raises(DomainError):
        ResponseFunction(SystemConfig(2.0), BlackbodyRadiation(1.0, 0.5))


# --- Green function ----------------------------------------------------------------------

@pytest.mark.parametrize("name", list(ALL))
def test_causality(name):
    r = ALL[name]()
    t = -np.geomspace(1e-6, 1e3, 30)
    assert np.all(green_function(r, t) == 0.0)
    assert np.all(r.green_dot(t) == 0.0)


@pytest.mark.parametrize("name", ["ohmic", "overdamped", "single_relaxation", "blackbody", "tabulated"])
def test_unit_initial_slope(name):
    r = ALL[name]()
    assert green_function(r, 0.0) == 0.0
    assert r.inertia * r.green_dot(0.0) == pytest.approx(1.0, rel=1e-12)


def test_brownian_green():
    r = _ohmic(2.0, 0.0, 1.0)
    t = np.linspace(0, 10, 21)
    assert np.allclose(green_function(r, t), (1 - np.exp(-0.5 * t)) / 1.0, rtol=1e-14, atol=0)


@pytest.mark.parametrize("zeta", [0.2, 1.9999, 2.0, 2.0001, 6.0])
def test_ohmic_closed_form_against_oracle(zeta):
    r = _ohmic(1.0, 1.0, zeta)
    for t in (0.0, 1e-6, 0.3, 2.0, 9.0):
        assert green_function(r, t) == pytest.approx(ohmic_green(t, 1.0, zeta, 1.0), rel=1e-9, abs=1e-15)


def test_critical_damping_numeric_path():
    r = _ohmic(1.0, 1.0, 2.0)
    for t in (0.5, 1.0, 3.0):
        assert abs(green_function_numeric(r, t) - t * math.exp(-t)) < 1e-8


@pytest.mark.parametrize("zeta", [0.3, 1.0])
def test_numeric_green_matches_ohmic(zeta):
    r = _ohmic(1.0, 1.0, zeta)
    gamma = zeta
    for t in np.linspace(0, 10 / gamma, 12):
        assert abs(green_function_numeric(r, t) - green_function(r, t)) < 1e-6


@pytest.mark.parametrize("name", ["single_relaxation", "blackbody"])
def test_pole_expansion_matches_numeric(name):
    r = ALL[name]()
    for t in (0.2, 1.0, 4.0):
        assert green_function(r, t) == pytest.approx(green_function_numeric(r, t), abs=1e-8)


def test_tabulated_green_matches_rational():
    tab = ALL["tabulated"]()
    exact = ALL["single_relaxation"]()
    t = np.array([0.3, 1.0, 3.0])
    assert np.allclose(green_function(tab, t), green_function(exact, t), atol=1e-4)


def test_full_transform_vanishes_before_zero():
    r = _ohmic(1.0, 1.0, 0.5)
    for t in (-0.5, -2.0, -5.0):
        assert abs(green_function_numeric(r, t, form="full")) < 1e-8
    assert green_function_numeric(r, 1.5, form="full") == pytest.approx(green_function(r, 1.5), abs=1e-8)


def test_full_transform_needs_stiffness():
    with pytest.raises(DomainError):
        green_function_numeric(_ohmic(K=0.0), 1.0, form="full")


def test_free_radiating_particle_unsupported_numerically():
    r = ResponseFunction(SystemConfig(1.0), BlackbodyRadiation(1.0, 0.5))
    with pytest.raises(UnsupportedOperation):
        green_function_numeric(r, 1.0)
    # ballistic growth is present in the pole expansion
    assert green_function(r, 50.0) > 10.0


# --- commutator -----------------------------------------------------------------------------

def test_commutator_at_zero():
    assert position_commutator(_ohmic(), 0.0) == 0.0


def test_commutator_antisymmetric():
    r = ALL["single_relaxation"]()
    assert position_commutator(r, 1.7) == -position_commutator(r, -1.7)


def test_commutator_weak_coupling():
    w0 = 1.0
    r = _ohmic(1.0, w0**2, 1e-4)
    for t in (0.5, 2.0, 5.0):
        exact = math.sin(w0 * t) / w0
        assert position_commutator(r, t) == pytest.approx(exact, rel=1e-3)


# --- driven and initial-value motion -------------------------------------------------------

def test_zero_force_gives_zero():
    f = SampledFunction.uniform(0, 10, 101, y=np.zeros(101))
    assert np.all(driven_mean(_ohmic(), f).y == 0)


def test_static_force_response():
    r = _ohmic(1.0, 2.0, 1.0)
    f = SampledFunction.uniform(0, 60, 6001, y=np.full(6001, 3.0))
    assert driven_mean(r, f).y[-1] == pytest.approx(1.5, rel=1e-3)


def test_harmonic_drive_amplitude():
    r = _ohmic(1.0, 1.0, 0.5)
    wd = 1.3
    t = np.linspace(0, 200, 40001)
    f = SampledFunction(t, np.cos(wd * t))
    x = driven_mean(r, f).y
    amp = np.max(np.abs(x[t > 150]))
    assert amp == pytest.approx(abs(r.susceptibility(wd)), rel=5e-3)


def test_driven_mean_needs_uniform_grid():
    f = SampledFunction(np.array([0.0, 1.0, 3.0]), np.ones(3))
    with pytest.raises(ValidationError):
        driven_mean(_ohmic(), f)


def test_initial_value_at_zero():
    assert initial_value_mean(_ohmic(), 0.7, -2.0, 0.0) == 0.7


def test_initial_value_ohmic():
    m, K, zeta = 1.0, 1.0, 0.4
    r = _ohmic(m, K, zeta)
    g = zeta / m
    w1 = math.sqrt(K / m - g * g / 4)
    t = np.linspace(0.1, 10, 9)
    assert np.allclose(initial_value_mean(r, 0.0, 1.0, t), np.exp(-g * t / 2) * np.sin(w1 * t) / w1, rtol=1e-12)


def test_initial_value_free_undamped_limit():
    r = _ohmic(1.0, 0.0, 1e-9)
    t = np.linspace(0, 5, 11)
    assert np.allclose(initial_value_mean(r, 0.3, 1.1, t), 0.3 + 1.1 * t, rtol=1e-8, atol=0)


def test_initial_value_tabulated_uses_numeric_slope():
    tab, exact = ALL["tabulated"](), ALL["single_relaxation"]()
    v_tab = initial_value_mean(tab, 1.0, 0.0, 1.5)
    v_ex = initial_value_mean(exact, 1.0, 0.0, 1.5)
    assert v_tab == pytest.approx(v_ex, abs=1e-4)


def test_initial_value_negative_time():
    with pytest.raises(DomainError):
        initial_value_mean(_ohmic(), 0.0, 1.0, -1.0)


# --- nonrunaway equation ------------------------------------------------------------------

def test_nonrunaway_constant_force():
    t = np.linspace(0, 4, 401)
    tr = nonrunaway_trajectory(2.0, SampledFunction(t, np.full(t.size, 3.0)))
    assert np.allclose(tr.y[:, 0], 3.0 * t**2 / 4.0, rtol=1e-12, atol=1e-15)


def test_nonrunaway_no_self_acceleration():
    t = np.linspace(0, 1e3, 1001)
    tr = nonrunaway_trajectory(1.0, SampledFunction(t, np.zeros(t.size)))
    assert np.all(tr.y == 0)


def test_nonrunaway_velocity_jump_at_step():
    M = 1.0
    dt = 1e-3
    t = np.arange(0, 2, dt)
    f0 = 2.0
    f = np.where(t >= 1.0, f0, 0.0)
    tr = nonrunaway_trajectory(M, SampledFunction(t, f))
    tau = tr.meta["tau_e"]
    k = int(np.argmax(f > 0))
    jump = tr.y[k, 1] - tr.y[k - 1, 1]
    # impulse of the linear ramp between samples plus the tau_e f0 / M kick
    assert jump == pytest.approx((tau * f0 + 0.5 * f0 * dt) / M, rel=1e-12)
    assert tau == pytest.approx(2 / 3)


# --- properties -------------------------------------------------------------------------------

@given(m=st.floats(0.1, 10), K=st.floats(0, 10), zeta=st.floats(1e-3, 10), w=st.floats(1e-3, 100))
def test_property_ohmic_dissipative(m, K, zeta, w):
    r = ResponseFunction(SystemConfig(m, K), Ohmic(zeta), check_poles=False)
    assert r.susceptibility(w).imag > 0


@given(m=st.floats(0.1, 10), K=st.floats(0.01, 10), zeta=st.floats(1e-2, 10), r_=st.floats(0.05, 20),
       t=st.floats(-50, 50))
def test_property_relaxation_green_causal_and_finite(m, K, zeta, r_, t):
    r = ResponseFunction(SystemConfig(m, K), SingleRelaxation(zeta, r_), check_poles=False)
    g = green_function(r, t)
    assert math.isfinite(g)
    if t < 0:
        assert g == 0.0
