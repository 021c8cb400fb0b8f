import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from qlangevin.bath import (BlackbodyRadiation, Ohmic, SingleRelaxation, TabulatedImpedance, bare_mass,
                            electron_time, make_bath, renormalize_mass)
from qlangevin.errors import (CausalityError, DomainError, ExtrapolationError, FormatError,
                              UnsupportedOperation)
from qlangevin.sampling import SampledFunction, write_csv
from qlangevin.units import UnitSystem

GAUSS = UnitSystem.gaussian()
M_E = 9.1093837015e-28


def _sr_table(zeta=1.5, r=2.0, n=4001):
    w = np.geomspace(1e-4, 1e4, n)
    return TabulatedImpedance(SampledFunction(w, zeta * r**2 / (w**2 + r**2)))


# --- spectral distribution ---------------------------------------------------------

def test_ohmic_constant():
    assert Ohmic(2.5).spectral_distribution(0.0) == 2.5
    assert np.all(Ohmic(2.5).spectral_distribution(np.geomspace(1e-6, 1e6, 13)) == 2.5)


def test_blackbody_zero_at_origin():
    assert BlackbodyRadiation(1.0, 0.3).spectral_distribution(0.0) == 0.0


def test_blackbody_plateau():
    b = BlackbodyRadiation(1.0, 0.3)
    limit = 2 / 3 * b.Omega**2
    assert b.plateau == pytest.approx(limit, rel=1e-15)
    assert b.spectral_distribution(100 * b.Omega) / limit == pytest.approx(1.0, abs=1e-4)


def test_single_relaxation_profile():
    b = SingleRelaxation(1.5, 2.0)
    assert b.spectral_distribution(2.0) == pytest.approx(0.75, rel=1e-15)


def test_negative_frequency_rejected():
    for b in (Ohmic(1.0), SingleRelaxation(1.0, 1.0), BlackbodyRadiation(1.0, 0.5), _sr_table(n=50)):
        with pytest.raises(DomainError):
            b.spectral_distribution(-1.0)


def test_tabulated_outside_grid():
    b = _sr_table(n=50)
    with pytest.raises(ExtrapolationError):
        b.spectral_distribution(1e5)
    with pytest.raises(ExtrapolationError):
        b.spectral_distribution(1e-6)
    # integrals use the constant edge extension instead
    assert b.re_mu_extended(1e5) == pytest.approx(b.spectral_distribution(1e4))


def test_tabulated_interpolation_clipped_and_exact_on_nodes():
    w = np.array([0.1, 1.0, 2.0, 3.0, 4.0])
    y = np.array([1.0, 0.0, 0.0, 2.0, 0.5])
    b = TabulatedImpedance(SampledFunction(w, y))
    assert np.allclose(b.spectral_distribution(w), y)
    assert np.all(b.spectral_distribution(np.linspace(0.1, 4.0, 400)) >= 0)


@pytest.mark.parametrize("w, y", [
    ([0.1, 0.2, 0.3], [1, 1, 1]),
    ([0.1, 0.3, 0.2, 0.4], [1, 1, 1, 1]),
    ([0.0, 0.2, 0.3, 0.4], [1, 1, 1, 1]),
    ([0.1, 0.2, 0.3, 0.4], [1, -1, 1, 1]),
])
def test_tabulated_format_errors(w, y):
    with pytest.raises(FormatError):
        TabulatedImpedance(SampledFunction(np.array(w, float), np.array(y, float)))


# --- memory_fourier -------------------------------------------------------------------

def test_ohmic_fourier_is_zeta():
    assert Ohmic(1.7).memory_fourier(3.0 + 0j) == 1.7


def test_blackbody_fourier_at_i_omega():
    b = BlackbodyRadiation(1.0, 0.4)
    assert b.memory_fourier(1j * b.Omega) == pytest.approx(b.units.e_charge**2 * b.Omega**2 / (3 * b.units.c**3),
                                                          rel=1e-15)


def test_blackbody_fourier_over_z_is_constant():
    b = BlackbodyRadiation(1.0, 0.4)
    rng = np.random.default_rng(3)
    z = rng.uniform(-5, 5, 50) + 1j * rng.uniform(0.01, 5, 50)
    ratio = b.memory_fourier(z) * (z + 1j * b.Omega) / z
    assert np.allclose(ratio, b.plateau, rtol=1e-14, atol=0)


def test_single_relaxation_axis_matches_spectral():
    b = SingleRelaxation(1.3, 0.7)
    w = np.geomspace(1e-4, 1e4, 200)
    assert np.allclose(b.memory_fourier(w + 0j).real, b.spectral_distribution(w), rtol=1e-12, atol=0)


def test_lower_half_plane_rejected():
    with pytest.raises(DomainError):
        Ohmic(1.0).memory_fourier(1.0 - 0.1j)


@pytest.mark.parametrize("bath", [SingleRelaxation(1.0, 2.0), BlackbodyRadiation(1.0, 0.5)],
                         ids=["single_relaxation", "blackbody"])
def test_epsilon_limit_approaches_spectral(bath):
    w = np.array([0.1, 1.0, 3.0])
    errs = [np.max(np.abs(bath.memory_fourier(w + 1j * eps).real - bath.spectral_distribution(w)))
            for eps in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


@pytest.mark.parametrize("bath", [Ohmic(1.0), SingleRelaxation(1.0, 2.0), BlackbodyRadiation(1.0, 0.5),
                                  _sr_table(n=400)], ids=["ohmic", "sr", "bbr", "tabulated"])
def test_no_zeros_or_poles_in_upper_half_plane(bath):
    x = np.linspace(-20, 20, 81)
    y = np.geomspace(1e-2, 20, 40)
    z = (x[None, :] + 1j * y[:, None]).ravel()
    mu = np.asarray(bath.memory_fourier(z))
    assert np.all(np.isfinite(mu))
    assert np.min(np.abs(mu)) > 0
    # positive real part is the analytic signature of a passive bath
    assert np.all(mu.real > -1e-12)


def test_tabulated_kramers_kronig_reconstruction():
    zeta, r = 1.5, 2.0
    b = _sr_table(zeta, r)
    w = np.geomspace(1e-2, 1e2, 60)
    exact = zeta * r * w / (w**2 + r**2)
    got = b.memory_fourier(w + 0j).imag
    assert np.max(np.abs(got - exact) / exact) < 1e-4


def test_tabulated_off_axis_matches_closed_form():
    zeta, r = 1.5, 2.0
    b = _sr_table(zeta, r)
    z = np.array([0.5 + 0.5j, 2.0 + 1.0j, -1.0 + 3.0j, 1j])
    exact = zeta * r / (r - 1j * z)
    assert np.allclose(b.memory_fourier(z), exact, rtol=1e-4)


def test_tabulated_round_trip_csv(tmp_path):
    w = np.geomspace(0.1, 10, 20)
    path = tmp_path / "bath.csv"
    write_csv(path, {"omega": w, "re_mu": 1 / (1 + w**2)}, {"units": "reduced"})
    b = TabulatedImpedance.from_csv(path)
    assert b.omega_min == pytest.approx(0.1) and b.omega_max == pytest.approx(10)
    assert b.to_dict()["source"] == str(path)
    assert make_bath("tabulated", table=path).spectral_distribution(1.0) == pytest.approx(0.5, rel=1e-3)


# --- memory kernels -----------------------------------------------------------------

def test_ohmic_kernel():
    k = Ohmic(2.0).memory_kernel()
    assert k.delta_weight == 2.0
    assert np.all(k(np.linspace(0, 5, 11)) == 0)


def test_blackbody_kernel_weights():
    b = BlackbodyRadiation(2.0, 0.3)
    k = b.memory_kernel()
    assert k.delta_weight == pytest.approx(2 * b.M * b.Omega**2 * b.tau_e)
    assert k(0.0) == pytest.approx(-b.M * b.Omega**3 * b.tau_e)
    assert abs(k(200.0 / b.Omega)) < 1e-80
    assert k(-1.0) == 0.0


def test_tabulated_has_no_kernel():
    with pytest.raises(UnsupportedOperation):
        _sr_table(n=50).memory_kernel()


@pytest.mark.parametrize("bath", [SingleRelaxation(1.2, 0.8), BlackbodyRadiation(1.0, 0.5)],
                         ids=["single_relaxation", "blackbody"])
def test_kernel_transform_round_trip(bath):
    k = bath.memory_kernel()
    for w in (0.05, 0.5, 1.0, 4.0):
        re = quad(k.smooth, 0, np.inf, weight="cos", wvar=w)[0]
        im = quad(k.smooth, 0, np.inf, weight="sin", wvar=w)[0]
        mu = k.delta_fraction * k.delta_weight + re + 1j * im
        assert mu == pytest.approx(bath.memory_fourier(w + 0j), rel=1e-6)


# --- mass renormalisation --------------------------------------------------------------

def test_electron_time_physical():
    tau = electron_time(M_E, GAUSS)
    assert 6e-24 < tau < 6.5e-24
    assert 1.5e23 < 1 / tau < 1.7e23


def test_renormalisation_round_trip():
    m, Om = 0.7, 0.2
    M = renormalize_mass(m, Om)
    assert M == pytest.approx(m + 2 / 3 * Om)
    assert bare_mass(M, Om) == pytest.approx(m, rel=1e-14)
    assert renormalize_mass(m, 0.0) == m


def test_bound_gives_zero_bare_mass():
    M = 1.0
    om = 1 / electron_time(M, GAUSS.reduced())
    assert bare_mass(M, om) == 0.0
    assert BlackbodyRadiation(M, om).bare_mass == 0.0


def test_cutoff_above_bound():
    with pytest.raises(CausalityError):
        bare_mass(1.0, 1.6)
    with pytest.raises(CausalityError):
        BlackbodyRadiation(1.0, 1.6)


def test_make_bath_kinds():
    assert isinstance(make_bath("ohmic", zeta=1.0), Ohmic)
    assert isinstance(make_bath("single_relaxation", zeta=1.0, omega_r=2.0), SingleRelaxation)
    assert isinstance(make_bath("blackbody", M=1.0, Omega=0.5), BlackbodyRadiation)
    with pytest.raises(DomainError):
        make_bath("debye", zeta=1.0)


# --- properties ----------------------------------------------------------------------

@given(zeta=st.floats(1e-3, 1e3), r=st.floats(1e-3, 1e3), w=st.floats(0, 1e6))
def test_property_single_relaxation_nonnegative(zeta, r, w):
    assert SingleRelaxation(zeta, r).spectral_distribution(w) >= 0


@given(M=st.floats(1e-2, 1e2), frac=st.floats(1e-3, 1.0), w=st.floats(0, 1e6))
def test_property_blackbody_nonnegative(M, frac, w):
    om = frac / electron_time(M, GAUSS.reduced())
    assert BlackbodyRadiation(M, om).spectral_distribution(w) >= 0


@given(y=st.lists(st.floats(0, 10), min_size=4, max_size=12), w=st.floats(0, 1))
def test_property_tabulated_nonnegative(y, w):
    x = np.linspace(0.1, 2.0, len(y))
    b = TabulatedImpedance(SampledFunction(x, np.array(y)))
    assert b.spectral_distribution(0.1 + 1.9 * w) >= 0


@given(zeta=st.floats(1e-2, 1e2), r=st.floats(1e-2, 1e2), x=st.floats(-50, 50), y=st.floats(1e-3, 50))
def test_property_single_relaxation_positive_real_part(zeta, r, x, y):
    assert SingleRelaxation(zeta, r).memory_fourier(complex(x, y)).real > 0


def test_blackbody_excess_is_cancellation_free():
    b = BlackbodyRadiation(1.0, 0.5)
    w = np.array([0.1, 1.0, 10.0])
    assert np.allclose(b.spectral_excess(w), b.spectral_distribution(w) - b.plateau, rtol=1e-12)
    far = b.spectral_excess(1e8)
    assert far == pytest.approx(-b.plateau * b.Omega**2 / 1e16, rel=1e-12)
