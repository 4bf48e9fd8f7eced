import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shortpulse.dispersion import KGParams
from shortpulse.experiments import bandwidth
from shortpulse.models import ModelKind
from shortpulse.pulses import (
    DEFAULT_LENGTH,
    PROFILES,
    InitialData,
    PulseKind,
    PulseSpec,
    assemble_exact_ic,
    build_chirped,
    build_short,
    practical_rule,
    register_profile,
)
from shortpulse.spectral import Field, PeriodicGrid, derivative, wiener_norm

L = DEFAULT_LENGTH
FINE = PeriodicGrid(L, 1 << 15)
P = (1 - 1j) / math.sqrt(2)


def fwhm(field):
    a = np.abs(field.values)
    half = a.max() / 2
    above = np.flatnonzero(a >= half)
    i, j = above[0], above[-1]
    x = field.grid.x
    # linear interpolation at both crossings
    left = x[i - 1] + (half - a[i - 1]) / (a[i] - a[i - 1]) * (x[i] - x[i - 1])
    right = x[j] + (a[j] - half) / (a[j] - a[j + 1]) * (x[j + 1] - x[j])
    return right - left


def test_short_pulse_peaks_at_x0():
    grid = PeriodicGrid(L, 4096)
    x0 = grid.x[652]
    f = build_short(grid, 1.0, x0)
    assert np.argmax(np.abs(f.values)) == 652
    assert f.values[652] == 1.0


def test_short_pulse_width_scales_with_beta():
    ratio = fwhm(build_short(FINE, 1.0)) / fwhm(build_short(FINE, 0.1))
    assert ratio == pytest.approx(10.0, rel=0.01)
    assert fwhm(build_short(FINE, 1.0)) == pytest.approx(2 * math.sqrt(math.log(2)), rel=1e-4)


@pytest.mark.parametrize("beta", [0.05, 0.1, 0.3, 1.0])
def test_short_pulse_wiener_norm_is_dilation_invariant(beta):
    ref = wiener_norm(build_short(FINE, 1.0))
    assert wiener_norm(build_short(FINE, beta)) == pytest.approx(ref, rel=1e-3)


def test_derivative_norm_grows_like_inverse_beta():
    ref = wiener_norm(derivative(build_short(FINE, 1.0)))
    for beta in (0.05, 0.1, 0.2, 0.5):
        got = wiener_norm(derivative(build_short(FINE, beta)))
        assert got * beta == pytest.approx(ref, rel=0.02)


def test_narrow_pulse_has_wider_spectrum():
    g = PeriodicGrid(L, 1 << 14)
    wide = bandwidth(build_short(g, 1.0).values, g)
    narrow = bandwidth(build_short(g, 0.1).values, g)
    assert narrow >= 5 * wide


@pytest.mark.parametrize("beta", [0.1, 0.3, 1.0])
def test_chirped_value_at_center(beta):
    grid = PeriodicGrid(L, 8192)
    x0 = grid.x[1304]
    f = build_chirped(grid, beta, x0)
    assert f.values[1304].real == pytest.approx(math.cos(1 / beta), abs=1e-15)


def test_chirped_beta_one_formula():
    grid = PeriodicGrid(L, 1024)
    y = grid.x - 15.0
    f = build_chirped(grid, 1.0)
    np.testing.assert_allclose(f.values, np.exp(-y * y) * np.cos(np.cos(y)), atol=1e-15)


def test_sech_profile_and_custom_profiles():
    grid = PeriodicGrid(L, 1024)
    f = build_short(grid, 0.5, G="sech")
    np.testing.assert_allclose(f.values, 1 / np.cosh((grid.x - 15) / 0.5))
    g = build_short(grid, 0.5, G=lambda y: np.exp(-y ** 4))
    np.testing.assert_allclose(g.values, np.exp(-((grid.x - 15) / 0.5) ** 4))
    name = "test-quartic"
    if name not in PROFILES:
        register_profile(name, lambda y: np.exp(-y ** 4))
    with pytest.raises(ValueError):
        register_profile(name, np.exp)
    np.testing.assert_array_equal(build_short(grid, 0.5, G=name).values, g.values)


@pytest.mark.parametrize("beta", [0.0, -0.1, 1.5])
def test_beta_outside_range_is_rejected(beta):
    with pytest.raises(ValueError):
        build_short(PeriodicGrid(L, 64), beta)
    with pytest.raises(ValueError):
        PulseSpec(PulseKind.CHIRPED, beta)


def test_unknown_profile_rejected():
    with pytest.raises(ValueError):
        PulseSpec(profile="boxcar")


def test_boundary_tail_warns():
    with pytest.warns(RuntimeWarning, match="boundary"):
        build_short(PeriodicGrid(L, 256), 1.0, x0=1.0)


def test_chirp_close_to_grid_limit_warns():
    with pytest.warns(RuntimeWarning, match="chirp"):
        build_chirped(PeriodicGrid(L, 512), 0.1)


def test_pulse_spec_dispatch():
    grid = PeriodicGrid(L, 2048)
    assert PulseSpec("chirped", 0.5).build(grid).values == pytest.approx(build_chirped(grid, 0.5).values)
    assert PulseSpec("short", 0.5).build(grid).values == pytest.approx(build_short(grid, 0.5).values)


def test_initial_data_polarization():
    grid = PeriodicGrid(L, 256)
    data = InitialData(build_short(grid, 1.0))
    assert data.polarization == pytest.approx(P, abs=1e-15)
    vec = data.state_for(ModelKind.ENVELOPE).U
    np.testing.assert_allclose(vec[1], P * vec[0], atol=1e-15)
    assert data.state_for("fd").is_scalar
    with pytest.raises(ValueError):
        data.state_for(ModelKind.EXACT_KG)


# exact initial data ---------------------------------------------------------


def test_exact_ic_matches_modulation_formula():
    grid = PeriodicGrid(L, 2048)
    eps = 0.05
    env = build_short(grid, 1.0)
    ic = assemble_exact_ic(env, eps)
    F = env.values
    ph = np.exp(1j * grid.x / eps)
    np.testing.assert_allclose(ic.f, 2 * np.real(F * ph), atol=1e-13)
    np.testing.assert_allclose(ic.g, 2 * np.real(P * F * ph), atol=1e-13)
    assert ic.f.dtype == np.float64 and ic.t == 0.0


def test_exact_ic_demodulates_back_to_envelope():
    env_grid = PeriodicGrid(L, 512)
    grid = PeriodicGrid(L, 4096)
    eps = 0.05
    env = build_short(env_grid, 1.0)
    ic = assemble_exact_ic(env, eps, grid=grid)
    # shift the carrier to zero and keep the low band
    c = np.fft.fft(ic.f * np.exp(-1j * grid.x / eps)) / grid.n
    c[np.abs(grid.xi) > 1 / eps] = 0
    back = np.fft.ifft(c * grid.n)
    np.testing.assert_allclose(back, build_short(grid, 1.0).values, atol=1e-10)


def test_exact_ic_of_zero_is_zero():
    grid = PeriodicGrid(L, 256)
    ic = assemble_exact_ic(Field(grid, np.zeros(256, complex)), 0.1)
    assert not ic.f.any() and not ic.g.any()


def test_exact_ic_warns_when_carrier_unresolved():
    with pytest.warns(RuntimeWarning, match="exceeds"):
        assemble_exact_ic(build_short(PeriodicGrid(L, 512), 1.0), 0.01)


def test_exact_ic_general_carrier():
    grid = PeriodicGrid(L, 4096)
    carrier = KGParams(kbar=2.0, v=1.0)
    env = build_short(grid, 1.0)
    ic = assemble_exact_ic(env, 0.1, carrier)
    q = InitialData(env, carrier).polarization
    ph = np.exp(2j * grid.x / 0.1)
    np.testing.assert_allclose(ic.g, 2 * np.real(q * env.values * ph), atol=1e-12)


# practical rule --------------------------------------------------------------


def test_practical_rule_scales_with_beta():
    eps = 0.01
    wide = practical_rule(build_short(FINE, 1.0), eps).value
    narrow = practical_rule(build_short(FINE, 0.1), eps).value
    assert narrow / wide == pytest.approx(10.0, rel=0.02)


def test_practical_rule_single_mode():
    grid = PeriodicGrid(L, 256)
    xi = grid.xi[7]
    rule = practical_rule(Field(grid, np.exp(1j * xi * grid.x)), 0.02)
    assert rule.value == pytest.approx(0.02 * abs(xi), rel=1e-12)


def test_practical_rule_zero_and_flag():
    grid = PeriodicGrid(L, 256)
    assert practical_rule(Field(grid, np.zeros(256, complex)), 0.1).value == 0.0
    xi = grid.xi[10]
    mode = Field(grid, np.exp(1j * xi * grid.x))
    eps_flag = 0.3 / xi
    assert practical_rule(mode, eps_flag * 1.01).flagged
    assert not practical_rule(mode, eps_flag * 0.99).flagged
    with pytest.raises(ValueError):
        practical_rule(mode, 0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.001, 0.1), st.floats(0.2, 1.0))
def test_practical_rule_is_linear_in_eps(eps, beta):
    grid = PeriodicGrid(L, 2048)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        env = build_short(grid, beta)
    a = practical_rule(env, eps).value
    b = practical_rule(env, 2 * eps).value
    assert b == pytest.approx(2 * a, rel=1e-12)
