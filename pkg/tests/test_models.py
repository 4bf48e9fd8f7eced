import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shortpulse.dispersion import KGParams, carrier_expand, kg_envelope_nonlinearity
from shortpulse.models import (
    EnvelopeState,
    EnvelopeStepper,
    ExactKGStepper,
    KGState,
    ModelKind,
    NumericalError,
    ScalarStepper,
    SolverConfig,
    make_stepper,
    reconstruct,
    run,
    snapshot_error,
    spectral_tail,
    step_envelope,
    step_exact_kg,
    step_scalar,
)
from shortpulse.spectral import PeriodicGrid

L = 30 * math.pi
SCALAR = [ModelKind.FULL_DISPERSION, ModelKind.NLS, ModelKind.IMPROVED_NLS]
P = (1 - 1j) / math.sqrt(2)


def gaussian(grid, beta=1.0, x0=15.0):
    return np.exp(-((grid.x - x0) / beta) ** 2).astype(complex)


def kg_initial(grid, eps, x0=15.0):
    F = gaussian(grid, x0=x0)
    ph = np.exp(1j * grid.x / eps)
    return KGState(2 * np.real(F * ph), 2 * np.real(P * F * ph))


def initial_for(model, grid, eps, x0=15.0):
    if model is ModelKind.EXACT_KG:
        return kg_initial(grid, eps, x0)
    F = gaussian(grid, x0=x0)
    if model is ModelKind.ENVELOPE:
        return EnvelopeState(np.array([F, P * F]))
    return EnvelopeState(F)


# exact system ---------------------------------------------------------------


def test_rotation_substep_example():
    st_ = ExactKGStepper(PeriodicGrid(L, 8), 0.1, 1.0)
    arr = np.array([np.ones(8), np.zeros(8)])
    st_.nonlinear(arr, 1.0)
    np.testing.assert_allclose(arr[0], math.cos(0.1), atol=1e-15)
    np.testing.assert_allclose(arr[1], math.sin(0.1), atol=1e-15)


def test_linear_substep_rotates_zero_mode():
    eps, t = 0.1, 0.37
    st_ = ExactKGStepper(PeriodicGrid(L, 16), eps, 1.0)
    arr = np.array([np.ones(16), np.zeros(16)])
    st_.linear(arr, t)
    np.testing.assert_allclose(arr[0], math.cos(t / eps), atol=1e-14)
    np.testing.assert_allclose(arr[1], -math.sin(t / eps), atol=1e-14)


def test_linear_substep_matches_matrix_exponential():
    from scipy.linalg import expm

    eps, t = 0.05, 0.3
    grid = PeriodicGrid(L, 64)
    st_ = ExactKGStepper(grid, eps, 1.0)
    j = 5
    xi = grid.xi[j]
    M = np.array([[0, 1j * xi - 1 / eps], [1j * xi + 1 / eps, 0]])
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    mode = np.exp(1j * xi * grid.x)
    arr = np.array([2 * np.real(a * mode), 2 * np.real(b * mode)])
    st_.linear(arr, t)
    want = expm(-t * M) @ np.array([a, b])
    np.testing.assert_allclose(arr[0], 2 * np.real(want[0] * mode), atol=1e-12)
    np.testing.assert_allclose(arr[1], 2 * np.real(want[1] * mode), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 0.5), st.floats(1e-3, 0.1))
def test_exact_step_is_an_isometry(seed, eps, dt):
    grid = PeriodicGrid(L, 128)
    rng = np.random.default_rng(seed)
    state = KGState(rng.standard_normal(grid.n), rng.standard_normal(grid.n))
    out = ExactKGStepper(grid, eps, dt).step(state)
    assert out.energy(grid) == pytest.approx(state.energy(grid), rel=1e-12)
    assert out.t == pytest.approx(dt)


def test_exact_step_stays_real():
    grid = PeriodicGrid(L, 256)
    out = step_exact_kg(kg_initial(grid, 0.1), 0.01, 0.1, grid)
    assert not np.iscomplexobj(out.f) and not np.iscomplexobj(out.g)


def test_exact_rejects_complex_fields():
    grid = PeriodicGrid(L, 16)
    with pytest.raises(ValueError):
        ExactKGStepper(grid, 0.1, 0.1).step(KGState(np.ones(16) * 1j, np.zeros(16)))


def test_kgstate_shape_mismatch():
    with pytest.raises(ValueError):
        KGState(np.zeros(4), np.zeros(5))


# envelope --------------------------------------------------------------------


def test_polarized_zero_mode_is_stationary_under_linear_flow():
    grid = PeriodicGrid(L, 32)
    st_ = EnvelopeStepper(grid, 0.01, 0.1)
    U = np.array([np.full(32, 0.3 + 0.2j), P * np.full(32, 0.3 + 0.2j)])
    out = st_.linear(U.copy(), 1.234)
    np.testing.assert_allclose(out, U, atol=1e-13)


def test_envelope_cubic_matches_oracle():
    grid = PeriodicGrid(L, 16)
    st_ = EnvelopeStepper(grid, 0.01, 0.1, KGParams(v=1.3))
    rng = np.random.default_rng(2)
    U = rng.standard_normal((2, 16)) + 1j * rng.standard_normal((2, 16))
    out = st_.cubic(U, np.empty_like(U))
    for j in range(16):
        np.testing.assert_allclose(out[:, j], kg_envelope_nonlinearity(U[:, j], v=1.3), rtol=1e-13)


def test_envelope_linear_flow_conserves_l2():
    grid = PeriodicGrid(L, 256)
    rng = np.random.default_rng(3)
    U = rng.standard_normal((2, 256)) + 1j * rng.standard_normal((2, 256))
    cfg = SolverConfig(0.05, 0.1, 5.0, grid, nonlinearity=False)
    tr = run(ModelKind.ENVELOPE, EnvelopeState(U), cfg)
    m0 = EnvelopeState(U).mass(grid)
    assert tr.state(-1).mass(grid) == pytest.approx(m0, rel=1e-12)


def test_envelope_rejects_scalar_state():
    with pytest.raises(ValueError):
        step_envelope(EnvelopeState(np.ones(16)), 0.1, 0.1, PeriodicGrid(L, 16))


# scalar models ----------------------------------------------------------------


def test_nls_constant_modulus_is_pure_phase_rotation():
    grid = PeriodicGrid(L, 64)
    out = step_scalar(EnvelopeState(np.full(64, 0.8 + 0j)), 0.1, "nls", 0.05, grid)
    np.testing.assert_allclose(np.abs(out.U), 0.8, atol=1e-15)
    np.testing.assert_allclose(out.U, 0.8 * np.exp(1j * 4 / math.sqrt(2) * 0.05 * 0.64 * 0.1), atol=1e-14)


def test_fd_linear_substep_leaves_zero_mode():
    grid = PeriodicGrid(L, 64)
    st_ = ScalarStepper(ModelKind.FULL_DISPERSION, grid, 0.01, 0.1)
    u = np.full(64, 1.5 - 0.5j)
    np.testing.assert_allclose(st_.linear(u.copy(), 3.0), u, atol=1e-14)


@pytest.mark.parametrize("model", [ModelKind.FULL_DISPERSION, ModelKind.NLS])
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_scalar_step_conserves_l2(model, seed):
    grid = PeriodicGrid(L, 128)
    rng = np.random.default_rng(seed)
    u = EnvelopeState(rng.standard_normal(128) + 1j * rng.standard_normal(128))
    out = step_scalar(u, 0.01, model, 0.01, grid)
    assert out.mass(grid) == pytest.approx(u.mass(grid), rel=1e-12)


@pytest.mark.parametrize("model", SCALAR)
def test_linear_scalar_flow_matches_analytic_spectrum(model):
    grid = PeriodicGrid(L, 512)
    eps, T = 0.02, 3.0
    u0 = gaussian(grid)
    cfg = SolverConfig(eps, 0.01, T, grid, nonlinearity=False)
    tr = run(model, EnvelopeState(u0), cfg)
    m = ScalarStepper(model, grid, eps, 0.01).m
    want = np.fft.ifft(np.exp(-1j * T * m) * np.fft.fft(u0))
    np.testing.assert_allclose(tr.f(-1), want, atol=1e-10)


def test_single_mode_linear_run_matches_phase():
    grid = PeriodicGrid(L, 64)
    eps, T, j = 0.05, 2.0, 3
    xi = grid.xi[j]
    u0 = np.exp(1j * xi * grid.x)
    tr = run("fd", EnvelopeState(u0), SolverConfig(eps, 0.05, T, grid, nonlinearity=False))
    cp = carrier_expand()
    m = (math.sqrt((1 + eps * xi) ** 2 + 1) - cp.omega) / eps
    np.testing.assert_allclose(tr.f(-1), np.exp(-1j * m * T) * u0, atol=1e-10)


def test_improved_uses_smoothed_rk2_and_local_variant_reduces_at_carrier():
    grid = PeriodicGrid(L, 32)
    imp = ScalarStepper(ModelKind.IMPROVED_NLS, grid, 0.01, 0.1)
    assert not imp.exact_phase and imp.smoothing is not None
    u = np.full(32, 0.5 + 0j)
    loc = ScalarStepper(ModelKind.FULL_DISPERSION, grid, 0.01, 0.1, projector="local")
    car = ScalarStepper(ModelKind.FULL_DISPERSION, grid, 0.01, 0.1)
    np.testing.assert_allclose(loc.rate(u), car.rate(u), atol=1e-15)


def test_scalar_stepper_rejects_vector_models():
    with pytest.raises(ValueError):
        ScalarStepper(ModelKind.ENVELOPE, PeriodicGrid(L, 16), 0.1, 0.1)
    with pytest.raises(ValueError):
        step_scalar(EnvelopeState(np.ones((2, 16))), 0.1, "fd", 0.1, PeriodicGrid(L, 16))


def test_dealias_flag_filters_upper_half():
    grid = PeriodicGrid(L, 64)
    st_ = ScalarStepper(ModelKind.NLS, grid, 0.1, 0.1, dealias=True)
    u = np.exp(1j * grid.xi[20] * grid.x)
    out = st_.nonlinear(u.copy(), 0.1)
    assert np.max(np.abs(out)) < 1e-12


# covariance ------------------------------------------------------------------


def rolled(state, shift):
    if isinstance(state, KGState):
        return KGState(np.roll(state.f, shift), np.roll(state.g, shift))
    return EnvelopeState(np.roll(state.U, shift, axis=-1))


@pytest.mark.parametrize("model", list(ModelKind))
def test_translation_covariance(model):
    grid = PeriodicGrid(L, 2048 if model is ModelKind.EXACT_KG else 512)
    eps, shift = 0.1, 40
    cfg = SolverConfig(eps, 0.05, 1.0, grid)
    init = initial_for(model, grid, eps)
    a = run(model, init, cfg)
    b = run(model, rolled(init, shift), cfg)
    np.testing.assert_allclose(np.roll(a.snapshots[-1], shift, axis=-1), b.snapshots[-1], atol=1e-10)


# reconstruction ----------------------------------------------------------------


def test_reconstruct_constant_envelope():
    grid = PeriodicGrid(L, 256)
    out = reconstruct(EnvelopeState(np.ones(256)), 0.0, 0.5, grid)
    np.testing.assert_allclose(out.f, 2 * np.cos(grid.x / 0.5), atol=1e-12)
    np.testing.assert_allclose(out.g, 2 * np.real(P * np.exp(1j * grid.x / 0.5)), atol=1e-12)


def test_reconstruct_zero():
    grid = PeriodicGrid(L, 64)
    out = reconstruct(EnvelopeState(np.zeros(64)), 1.0, 0.5, grid)
    assert not out.f.any() and not out.g.any()


def test_reconstruct_demodulation_round_trip():
    ge, gx = PeriodicGrid(L, 256), PeriodicGrid(L, 2048)
    eps, t = 0.05, 0.7
    F = gaussian(ge) * np.exp(0.3j * ge.x)
    out = reconstruct(EnvelopeState(F), t, eps, ge, out_grid=gx)
    omega = carrier_expand().omega
    demod = out.f * np.exp(-1j * (gx.x - omega * t) / eps)
    c = np.fft.fft(demod)
    keep = np.abs(gx.xi) < 0.5 / eps
    back = np.fft.ifft(np.where(keep, c, 0))[:: gx.n // ge.n]
    np.testing.assert_allclose(back, F, atol=1e-10)


def test_reconstruct_vector_envelope_uses_second_component():
    grid = PeriodicGrid(L, 128)
    U = np.array([np.ones(128), 2j * np.ones(128)])
    out = reconstruct(EnvelopeState(U), 0.0, 0.5, grid)
    np.testing.assert_allclose(out.g, 2 * np.real(2j * np.exp(1j * grid.x / 0.5)), atol=1e-12)


def test_reconstruct_warns_when_carrier_is_not_resolved():
    grid = PeriodicGrid(L, 64)
    with pytest.warns(RuntimeWarning, match="exceeds"):
        reconstruct(EnvelopeState(gaussian(grid)), 0.0, 0.01, grid)


def test_envelope_state_shapes():
    with pytest.raises(ValueError):
        EnvelopeState(np.ones((3, 4)))
    assert EnvelopeState(np.ones(4)).is_scalar


# run ---------------------------------------------------------------------------


@pytest.mark.parametrize("model", list(ModelKind))
def test_zero_data_gives_zero_trajectory(model):
    grid = PeriodicGrid(L, 64)
    init = KGState(np.zeros(64), np.zeros(64)) if model is ModelKind.EXACT_KG else (
        EnvelopeState(np.zeros((2, 64)) if model is ModelKind.ENVELOPE else np.zeros(64)))
    tr = run(model, init, SolverConfig(0.1, 0.1, 1.0, grid, 0.5))
    assert tr.times == pytest.approx([0.0, 0.5, 1.0])
    assert all(not np.any(s) for s in tr.snapshots)


def test_run_matches_unfused_steps():
    grid = PeriodicGrid(L, 512)
    eps, dt = 0.1, 0.05
    u = EnvelopeState(gaussian(grid))
    tr = run("improved", u, SolverConfig(eps, dt, 1.0, grid, 0.25))
    st_ = ScalarStepper(ModelKind.IMPROVED_NLS, grid, eps, dt)
    for _ in range(20):
        u = st_.step(u)
    np.testing.assert_allclose(tr.f(-1), u.U, atol=1e-13)
    assert len(tr.times) == 5


def test_envelope_results_are_grid_independent():
    eps, T = 0.05, 2.0
    out = []
    for n in (1024, 2048):
        grid = PeriodicGrid(L, n)
        tr = run(ModelKind.ENVELOPE, initial_for(ModelKind.ENVELOPE, grid, eps),
                 SolverConfig(eps, 0.01, T, grid))
        out.append(tr.snapshots[-1])
    np.testing.assert_allclose(out[1][:, ::2], out[0], atol=1e-8)


def test_nan_guard_reports_time():
    grid = PeriodicGrid(L, 64)
    u = gaussian(grid)
    u[5] = np.nan
    with pytest.raises(NumericalError) as exc:
        run("nls", EnvelopeState(u), SolverConfig(0.1, 0.1, 1.0, grid))
    assert exc.value.t == pytest.approx(0.1)


def test_reference_errors_are_recorded():
    grid = PeriodicGrid(L, 2048)
    eps = 0.1
    cfg = SolverConfig(eps, 0.01, 1.0, grid, 0.25)
    ref = run(ModelKind.EXACT_KG, kg_initial(grid, eps), cfg)
    same = run(ModelKind.EXACT_KG, kg_initial(grid, eps), cfg, reference=ref)
    assert same.errors == [0.0] * 5
    ge = PeriodicGrid(L, 512)
    env = run(ModelKind.ENVELOPE, initial_for(ModelKind.ENVELOPE, ge, eps),
              SolverConfig(eps, 0.01, 1.0, ge, 0.25), reference=ref)
    assert env.errors[0] < 1e-10
    assert 0 < env.error_sup < 0.05


def test_snapshot_error_edge_cases():
    f = np.array([1.0, -2.0, 0.5])
    assert snapshot_error(f, f) == 0.0
    assert snapshot_error(f, np.zeros(3)) == 1.0
    assert math.isnan(snapshot_error(np.zeros(3), f))


def test_spectral_tail_detects_unresolved_content():
    grid = PeriodicGrid(L, 256)
    assert spectral_tail(gaussian(grid, beta=3.0, x0=L / 2)) < 1e-12
    assert spectral_tail(np.exp(1j * grid.xi[120] * grid.x)) == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs", [
    dict(eps=0.0), dict(dt=0.0), dict(t_final=-1.0), dict(projector="other"),
    dict(t_final=1.05, dt=0.1), dict(snapshot_interval=0.15),
])
def test_config_validation(kwargs):
    base = dict(eps=0.1, dt=0.1, t_final=1.0, grid=PeriodicGrid(L, 16))
    base.update(kwargs)
    with pytest.raises(ValueError):
        SolverConfig(**base)


def test_model_name_parsing():
    assert ModelKind.parse("Improved-NLS") is ModelKind.IMPROVED_NLS
    assert ModelKind.parse("exact") is ModelKind.EXACT_KG
    with pytest.raises(ValueError):
        ModelKind.parse("maxwell")


def test_backends_agree():
    from shortpulse import kernels

    try:
        kernels.get_backend("cython")
    except ImportError:
        pytest.skip("compiled backend not built")
    grid = PeriodicGrid(L, 512)
    eps = 0.1
    out = []
    for name in ("cython", "python"):
        st_ = ExactKGStepper(grid, eps, 0.01, backend=name)
        s = kg_initial(grid, eps)
        for _ in range(10):
            s = st_.step(s)
        out.append(s.f)
    np.testing.assert_allclose(out[0], out[1], atol=1e-13)


def test_make_stepper_dispatch():
    cfg = SolverConfig(0.1, 0.1, 1.0, PeriodicGrid(L, 16))
    assert isinstance(make_stepper("exact", cfg), ExactKGStepper)
    assert isinstance(make_stepper("envelope", cfg), EnvelopeStepper)
    assert make_stepper("nls", cfg).model is ModelKind.NLS
