"""Strang-split integrators for the exact system and its envelope models.

All five integrators use ``S_L(dt/2) S_NL(dt) S_L(dt/2)``:

* ``EXACT_KG``: the real Klein-Gordon system in ``(f, g)``. The linear flow
  is exact per Fourier mode; the nonlinear flow is a pointwise rotation
  because ``f^2 + g^2`` is invariant under it.
* ``ENVELOPE``: the vector envelope equation. Exact 2x2 linear flow, RK2
  midpoint for the cubic term.
* ``FULL_DISPERSION``, ``NLS``: scalar models with exact unitary linear
  flow and exact nonlinear phase rotation.
* ``IMPROVED_NLS``: rational symbol, nonlinearity smoothed by the inverse of
  the Pade denominator and advanced by RK2.

The trailing half step of one Strang step is merged with the leading half
step of the next in :func:`run`; snapshots apply the pending half step to a
copy, so results equal the unmerged scheme.
"""
from __future__ import annotations

import enum
import logging
import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy import fft as sfft

from . import kernels
from .dispersion import (
    KGParams,
    SymbolKind,
    SymbolModel,
    carrier_expand,
    kg_polarization,
    pade_coefficients,
    pade_denominator,
    scalar_nonlinear_coefficient,
    symbol,
)
from .spectral import PeriodicGrid, _resample_coeffs

log = logging.getLogger(__name__)

__all__ = [
    "ModelKind",
    "SolverConfig",
    "KGState",
    "EnvelopeState",
    "NumericalError",
    "ExactKGStepper",
    "EnvelopeStepper",
    "ScalarStepper",
    "make_stepper",
    "step_exact_kg",
    "step_envelope",
    "step_scalar",
    "reconstruct",
    "Trajectory",
    "run",
    "snapshot_error",
    "spectral_tail",
]


class ModelKind(str, enum.Enum):
    EXACT_KG = "exact"
    ENVELOPE = "envelope"
    FULL_DISPERSION = "fd"
    NLS = "nls"
    IMPROVED_NLS = "improved"

    @property
    def is_scalar(self) -> bool:
        return self in (ModelKind.FULL_DISPERSION, ModelKind.NLS, ModelKind.IMPROVED_NLS)

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        aliases = {
            "exact": cls.EXACT_KG, "kg": cls.EXACT_KG, "exactkg": cls.EXACT_KG,
            "envelope": cls.ENVELOPE,
            "fd": cls.FULL_DISPERSION, "fulldispersion": cls.FULL_DISPERSION,
            "nls": cls.NLS, "schrodinger": cls.NLS,
            "improved": cls.IMPROVED_NLS, "improvednls": cls.IMPROVED_NLS,
            "pade": cls.IMPROVED_NLS,
        }
        key = name.lower().replace("-", "").replace("_", "")
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown model {name!r}") from None


_SYMBOL_OF = {
    ModelKind.FULL_DISPERSION: SymbolKind.EXACT,
    ModelKind.NLS: SymbolKind.TAYLOR2,
    ModelKind.IMPROVED_NLS: SymbolKind.PADE32,
}


class NumericalError(FloatingPointError):
    """A non-finite value appeared in the state."""

    def __init__(self, t: float, model: str = ""):
        self.t = t
        super().__init__(f"non-finite state in {model or 'integrator'} at t={t:.6g}")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a single run.

    ``snapshot_interval`` is a time interval that must be an integer number
    of steps; ``None`` records only the initial and final states.
    ``projector`` selects the polarization projector in front of the scalar
    nonlinearity: ``"carrier"`` uses ``pi_1(kbar)``, ``"local"`` uses
    ``pi_1(kbar + eps D)``. ``nonlinearity=False`` skips the nonlinear
    substeps, leaving the exact linear flow.
    """

    eps: float
    dt: float
    t_final: float
    grid: PeriodicGrid
    snapshot_interval: float | None = None
    carrier: KGParams = KGParams()
    projector: Literal["carrier", "local"] = "carrier"
    dealias: bool = False
    nonlinearity: bool = True
    nan_check_every: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.projector not in ("carrier", "local"):
            raise ValueError(f"unknown projector {self.projector!r}")
        _int_ratio(self.t_final, self.dt, "t_final/dt")
        if self.snapshot_interval is not None:
            if not self.snapshot_interval > 0:
                raise ValueError("snapshot_interval must be positive")
            _int_ratio(self.snapshot_interval, self.dt, "snapshot_interval/dt")

    @property
    def n_steps(self) -> int:
        return _int_ratio(self.t_final, self.dt, "t_final/dt")

    @property
    def snapshot_stride(self) -> int:
        if self.snapshot_interval is None:
            return max(self.n_steps, 1)
        return _int_ratio(self.snapshot_interval, self.dt, "snapshot_interval/dt")


def _int_ratio(a: float, b: float, what: str) -> int:
    r = a / b
    n = int(round(r))
    if abs(r - n) > 1e-9 * max(1.0, abs(r)):
        raise ValueError(f"{what} = {r} is not an integer")
    return n


# ---------------------------------------------------------------------------
# States


@dataclass
class KGState:
    """Real fields ``(f, g)`` of the exact system."""

    f: np.ndarray
    g: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.f = np.asarray(self.f)
        self.g = np.asarray(self.g)
        if self.f.shape != self.g.shape:
            raise ValueError("f and g must have the same shape")

    def energy(self, grid: PeriodicGrid) -> float:
        """Discrete ``int f^2 + g^2``."""
        return float(grid.dx * (np.sum(np.abs(self.f) ** 2) + np.sum(np.abs(self.g) ** 2)))


@dataclass
class EnvelopeState:
    """Complex envelope: shape ``(2, N)`` (vector model) or ``(N,)`` (scalar)."""

    U: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=complex)
        if self.U.ndim not in (1, 2) or (self.U.ndim == 2 and self.U.shape[0] != 2):
            raise ValueError(f"envelope must have shape (N,) or (2, N), got {self.U.shape}")

    @property
    def is_scalar(self) -> bool:
        return self.U.ndim == 1

    @property
    def f(self) -> np.ndarray:
        return self.U if self.is_scalar else self.U[0]

    def mass(self, grid: PeriodicGrid) -> float:
        return float(grid.dx * np.sum(np.abs(self.U) ** 2))


# ---------------------------------------------------------------------------
# Steppers


def _check_finite(arr, t, model):
    if not np.isfinite(np.sum(arr)):
        raise NumericalError(t, model)


class ExactKGStepper:
    """Strang step for the real system ``(f, g)``."""

    model = ModelKind.EXACT_KG
    active = True

    def __init__(self, grid: PeriodicGrid, eps: float, dt: float, v: float = 1.0,
                 backend: str | None = None):
        self.grid, self.eps, self.dt, self.v = grid, eps, dt, v
        self.kern = kernels.get_backend(backend)
        self._props = {}

    def propagator(self, t: float):
        """``(c, a12, a21)`` with ``exp(-t M(xi)) = c I - sin(mu t)/mu M``."""
        key = float(t)
        if key not in self._props:
            # the Nyquist coefficient of a real signal is real; dropping its odd
            # part keeps the step an exact rotation there
            xi = self.grid.xi_half.copy()
            xi[-1] = 0.0
            w = self.v / self.eps
            mu = np.sqrt(xi * xi + w * w)
            c = np.cos(mu * t)
            s = np.sin(mu * t) / mu
            a12 = np.ascontiguousarray(-s * (1j * xi - w))
            a21 = np.ascontiguousarray(-s * (1j * xi + w))
            self._props[key] = (np.ascontiguousarray(c), a12, a21)
        return self._props[key]

    # internal representation: a (2, N) real array [f, g]
    def to_internal(self, state: KGState) -> np.ndarray:
        if np.iscomplexobj(state.f) or np.iscomplexobj(state.g):
            if np.max(np.abs(np.imag(state.f))) > 0 or np.max(np.abs(np.imag(state.g))) > 0:
                raise ValueError("exact-system fields must be real")
        return np.array([np.real(state.f), np.real(state.g)], dtype=float)

    def from_internal(self, arr, t) -> KGState:
        return KGState(arr[0].copy(), arr[1].copy(), t)

    def linear(self, arr: np.ndarray, t: float) -> np.ndarray:
        c, a12, a21 = self.propagator(t)
        n = self.grid.n
        F = sfft.rfft(arr[0])
        G = sfft.rfft(arr[1])
        self.kern.kg_linear(F, G, c, a12, a21)
        arr[0] = sfft.irfft(F, n)
        arr[1] = sfft.irfft(G, n)
        return arr

    def nonlinear(self, arr: np.ndarray, t: float) -> np.ndarray:
        if not self.active:
            return arr
        self.kern.kg_rotate(arr[0], arr[1], self.eps * self.v * t)
        return arr

    def step(self, state: KGState, dt: float | None = None) -> KGState:
        dt = self.dt if dt is None else dt
        arr = self.to_internal(state)
        arr = self.linear(arr, dt / 2)
        arr = self.nonlinear(arr, dt)
        arr = self.linear(arr, dt / 2)
        _check_finite(arr, state.t + dt, "exact")
        return self.from_internal(arr, state.t + dt)


class EnvelopeStepper:
    """Strang step for the two-component envelope equation."""

    model = ModelKind.ENVELOPE
    active = True

    def __init__(self, grid: PeriodicGrid, eps: float, dt: float,
                 carrier: KGParams = KGParams(), dealias: bool = False,
                 backend: str | None = None):
        self.grid, self.eps, self.dt, self.carrier = grid, eps, dt, carrier
        self.kern = kernels.get_backend(backend)
        self.cp = carrier_expand(carrier.kbar, carrier.v)
        self.dealias = dealias
        self._props = {}
        self._buf = np.empty((2, grid.n), dtype=complex)

    def propagator(self, t: float):
        key = float(t)
        if key not in self._props:
            eps, v = self.eps, self.carrier.v
            k = self.carrier.kbar + eps * self.grid.xi
            mu = np.sqrt(k * k + v * v)
            c = np.cos(mu * t / eps)
            s = np.sin(mu * t / eps) / mu
            ph = np.exp(1j * self.cp.omega * t / eps)
            self._props[key] = (
                np.ascontiguousarray(ph * c),
                np.ascontiguousarray(-1j * ph * s * (k + 1j * v)),
                np.ascontiguousarray(-1j * ph * s * (k - 1j * v)),
            )
        return self._props[key]

    def to_internal(self, state: EnvelopeState) -> np.ndarray:
        if state.is_scalar:
            raise ValueError("envelope model needs a two-component state")
        return state.U.copy()

    def from_internal(self, arr, t) -> EnvelopeState:
        return EnvelopeState(arr.copy(), t)

    def linear(self, arr, t):
        p11, p12, p21 = self.propagator(t)
        A = sfft.fft(arr[0])
        B = sfft.fft(arr[1])
        arr[0] = sfft.ifft(p11 * A + p12 * B)
        arr[1] = sfft.ifft(p21 * A + p11 * B)
        return arr

    def cubic(self, arr, out):
        self.kern.kg_envelope_cubic(arr[0], arr[1], self.carrier.v, out[0], out[1])
        return out

    def nonlinear(self, arr, t):
        if not self.active:
            return arr
        k1 = self.cubic(arr, self._buf)
        mid = arr + (0.5 * t * self.eps) * k1
        k2 = self.cubic(mid, self._buf)
        arr += (t * self.eps) * k2
        if self.dealias:
            arr[...] = _half_rule(arr)
        return arr

    def step(self, state: EnvelopeState, dt: float | None = None) -> EnvelopeState:
        dt = self.dt if dt is None else dt
        arr = self.to_internal(state)
        arr = self.linear(arr, dt / 2)
        arr = self.nonlinear(arr, dt)
        arr = self.linear(arr, dt / 2)
        _check_finite(arr, state.t + dt, "envelope")
        return self.from_internal(arr, state.t + dt)


def _half_rule(arr):
    F = sfft.fft(arr, axis=-1)
    n = arr.shape[-1]
    F[..., n // 4: n - n // 4 + 1] = 0
    return sfft.ifft(F, axis=-1)


class ScalarStepper:
    """Strang step for the FD, NLS and improved NLS scalar models."""

    active = True

    def __init__(self, model: ModelKind, grid: PeriodicGrid, eps: float, dt: float,
                 carrier: KGParams = KGParams(), projector: str = "carrier",
                 dealias: bool = False, backend: str | None = None):
        if not model.is_scalar:
            raise ValueError(f"{model} is not a scalar model")
        self.model = model
        self.grid, self.eps, self.dt, self.carrier = grid, eps, dt, carrier
        self.projector = projector
        self.dealias = dealias
        self.kern = kernels.get_backend(backend)
        self.cp = carrier_expand(carrier.kbar, carrier.v)
        pade = pade_coefficients(carrier.kbar, carrier.v) if model is ModelKind.IMPROVED_NLS else None
        self.symbol_model = SymbolModel(_SYMBOL_OF[model], self.cp, pade)
        self.m = symbol(self.symbol_model, grid.xi, eps)
        self.gamma = scalar_nonlinear_coefficient(carrier.kbar, carrier.v)
        # the projected cubic term is a pure phase rotation
        assert abs(self.gamma.real) < 1e-12 * abs(self.gamma)
        self.smoothing = None
        if pade is not None:
            self.smoothing = 1.0 / pade_denominator(grid.xi, eps, pade)
        if projector == "local":
            self.q = kg_polarization(carrier.kbar + eps * grid.xi, carrier.v)
        self._props = {}

    @property
    def exact_phase(self) -> bool:
        return self.smoothing is None and self.projector == "carrier"

    def propagator(self, t: float) -> np.ndarray:
        key = float(t)
        if key not in self._props:
            self._props[key] = np.ascontiguousarray(np.exp(-1j * t * self.m))
        return self._props[key]

    def to_internal(self, state: EnvelopeState) -> np.ndarray:
        if not state.is_scalar:
            raise ValueError("scalar model needs a one-component state")
        return state.U.copy()

    def from_internal(self, arr, t) -> EnvelopeState:
        return EnvelopeState(arr.copy(), t)

    def linear(self, arr, t):
        F = sfft.fft(arr)
        self.kern.cmul(F, self.propagator(t))
        arr[...] = sfft.ifft(F)
        return arr

    def rate(self, u):
        """Right-hand side of the nonlinear substep."""
        eps = self.eps
        if self.projector == "carrier":
            nl = (eps * self.gamma) * (np.abs(u) ** 2 * u)
            if self.smoothing is None:
                return nl
            return sfft.ifft(self.smoothing * sfft.fft(nl))
        # pi_1(kbar + eps D) in front of the cubic term, polarization q(D) u
        g = sfft.ifft(self.q * sfft.fft(u))
        out_f = np.empty_like(u)
        out_g = np.empty_like(u)
        self.kern.kg_envelope_cubic(u, g, self.carrier.v, out_f, out_g)
        proj = sfft.fft(out_f) + np.conj(self.q) * sfft.fft(out_g)
        proj *= 0.5 * eps
        if self.smoothing is not None:
            proj *= self.smoothing
        return sfft.ifft(proj)

    def nonlinear(self, arr, t):
        if not self.active:
            return arr
        if self.exact_phase:
            self.kern.phase_rotate(arr, self.eps * self.gamma.imag * t)
        else:
            mid = arr + (0.5 * t) * self.rate(arr)
            arr += t * self.rate(mid)
        if self.dealias:
            arr[...] = _half_rule(arr)
        return arr

    def step(self, state: EnvelopeState, dt: float | None = None) -> EnvelopeState:
        dt = self.dt if dt is None else dt
        arr = self.to_internal(state)
        arr = self.linear(arr, dt / 2)
        arr = self.nonlinear(arr, dt)
        arr = self.linear(arr, dt / 2)
        _check_finite(arr, state.t + dt, self.model.value)
        return self.from_internal(arr, state.t + dt)


def make_stepper(model: ModelKind | str, config: SolverConfig):
    model = ModelKind.parse(model) if isinstance(model, str) else model
    if model is ModelKind.EXACT_KG:
        st = ExactKGStepper(config.grid, config.eps, config.dt, config.carrier.v)
    elif model is ModelKind.ENVELOPE:
        st = EnvelopeStepper(config.grid, config.eps, config.dt, config.carrier,
                             config.dealias)
    else:
        st = ScalarStepper(model, config.grid, config.eps, config.dt, config.carrier,
                           config.projector, config.dealias)
    st.active = config.nonlinearity
    return st


@lru_cache(maxsize=32)
def _cached_stepper(model, grid, eps, dt, carrier, projector="carrier"):
    cfg = SolverConfig(eps, dt, 0.0, grid, carrier=carrier, projector=projector)
    return make_stepper(model, cfg)


def step_exact_kg(state: KGState, dt: float, eps: float, grid: PeriodicGrid,
                  v: float = 1.0) -> KGState:
    return _cached_stepper(ModelKind.EXACT_KG, grid, eps, dt, KGParams(v, 1.0)).step(state)


def step_envelope(state: EnvelopeState, dt: float, eps: float, grid: PeriodicGrid,
                  carrier: KGParams = KGParams()) -> EnvelopeState:
    return _cached_stepper(ModelKind.ENVELOPE, grid, eps, dt, carrier).step(state)


def step_scalar(state: EnvelopeState, dt: float, model: ModelKind | str, eps: float,
                grid: PeriodicGrid, carrier: KGParams = KGParams(),
                projector: str = "carrier") -> EnvelopeState:
    model = ModelKind.parse(model) if isinstance(model, str) else model
    return _cached_stepper(model, grid, eps, dt, carrier, projector).step(state)


# ---------------------------------------------------------------------------
# Carrier reconstruction


def _carrier_resolved(U: np.ndarray, grid: PeriodicGrid, out_grid: PeriodicGrid,
                      eps: float, kbar: float, tol: float = 1e-10) -> bool:
    """Whether the modulated spectrum ``kbar/eps + supp(U)`` fits below Nyquist."""
    c = np.abs(sfft.fft(U, axis=-1)).max(axis=0) if U.ndim == 2 else np.abs(sfft.fft(U))
    if c.max() == 0:
        return True
    xi = grid.xi[c > tol * c.max()]
    shifted = np.abs(kbar / eps + xi)
    return bool(shifted.max() < out_grid.xi_max)


def reconstruct(state: EnvelopeState, t: float, eps: float, grid: PeriodicGrid,
                carrier: KGParams = KGParams(), out_grid: PeriodicGrid | None = None,
                projector: str = "carrier") -> KGState:
    """Real fields ``U exp(i (kbar x - omega t)/eps) + c.c.`` on ``out_grid``.

    Scalar envelopes get their second component from the polarization
    condition (``(1 - i)/sqrt(2) f`` for ``kbar = v = 1``).
    """
    out_grid = grid if out_grid is None else out_grid
    if out_grid.length != grid.length:
        raise ValueError("output grid must cover the same domain")
    if not _carrier_resolved(state.U, grid, out_grid, eps, carrier.kbar):
        warnings.warn(
            f"modulated spectrum around {carrier.kbar / eps:g} exceeds the largest "
            f"wave number {out_grid.xi_max:g} of N={out_grid.n}", RuntimeWarning, stacklevel=2,
        )
    cp = carrier_expand(carrier.kbar, carrier.v)
    U = state.U
    if state.is_scalar:
        F = sfft.fft(U) / grid.n
        if projector == "local":
            q = kg_polarization(carrier.kbar + eps * grid.xi, carrier.v)
            G = q * F
        else:
            G = complex(kg_polarization(carrier.kbar, carrier.v)) * F
        coeffs = np.array([F, G])
    else:
        coeffs = sfft.fft(U, axis=-1) / grid.n
    coeffs = _resample_coeffs(coeffs, out_grid.n)
    env = sfft.ifft(coeffs * out_grid.n, axis=-1)
    phase = np.exp(1j * (carrier.kbar * out_grid.x - cp.omega * t) / eps)
    real = 2.0 * np.real(env * phase)
    return KGState(real[0], real[1], t)


def _reconstruct_f(U1: np.ndarray, t: float, eps: float, grid: PeriodicGrid,
                   out_grid: PeriodicGrid, kbar: float, omega: float) -> np.ndarray:
    """First component only; the hot path of the error metric."""
    if out_grid.n != grid.n:
        F = _resample_coeffs(sfft.fft(U1) / grid.n, out_grid.n)
        U1 = sfft.ifft(F * out_grid.n)
    phase = np.exp(1j * (kbar * out_grid.x - omega * t) / eps)
    return 2.0 * np.real(U1 * phase)


def snapshot_error(f_exact: np.ndarray, f_approx: np.ndarray) -> float:
    """``|f_exact - f_approx|_inf / |f_exact|_inf``; ``nan`` for a zero reference."""
    den = np.max(np.abs(f_exact))
    if den < 1e-12:
        return float("nan")
    return float(np.max(np.abs(f_exact - f_approx)) / den)


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    model: ModelKind
    config: SolverConfig
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    runtime: float = 0.0
    tail: float = 0.0

    @property
    def error_sup(self) -> float:
        vals = [e for e in self.errors if np.isfinite(e)]
        return max(vals) if vals else float("nan")

    def state(self, i: int):
        snap = self.snapshots[i]
        if self.model is ModelKind.EXACT_KG:
            return KGState(snap[0], snap[1], self.times[i])
        return EnvelopeState(snap, self.times[i])

    def f(self, i: int) -> np.ndarray:
        """First physical component on this run's grid (envelope or real field)."""
        snap = self.snapshots[i]
        return snap[0] if snap.ndim == 2 else snap

    def f_physical(self, i: int, out_grid: PeriodicGrid | None = None) -> np.ndarray:
        """Real first component; envelopes are modulated onto the carrier."""
        if self.model is ModelKind.EXACT_KG:
            if out_grid is not None and out_grid.n != self.config.grid.n:
                raise ValueError("exact trajectories are not resampled")
            return self.snapshots[i][0]
        cfg = self.config
        cp = carrier_expand(cfg.carrier.kbar, cfg.carrier.v)
        return _reconstruct_f(self.f(i), self.times[i], cfg.eps, cfg.grid,
                              out_grid or cfg.grid, cfg.carrier.kbar, cp.omega)


def run(model: ModelKind | str, initial, config: SolverConfig,
        reference: Trajectory | None = None,
        callback: Callable[[float, np.ndarray], None] | None = None) -> Trajectory:
    """Advance ``initial`` to ``config.t_final`` recording snapshots.

    With a ``reference`` (an exact-system trajectory sampled at the same
    times) the relative sup-norm error of each snapshot is recorded and
    :attr:`Trajectory.error_sup` holds the running maximum.
    """
    model = ModelKind.parse(model) if isinstance(model, str) else model
    stepper = make_stepper(model, config)
    arr = stepper.to_internal(initial)
    t0 = float(getattr(initial, "t", 0.0))
    traj = Trajectory(model, config)
    n_steps, stride, dt = config.n_steps, config.snapshot_stride, config.dt
    cp = carrier_expand(config.carrier.kbar, config.carrier.v)
    ref_times = None
    if reference is not None:
        ref_times = {round(t / dt): i for i, t in enumerate(reference.times)}

    def record(a, t):
        snap = a.copy()
        traj.times.append(t)
        traj.snapshots.append(snap)
        if callback is not None:
            callback(t, snap)
        if reference is not None:
            key = round(t / dt)
            if key not in ref_times:
                raise ValueError(f"reference has no snapshot at t={t}")
            f_ref = reference.snapshots[ref_times[key]][0]
            if model is ModelKind.EXACT_KG:
                f_app = snap[0]
            else:
                f1 = snap if snap.ndim == 1 else snap[0]
                f_app = _reconstruct_f(f1, t, config.eps, config.grid,
                                       reference.config.grid, config.carrier.kbar,
                                       cp.omega)
            err = snapshot_error(f_ref, f_app)
            if not np.isfinite(err):
                log.warning("reference vanishes at t=%g; snapshot skipped", t)
            traj.errors.append(err)

    start = time.perf_counter()
    record(arr, t0)
    if n_steps:
        arr = stepper.linear(arr, dt / 2)
    check = max(1, config.nan_check_every)
    for n in range(1, n_steps + 1):
        arr = stepper.nonlinear(arr, dt)
        t = t0 + n * dt
        if n % check == 0 or n == n_steps:
            _check_finite(arr, t, model.value)
        if n % stride == 0 or n == n_steps:
            record(stepper.linear(arr.copy(), dt / 2), t)
        if n < n_steps:
            arr = stepper.linear(arr, dt)
    traj.runtime = time.perf_counter() - start
    # the exact grid carries the fast wave near its upper end by design
    traj.tail = 0.0 if model is ModelKind.EXACT_KG else spectral_tail(arr)
    if traj.tail > TAIL_WARN:
        warnings.warn(f"{model.value}: {traj.tail:.1e} of the spectrum sits in the top "
                      f"eighth of the grid; N={config.grid.n} may be too small",
                      RuntimeWarning, stacklevel=2)
    return traj


TAIL_WARN = 1e-6


def spectral_tail(u: np.ndarray) -> float:
    """Share of ``sum |c_m|`` carried by the outer eighth of the wave numbers."""
    c = np.abs(sfft.fft(u, axis=-1))
    n = c.shape[-1]
    total = c.sum()
    if total == 0:
        return 0.0
    outer = c[..., 3 * n // 8: 5 * n // 8 + 1].sum()
    return float(outer / total)
