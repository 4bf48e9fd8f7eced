"""Initial data: short and chirped envelopes, polarization, the practical rule."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dispersion import KGParams, carrier_expand, kg_polarization
from .models import EnvelopeState, KGState, ModelKind, reconstruct
from .spectral import Field, PeriodicGrid, derivative, wiener_norm

__all__ = [
    "PROFILES",
    "register_profile",
    "PulseKind",
    "PulseSpec",
    "InitialData",
    "build_short",
    "build_chirped",
    "assemble_exact_ic",
    "practical_rule",
    "PracticalRule",
    "DEFAULT_LENGTH",
    "DEFAULT_X0",
]

DEFAULT_LENGTH = 30 * np.pi
DEFAULT_X0 = 15.0

PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gaussian": lambda y: np.exp(-y * y),
    "sech": lambda y: 1.0 / np.cosh(y),
}


def register_profile(name: str, fun: Callable[[np.ndarray], np.ndarray]) -> None:
    """Add a pointwise envelope profile ``G`` under ``name``."""
    if name in PROFILES:
        raise ValueError(f"profile {name!r} already registered")
    PROFILES[name] = fun


def _profile(G) -> Callable[[np.ndarray], np.ndarray]:
    if callable(G):
        return G
    try:
        return PROFILES[G]
    except KeyError:
        raise ValueError(f"unknown profile {G!r}; known: {sorted(PROFILES)}") from None


def _check_beta(beta):
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")


def _check_tails(values: np.ndarray, tol: float = 1e-12):
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > tol * max(np.max(np.abs(values)), 1e-300):
        warnings.warn(f"pulse does not decay at the boundary ({edge:.2e})",
                      RuntimeWarning, stacklevel=3)


def build_short(grid: PeriodicGrid, beta: float, x0: float = DEFAULT_X0,
                G="gaussian") -> Field:
    """Samples of ``G((x - x0)/beta)``."""
    _check_beta(beta)
    vals = np.asarray(_profile(G)((grid.x - x0) / beta), dtype=complex)
    _check_tails(vals)
    return Field(grid, vals)


def build_chirped(grid: PeriodicGrid, beta: float, x0: float = DEFAULT_X0,
                  G="gaussian") -> Field:
    """Samples of ``G(x - x0) cos(cos((x - x0)/beta)/beta)``."""
    _check_beta(beta)
    y = grid.x - x0
    vals = np.asarray(_profile(G)(y) * np.cos(np.cos(y / beta) / beta), dtype=complex)
    _check_tails(vals)
    if 1.0 / beta**2 > 0.5 * grid.xi_max:
        warnings.warn(f"chirp frequency ~{1 / beta**2:g} is close to the grid limit",
                      RuntimeWarning, stacklevel=2)
    return Field(grid, vals)


class PulseKind(str, enum.Enum):
    SHORT = "short"
    CHIRPED = "chirped"


@dataclass(frozen=True)
class PulseSpec:
    kind: PulseKind = PulseKind.SHORT
    beta: float = 1.0
    x0: float = DEFAULT_X0
    profile: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        _check_beta(self.beta)
        _profile(self.profile)

    def build(self, grid: PeriodicGrid) -> Field:
        fn = build_short if self.kind is PulseKind.SHORT else build_chirped
        return fn(grid, self.beta, self.x0, self.profile)


@dataclass(frozen=True)
class InitialData:
    """A scalar envelope together with its polarized vector form."""

    envelope: Field
    carrier: KGParams = KGParams()

    @property
    def polarization(self) -> complex:
        return complex(kg_polarization(self.carrier.kbar, self.carrier.v))

    def scalar_state(self) -> EnvelopeState:
        return EnvelopeState(self.envelope.physical().values.copy())

    def vector_state(self) -> EnvelopeState:
        f = self.envelope.physical().values
        return EnvelopeState(np.array([f, self.polarization * f]))

    def state_for(self, model) -> EnvelopeState:
        model = ModelKind.parse(model) if isinstance(model, str) else model
        if model is ModelKind.EXACT_KG:
            raise ValueError("use assemble_exact_ic for the exact system")
        return self.vector_state() if model is ModelKind.ENVELOPE else self.scalar_state()


def assemble_exact_ic(envelope: Field, eps: float, carrier: KGParams = KGParams(),
                      grid: PeriodicGrid | None = None) -> KGState:
    """Real fields ``f0 e^{i kbar x/eps} + c.c.`` and the polarized ``g``.

    ``grid`` may be finer than the envelope's; the envelope is then
    interpolated spectrally.
    """
    state = EnvelopeState(envelope.physical().values)
    return reconstruct(state, 0.0, eps, envelope.grid, carrier, out_grid=grid)


@dataclass(frozen=True)
class PracticalRule:
    value: float
    threshold: float

    @property
    def flagged(self) -> bool:
        return self.value >= self.threshold


def practical_rule(envelope: Field, eps: float, threshold: float = 0.3) -> PracticalRule:
    """``eps * |d/dx U0|_W``; flagged at or above ``threshold``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    val = eps * wiener_norm(derivative(envelope, 1))
    return PracticalRule(val, threshold)


def carrier_frequency(carrier: KGParams = KGParams()) -> float:
    return carrier_expand(carrier.kbar, carrier.v).omega
