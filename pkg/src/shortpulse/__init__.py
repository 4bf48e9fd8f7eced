"""Pseudospectral solvers for carrier-envelope pulse models of a toy Klein-Gordon system."""
from .dispersion import KGParams, carrier_expand, pade_coefficients
from .kernels import BACKEND
from .models import ModelKind, SolverConfig, run
from .pulses import PulseSpec, build_chirped, build_short
from .spectral import Field, PeriodicGrid

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Field",
    "KGParams",
    "ModelKind",
    "PeriodicGrid",
    "PulseSpec",
    "SolverConfig",
    "build_chirped",
    "build_short",
    "carrier_expand",
    "pade_coefficients",
    "run",
]
