"""Periodic 1D grids, Fourier-series transforms, multipliers and norms.

Coefficients are normalized as Fourier-series amplitudes,
``f(x) = sum_m c_m exp(i xi_m x)``, so a unit plane wave has a single unit
coefficient and the Wiener norm ``sum |c_m|`` is dilation invariant.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import fft as sfft

__all__ = [
    "PeriodicGrid",
    "Field",
    "forward",
    "inverse",
    "apply_multiplier",
    "derivative",
    "wiener_norm",
    "norms",
    "resample",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
]

Space = Literal["physical", "spectral"]


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Uniform grid ``x_m = m L / N`` on ``[0, L)``."""

    length: float
    n: int

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"grid size must be even, got {self.n}")
        if self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two, got {self.n}")
        if not self.length > 0:
            raise ValueError("domain length must be positive")

    def __eq__(self, other):
        return (
            isinstance(other, PeriodicGrid)
            and self.n == other.n
            and self.length == other.length
        )

    def __hash__(self):
        return hash((self.length, self.n))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @cached_property
    def xi(self) -> np.ndarray:
        """Wave numbers ``2 pi m / L`` in FFT order, ``m`` in ``[-N/2, N/2)``."""
        return 2 * np.pi * sfft.fftfreq(self.n, d=self.dx)

    @cached_property
    def xi_half(self) -> np.ndarray:
        """Non-negative wave numbers of the real-input transform."""
        return 2 * np.pi * sfft.rfftfreq(self.n, d=self.dx)

    @property
    def xi_max(self) -> float:
        return np.pi * self.n / self.length

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.n // 2] = False
        return mask


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples (``physical``) or coefficients (``spectral``) on a grid."""

    grid: PeriodicGrid
    values: np.ndarray
    space: Space = "physical"

    def __post_init__(self):
        if self.space not in ("physical", "spectral"):
            raise ValueError(f"unknown space tag {self.space!r}")
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"field has shape {vals.shape}, grid expects ({self.grid.n},)"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fun) -> "Field":
        return cls(grid, np.asarray(fun(grid.x), dtype=complex))

    def physical(self) -> "Field":
        return self if self.space == "physical" else inverse(self)

    def spectral(self) -> "Field":
        return self if self.space == "spectral" else forward(self)

    def __repr__(self):
        return f"Field(n={self.grid.n}, L={self.grid.length:g}, space={self.space})"


def _require(f: Field, space: Space):
    if f.space != space:
        raise ValueError(f"expected a {space} field, got {f.space}")


def forward(f: Field) -> Field:
    _require(f, "physical")
    return Field(f.grid, sfft.fft(f.values) / f.grid.n, "spectral")


def inverse(F: Field) -> Field:
    _require(F, "spectral")
    return Field(F.grid, sfft.ifft(F.values * F.grid.n), "physical")


def apply_multiplier(F: Field, m) -> Field:
    """Multiply coefficients by ``m(xi_m)``; physical input is transformed and back.

    ``m`` is either an array sampled on ``grid.xi`` or a callable of ``xi``.
    """
    sym = m(F.grid.xi) if callable(m) else m
    sym = np.broadcast_to(np.asarray(sym), (F.grid.n,))
    if not np.all(np.isfinite(sym)):
        raise ValueError("multiplier has non-finite samples")
    if F.space == "spectral":
        return Field(F.grid, F.values * sym, "spectral")
    return inverse(Field(F.grid, forward(F).values * sym, "spectral"))


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral ``d^order/dx^order``; the Nyquist mode is dropped for odd orders."""
    sym = (1j * f.grid.xi) ** order
    if order % 2:
        sym = sym * f.grid.nyquist_mask
    return apply_multiplier(f, sym)


def wiener_norm(f: Field) -> float:
    return float(np.sum(np.abs(f.spectral().values)))


def norms(f: Field) -> tuple[float, float]:
    """Discrete ``(L2, Linf)`` norms, L2 with quadrature weight ``L/N``."""
    vals = f.physical().values
    l2 = float(np.sqrt(f.grid.dx * np.sum(np.abs(vals) ** 2)))
    linf = float(np.max(np.abs(vals))) if vals.size else 0.0
    return l2, linf


def resample(f: Field, n: int) -> Field:
    """Trigonometric interpolation onto a grid with ``n`` points (same ``L``)."""
    F = f.spectral().values
    grid = PeriodicGrid(f.grid.length, n)
    out = _resample_coeffs(F, n)
    res = Field(grid, out, "spectral")
    return res if f.space == "spectral" else inverse(res)


def _resample_coeffs(F: np.ndarray, n: int) -> np.ndarray:
    m = F.shape[-1]
    if n == m:
        return F.copy()
    out = np.zeros(F.shape[:-1] + (n,), dtype=complex)
    h = min(m, n) // 2
    out[..., :h] = F[..., :h]
    out[..., n - h + 1:] = F[..., m - h + 1:]
    # the +-h modes are ambiguous on the smaller grid; split symmetrically
    if n > m:
        out[..., h] = 0.5 * F[..., h]
        out[..., n - h] = 0.5 * F[..., h]
    else:
        out[..., h] = F[..., h] + F[..., m - h]
    return out


# ---------------------------------------------------------------------------
# Snapshot serialization


def write_csv(f: Field, path) -> None:
    vals = f.physical().values
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for x, z in zip(f.grid.x, vals):
            w.writerow([repr(float(x)), repr(float(z.real)), repr(float(z.imag))])


def read_csv(path, length: float | None = None) -> Field:
    """Read a snapshot written by :func:`write_csv`.

    The domain length cannot be recovered from the nodes alone when ``N`` is
    tiny, so it is inferred as ``N * dx`` unless given.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["x", "re", "im"]:
        raise ValueError(f"unexpected header {rows[0]}")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    n = data.shape[0]
    if length is None:
        length = (data[1, 0] - data[0, 0]) * n
    return Field(PeriodicGrid(length, n), data[:, 1] + 1j * data[:, 2])


def write_binary(f: Field, path) -> None:
    """Little-endian ``int64 N`` followed by ``2N`` doubles (re, im interleaved)."""
    vals = np.ascontiguousarray(f.physical().values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", f.grid.n))
        fh.write(vals.view("<f8").tobytes())


def read_binary(path, length: float) -> Field:
    raw = Path(path).read_bytes()
    (n,) = struct.unpack_from("<q", raw, 0)
    body = np.frombuffer(raw, dtype="<f8", offset=8)
    if body.size != 2 * n:
        raise ValueError(f"expected {2 * n} doubles, found {body.size}")
    return Field(PeriodicGrid(length, n), body.view("<c16").astype(complex))
