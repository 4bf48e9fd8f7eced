"""Dispersion relations, carrier expansions and rational symbols.

Two example systems are covered:

* the Klein-Gordon system ``u_t + A(d)u + E u / eps = eps |u|^2 E u`` with
  ``n = 1 + d`` components, whose branches are ``+-sqrt(|k|^2 + |v|^2)``;
* the Maxwell-Lorentz system in ``d = 3`` (``n = 12``), with seven branches.

Everything here is a pure function of its arguments. Symbols follow the
convention ``u_t + i m(D) u = ...`` with ``D = -i d/dx``, so a real symbol
``m`` generates a unitary flow.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import mpmath
import numpy as np

__all__ = [
    "AssumptionError",
    "KGParams",
    "CarrierPoint",
    "PadeCoefficients",
    "SymbolKind",
    "SymbolModel",
    "AssumptionReport",
    "kg_omega1",
    "kg_branches",
    "maxwell_omegas",
    "kg_matrices",
    "maxwell_matrices",
    "eigen_oracle",
    "carrier_expand",
    "assumption_checks",
    "pade_coefficients",
    "pade_coefficients_exact",
    "symbol",
    "symbol_mp",
    "m_exact",
    "m_exact_naive",
    "m_taylor2",
    "m_pade",
    "c_schrod",
    "c_improved",
    "c_schrod_mp",
    "c_improved_mp",
    "kg_polarization",
    "kg_projector",
    "scalar_nonlinear_coefficient",
    "fd_derivatives",
]


class AssumptionError(ValueError):
    """Raised when matrices or parameters violate the structural assumptions."""


# ---------------------------------------------------------------------------
# Parameter containers


@dataclass(frozen=True)
class KGParams:
    """Klein-Gordon mass vector (1D: a scalar) and carrier wave number."""

    v: float = 1.0
    kbar: float = 1.0

    def __post_init__(self):
        if self.v == 0:
            raise AssumptionError("Klein-Gordon mass v must be nonzero")
        if self.kbar == 0:
            raise AssumptionError("carrier wave number kbar must be nonzero")


@dataclass(frozen=True)
class CarrierPoint:
    """Branch ``omega_1`` and its derivatives at the carrier wave number."""

    kbar: float
    v: float
    omega: float
    cg: float
    hess: float
    third: float


@dataclass(frozen=True)
class PadeCoefficients:
    """1D coefficients ``b``, ``B``, ``C`` of the rational dispersion model.

    The constructor enforces ``B > 0`` and ``4 - b^2/B > 0``, which makes
    ``1 + s b + s^2 B`` positive for every real ``s``.
    """

    b: float
    B: float
    C: float

    def __post_init__(self):
        if not self.B > 0:
            raise AssumptionError(f"B must be positive, got {self.B}")
        if not self.discriminant > 0:
            raise AssumptionError(
                f"4 - b^2/B must be positive, got {self.discriminant}"
            )

    @property
    def discriminant(self) -> float:
        return 4.0 - self.b * self.b / self.B

    def denominator_min(self) -> float:
        """Minimum over real ``s`` of ``1 + b s + B s^2``."""
        return 1.0 - self.b * self.b / (4.0 * self.B)


class SymbolKind(enum.Enum):
    EXACT = "exact"
    TAYLOR2 = "taylor2"
    PADE32 = "pade32"


@dataclass(frozen=True)
class SymbolModel:
    kind: SymbolKind
    carrier: CarrierPoint
    pade: PadeCoefficients | None = None

    def __post_init__(self):
        if self.kind is SymbolKind.PADE32 and self.pade is None:
            raise ValueError("PADE32 symbol requires Pade coefficients")

    def __call__(self, xi, eps: float):
        return symbol(self, xi, eps)


# ---------------------------------------------------------------------------
# Branches


def kg_omega1(k, v=1.0):
    """Upper Klein-Gordon branch ``sqrt(|k|^2 + |v|^2)``.

    ``k`` may be a scalar, an array of 1D wave numbers, or (with ``v`` a
    vector) an array whose last axis is the wave vector.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.sqrt(k * k + v * v)
    return np.sqrt(np.sum(k * k, axis=-1) + v @ v)


def kg_branches(k, v=1.0):
    """Both Klein-Gordon branches ``(omega_1, omega_2 = -omega_1)``."""
    w = kg_omega1(k, v)
    return w, -w


def maxwell_omegas(k):
    """The seven Maxwell-Lorentz branches at ``|k|``, sorted descending."""
    k = np.abs(np.asarray(k, dtype=float))
    r_plus = np.sqrt(2.0 * (1.0 + k) + k * k)
    r_minus = np.sqrt(2.0 * (1.0 - k) + k * k)
    # w1 >= sqrt(2) and w3 = (r+^2 - r-^2) / (2 (r+ + r-)) without cancellation
    w1 = np.maximum(0.5 * (r_plus + r_minus), np.sqrt(2.0))
    w3 = 2.0 * k / (r_plus + r_minus)
    w2 = np.full_like(w1, np.sqrt(2.0))
    w4 = np.zeros_like(w1)
    return np.stack([w1, w2, w3, w4, -w3, -w2, -w1], axis=-1)


# Multiplicity of each Maxwell branch as an eigenvalue of the 12x12 symbol
# (k != 0): transverse branches are doubly degenerate, the longitudinal
# sqrt(2) mode is simple, and 0 carries the static longitudinal B and P-E.
MAXWELL_MULTIPLICITY = (2, 1, 2, 2, 2, 1, 2)


# ---------------------------------------------------------------------------
# Matrix assembly and the eigenvalue oracle


def kg_matrices(v: float | Sequence[float] = 1.0):
    """``(A_1..A_d, E)`` for the Klein-Gordon example, ``n = 1 + d``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    d = v.size
    n = 1 + d
    A = []
    for j in range(d):
        Aj = np.zeros((n, n))
        Aj[0, 1 + j] = Aj[1 + j, 0] = 1.0
        A.append(Aj)
    E = np.zeros((n, n))
    E[0, 1:] = -v
    E[1:, 0] = v
    return A, E


def _cross_matrices():
    # (k x w)_i = sum_j K(k)_ij w_j with K(k) = sum_l k_l X_l
    X = np.zeros((3, 3, 3))
    for l in range(3):
        e = np.zeros(3)
        e[l] = 1.0
        for j in range(3):
            w = np.zeros(3)
            w[j] = 1.0
            X[l][:, j] = np.cross(e, w)
    return X


def maxwell_matrices():
    """``(A_1, A_2, A_3, E)`` for Maxwell-Lorentz with ``u = (B, E, Q, P)``."""
    X = _cross_matrices()
    I = np.eye(3)
    Z = np.zeros((3, 3))
    A = []
    for l in range(3):
        A.append(np.block([
            [Z, X[l], Z, Z],
            [-X[l], Z, Z, Z],
            [Z, Z, Z, Z],
            [Z, Z, Z, Z],
        ]))
    E = np.block([
        [Z, Z, Z, Z],
        [Z, Z, I, Z],
        [Z, -I, Z, I],
        [Z, Z, -I, Z],
    ])
    return A, E


def _check_structure(A, E, atol=1e-14):
    for j, Aj in enumerate(A):
        if not np.allclose(Aj, Aj.T, atol=atol, rtol=0):
            raise AssumptionError(f"A_{j + 1} is not symmetric")
        if np.iscomplexobj(Aj) and np.any(np.imag(Aj) != 0):
            raise AssumptionError(f"A_{j + 1} is not real")
    if not np.allclose(E, -E.T, atol=atol, rtol=0):
        raise AssumptionError("E is not skew-symmetric")


def eigen_oracle(k, system: Literal["kg", "maxwell"] = "kg", v=1.0,
                 matrices=None):
    """Eigenvalues of ``A(k) + E/i``, sorted descending.

    ``matrices`` overrides the assembled ``(A, E)`` pair; it is checked
    against the symmetric-hyperbolic structure before use.
    """
    if matrices is None:
        if system == "kg":
            matrices = kg_matrices(v)
        elif system == "maxwell":
            matrices = maxwell_matrices()
        else:
            raise ValueError(f"unknown system {system!r}")
    A, E = matrices
    _check_structure(A, E)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.size != len(A):
        raise ValueError(f"wave vector has {k.size} entries, system has d={len(A)}")
    Ak = sum(kj * Aj for kj, Aj in zip(k, A))
    H = Ak - 1j * E
    return np.linalg.eigvalsh(H)[::-1]


# ---------------------------------------------------------------------------
# Carrier point and assumptions


def carrier_expand(kbar: float = 1.0, v: float = 1.0) -> CarrierPoint:
    """Closed-form ``omega``, group velocity, Hessian and third derivative."""
    KGParams(v, kbar)
    w = float(np.hypot(kbar, v))
    return CarrierPoint(
        kbar=float(kbar),
        v=float(v),
        omega=w,
        cg=kbar / w,
        hess=v * v / w**3,
        third=-3.0 * kbar * v * v / w**5,
    )


def fd_derivatives(fun, x: float, h: float = 1e-3):
    """First three derivatives of ``fun`` at ``x`` by 4th-order central stencils."""
    f = [fun(x + j * h) for j in (-3, -2, -1, 0, 1, 2, 3)]
    fm3, fm2, fm1, f0, fp1, fp2, fp3 = f
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    d3 = (fm3 - 8 * fm2 + 13 * fm1 - 13 * fp1 + 8 * fp2 - fp3) / (8 * h**3)
    return d1, d2, d3


@dataclass
class AssumptionReport:
    kbar: float
    v: float
    omega: float
    third_harmonic_gaps: tuple[float, float]
    c0: float
    ok: bool
    violations: list[str] = field(default_factory=list)


def assumption_checks(kbar: float, v: float = 1.0, tol: float = 1e-12,
                      samples: int = 4001) -> AssumptionReport:
    """Check non-resonance with the third harmonic and the spectral gap.

    The gap ``inf_k |omega_bar - omega_2(k)|`` is evaluated on a sampled
    window around the minimum of ``|omega_2|`` and compared with the closed
    form ``omega_bar + |v|``; a violation is reported, never raised.
    """
    if kbar == 0:
        raise AssumptionError("carrier wave number kbar must be nonzero")
    w = float(kg_omega1(kbar, v))
    violations = []
    w1_3, w2_3 = kg_branches(3 * kbar, v)
    gaps = (abs(float(w1_3) - 3 * w), abs(float(w2_3) - 3 * w))
    for j, gap in enumerate(gaps, start=1):
        if gap <= tol:
            violations.append(f"third harmonic resonant with branch omega_{j}")
    kk = np.linspace(-50 * abs(kbar) - 10, 50 * abs(kbar) + 10, samples)
    c0_sampled = float(np.min(np.abs(w + kg_omega1(kk, v))))
    c0 = w + abs(v)
    if abs(c0_sampled - c0) > 1e-9 * max(1.0, c0):
        violations.append(
            f"sampled spectral gap {c0_sampled} disagrees with {c0}"
        )
    if c0 <= tol:
        violations.append("no spectral gap between omega_1 and omega_2")
    return AssumptionReport(
        kbar=float(kbar), v=float(v), omega=w, third_harmonic_gaps=gaps,
        c0=c0, ok=not violations, violations=violations,
    )


# ---------------------------------------------------------------------------
# Pade data


def pade_coefficients(kbar: float = 1.0, v: float = 1.0) -> PadeCoefficients:
    """Coefficients making the rational symbol the [3,2] Pade approximant."""
    KGParams(v, kbar)
    r = v * v + kbar * kbar
    b = 2.0 * kbar / r
    B = (v * v + 4.0 * kbar * kbar) / (4.0 * r * r)
    C = kbar * (3.0 * v * v + 4.0 * kbar * kbar) / (4.0 * r**2.5)
    return PadeCoefficients(b, B, C)


def pade_coefficients_exact(kbar, v):
    """Rational form ``(b, B, C**2)`` for rational ``kbar`` and ``v``.

    ``C`` itself carries a factor ``(v^2 + kbar^2)^(-1/2)``, so its square
    is returned instead; ``C`` has the sign of ``kbar``.
    """
    kbar = Fraction(kbar)
    v = Fraction(v)
    if kbar == 0 or v == 0:
        raise AssumptionError("kbar and v must be nonzero")
    r = v * v + kbar * kbar
    b = 2 * kbar / r
    B = (v * v + 4 * kbar * kbar) / (4 * r * r)
    C2 = (kbar * (3 * v * v + 4 * kbar * kbar)) ** 2 / (16 * r**5)
    if not (B > 0 and 4 - b * b / B > 0):
        raise AssumptionError("Pade constraint set violated")
    return b, B, C2


# ---------------------------------------------------------------------------
# Symbols


def m_exact(xi, eps: float, carrier: CarrierPoint):
    """``(omega_1(kbar + eps xi) - omega_bar) / eps`` without cancellation."""
    xi = np.asarray(xi, dtype=float)
    k = carrier.kbar + eps * xi
    return (2.0 * carrier.kbar * xi + eps * xi * xi) / (
        np.sqrt(carrier.v**2 + k * k) + carrier.omega
    )


def m_exact_naive(xi, eps: float, carrier: CarrierPoint):
    """Direct difference quotient; loses digits as ``eps xi -> 0``."""
    xi = np.asarray(xi, dtype=float)
    return (kg_omega1(carrier.kbar + eps * xi, carrier.v) - carrier.omega) / eps


def m_taylor2(xi, eps: float, carrier: CarrierPoint):
    xi = np.asarray(xi, dtype=float)
    return carrier.cg * xi + 0.5 * eps * carrier.hess * xi * xi


def pade_denominator(xi, eps: float, pade: PadeCoefficients):
    xi = np.asarray(xi, dtype=float)
    s = eps * xi
    return 1.0 + pade.b * s + pade.B * s * s


def m_pade(xi, eps: float, carrier: CarrierPoint, pade: PadeCoefficients):
    """Rational [3,2] symbol.

    The cubic coefficient enters the numerator with a plus sign; with the
    opposite sign the expansion already departs from ``m_exact`` at third
    order and the rational model is worse than ``m_taylor2``.
    """
    xi = np.asarray(xi, dtype=float)
    s = eps * xi
    num = xi * (
        carrier.cg
        + (0.5 * carrier.hess + carrier.cg * pade.b) * s
        + pade.C * s * s
    )
    return num / pade_denominator(xi, eps, pade)


def symbol(model: SymbolModel, xi, eps: float):
    """Evaluate the real symbol ``m(xi)`` of a scalar envelope model."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if model.kind is SymbolKind.EXACT:
        return m_exact(xi, eps, model.carrier)
    if model.kind is SymbolKind.TAYLOR2:
        return m_taylor2(xi, eps, model.carrier)
    return m_pade(xi, eps, model.carrier, model.pade)


def c_schrod(xi, eps: float, carrier: CarrierPoint):
    """Third-order remainder of the quadratic dispersion, scaled by ``1+|xi|^3``."""
    xi = np.asarray(xi, dtype=float)
    diff = m_exact(xi, eps, carrier) - m_taylor2(xi, eps, carrier)
    return diff / (eps * eps * (1.0 + np.abs(xi) ** 3))


def c_improved(xi, eps: float, carrier: CarrierPoint, pade: PadeCoefficients):
    xi = np.asarray(xi, dtype=float)
    diff = m_exact(xi, eps, carrier) - m_pade(xi, eps, carrier, pade)
    return diff / (eps * eps * (1.0 + np.abs(xi) ** 3))


# High-precision evaluation: the Pade remainder is O(eps^5 xi^6), far below
# double precision for small eps*xi.


def symbol_mp(model: SymbolModel, xi, eps, dps: int = 60):
    """``symbol`` evaluated in ``mpmath`` with ``dps`` decimal digits.

    The exact branch is computed as the plain difference quotient, which at
    this precision is an independent check of the rationalized form.
    """
    with mpmath.workdps(dps):
        c = model.carrier
        xi = mpmath.mpf(xi)
        eps = mpmath.mpf(eps)
        kbar, v = mpmath.mpf(c.kbar), mpmath.mpf(c.v)
        wbar = mpmath.sqrt(kbar**2 + v**2)
        if model.kind is SymbolKind.EXACT:
            out = (mpmath.sqrt((kbar + eps * xi) ** 2 + v**2) - wbar) / eps
        else:
            cg = kbar / wbar
            hess = v**2 / wbar**3
            if model.kind is SymbolKind.TAYLOR2:
                out = cg * xi + eps * hess * xi**2 / 2
            else:
                r = v**2 + kbar**2
                b = 2 * kbar / r
                B = (v**2 + 4 * kbar**2) / (4 * r**2)
                C = kbar * (3 * v**2 + 4 * kbar**2) / (4 * r ** mpmath.mpf(2.5))
                s = eps * xi
                num = xi * (cg + (hess / 2 + cg * b) * s + C * s**2)
                out = num / (1 + b * s + B * s**2)
        return +out


def c_schrod_mp(xi, eps, carrier: CarrierPoint, dps: int = 60):
    ex = symbol_mp(SymbolModel(SymbolKind.EXACT, carrier), xi, eps, dps)
    t2 = symbol_mp(SymbolModel(SymbolKind.TAYLOR2, carrier), xi, eps, dps)
    with mpmath.workdps(dps):
        return (ex - t2) / (mpmath.mpf(eps) ** 2 * (1 + abs(mpmath.mpf(xi)) ** 3))


def c_improved_mp(xi, eps, carrier: CarrierPoint, pade: PadeCoefficients,
                  dps: int = 60):
    ex = symbol_mp(SymbolModel(SymbolKind.EXACT, carrier), xi, eps, dps)
    pd = symbol_mp(SymbolModel(SymbolKind.PADE32, carrier, pade), xi, eps, dps)
    with mpmath.workdps(dps):
        return (ex - pd) / (mpmath.mpf(eps) ** 2 * (1 + abs(mpmath.mpf(xi)) ** 3))


# ---------------------------------------------------------------------------
# Polarization and the scalar nonlinearity (Klein-Gordon, d = 1)


def kg_polarization(k, v=1.0):
    """Second component ``q(k)`` of the ``omega_1`` eigenvector ``(1, q)``."""
    k = np.asarray(k, dtype=float)
    return (k - 1j * v) / kg_omega1(k, v)


def kg_projector(k, v=1.0):
    """Eigenprojector ``pi_1(k)`` onto the ``omega_1`` eigenspace (2x2)."""
    q = complex(kg_polarization(k, v))
    e = np.array([1.0, q]) / np.sqrt(2.0)
    return np.outer(e, e.conj())


def kg_cubic(u1, u2, u3, v=1.0):
    """Trilinear ``T(u1, u2, u3) = (u1 . u2) E u3`` (non-hermitian dot)."""
    dot = u1[0] * u2[0] + u1[1] * u2[1]
    return np.array([-v * dot * u3[1], v * dot * u3[0]])


def kg_envelope_nonlinearity(U, v=1.0):
    """``T(conj U, U, U) + T(U, conj U, U) + T(U, U, conj U)``."""
    Ub = np.conj(U)
    return kg_cubic(Ub, U, U, v) + kg_cubic(U, Ub, U, v) + kg_cubic(U, U, Ub, v)


def scalar_nonlinear_coefficient(kbar: float = 1.0, v: float = 1.0) -> complex:
    """``gamma`` with ``[pi_1(kbar) T(f e)]_1 = gamma |f|^2 f`` for ``e = (1, q)``.

    For ``kbar = v = 1`` this is ``4i/sqrt(2)``.
    """
    q = complex(kg_polarization(kbar, v))
    U = np.array([1.0 + 0j, q])
    w = kg_envelope_nonlinearity(U, v)
    return complex((kg_projector(kbar, v) @ w)[0])
