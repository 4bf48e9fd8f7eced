"""Pure numpy versions of the compiled kernels (same signatures, in place)."""
import numpy as np


def kg_linear(F, G, c, a12, a21):
    """``(F, G) <- (c F + a12 G, c G + a21 F)`` mode by mode."""
    Fn = c * F + a12 * G
    G *= c
    G += a21 * F
    F[...] = Fn


def kg_rotate(f, g, kappa):
    """Rotate ``(f, g)`` by the angle ``kappa (f^2 + g^2)`` pointwise."""
    th = kappa * (f * f + g * g)
    ct = np.cos(th)
    st = np.sin(th)
    fn = ct * f - st * g
    g *= ct
    g += st * f
    f[...] = fn


def phase_rotate(u, kappa):
    """``u <- u exp(i kappa |u|^2)``."""
    u *= np.exp(1j * kappa * (u.real * u.real + u.imag * u.imag))


def cmul(u, m):
    """``u <- u * m``."""
    u *= m


def kg_envelope_cubic(f, g, v, out_f, out_g):
    """``T(U*,U,U) + T(U,U*,U) + T(U,U,U*)`` for ``U = (f, g)``.

    With ``T(a, b, c) = (a . b) E c`` and ``E = [[0, -v], [v, 0]]`` this is
    ``2 |U|^2 E U + (U . U) E conj(U)``.
    """
    n2 = 2.0 * (f.real * f.real + f.imag * f.imag + g.real * g.real + g.imag * g.imag)
    uu = f * f + g * g
    out_f[...] = -v * (n2 * g + uu * np.conj(g))
    out_g[...] = v * (n2 * f + uu * np.conj(f))
