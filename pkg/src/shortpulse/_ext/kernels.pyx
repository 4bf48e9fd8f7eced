# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused single-pass versions of :mod:`shortpulse._ext.fallback`."""
from libc.math cimport cos, sin, fabs

ctypedef double complex cplx


cdef inline void _cossin(double th, double* c, double* s) noexcept nogil:
    # rotation angles are O(eps dt); short Taylor series are exact to
    # rounding below 0.05 and much cheaper than libm
    cdef double t2
    if fabs(th) < 0.05:
        t2 = th * th
        c[0] = 1.0 - t2 * 0.5 * (1.0 - t2 * (1.0 / 12) * (1.0 - t2 * (1.0 / 30)
               * (1.0 - t2 * (1.0 / 56) * (1.0 - t2 * (1.0 / 90)))))
        s[0] = th * (1.0 - t2 * (1.0 / 6) * (1.0 - t2 * (1.0 / 20) * (1.0 - t2 * (1.0 / 42)
               * (1.0 - t2 * (1.0 / 72) * (1.0 - t2 * (1.0 / 110))))))
    else:
        c[0] = cos(th)
        s[0] = sin(th)


def kg_linear(cplx[::1] F, cplx[::1] G, double[::1] c,
              cplx[::1] a12, cplx[::1] a21):
    cdef Py_ssize_t i, n = F.shape[0]
    cdef cplx f, g
    with nogil:
        for i in range(n):
            f = F[i]
            g = G[i]
            F[i] = c[i] * f + a12[i] * g
            G[i] = c[i] * g + a21[i] * f


def kg_rotate(double[::1] f, double[::1] g, double kappa):
    cdef Py_ssize_t i, n = f.shape[0]
    cdef double a, b, th, ct, st
    with nogil:
        for i in range(n):
            a = f[i]
            b = g[i]
            th = kappa * (a * a + b * b)
            _cossin(th, &ct, &st)
            f[i] = ct * a - st * b
            g[i] = st * a + ct * b


def phase_rotate(cplx[::1] u, double kappa):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double re, im, th, ct, st
    with nogil:
        for i in range(n):
            re = u[i].real
            im = u[i].imag
            th = kappa * (re * re + im * im)
            _cossin(th, &ct, &st)
            u[i] = (ct * re - st * im) + 1j * (st * re + ct * im)


def cmul(cplx[::1] u, cplx[::1] m):
    cdef Py_ssize_t i, n = u.shape[0]
    with nogil:
        for i in range(n):
            u[i] = u[i] * m[i]


def kg_envelope_cubic(cplx[::1] f, cplx[::1] g, double v,
                      cplx[::1] out_f, cplx[::1] out_g):
    cdef Py_ssize_t i, n = f.shape[0]
    cdef cplx a, b, uu
    cdef double n2
    with nogil:
        for i in range(n):
            a = f[i]
            b = g[i]
            n2 = 2.0 * (a.real * a.real + a.imag * a.imag
                        + b.real * b.real + b.imag * b.imag)
            uu = a * a + b * b
            out_f[i] = -v * (n2 * b + uu * b.conjugate())
            out_g[i] = v * (n2 * a + uu * a.conjugate())
