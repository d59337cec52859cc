# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels.

Fused single-pass versions of the numpy code in ``_pykernels``; moduli are
raised to fractional powers through one ``log`` per node.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log


cdef extern from "math.h" nogil:
    void sincos(double x, double *s, double *c)

cnp.import_array()


cdef inline void _coeffs(double m1, double m2, double mu1, double ep1, double mu2, double ep2,
                         double bc1, double bc2, double er1, double er2, double hr1, double hr2,
                         double *g1, double *g2) noexcept nogil:
    # one log per modulus, exponents of the coupling terms combined
    cdef double l1, l2
    if m1 > 0.0:
        l1 = log(m1)
        g1[0] = mu1 * exp(ep1 * l1)
    else:
        g1[0] = 0.0
    if m2 > 0.0:
        l2 = log(m2)
        g2[0] = mu2 * exp(ep2 * l2)
    else:
        g2[0] = 0.0
    if m1 > 0.0 and m2 > 0.0:
        if bc1 != 0.0:
            g1[0] += bc1 * exp(er1 * l1 + hr2 * l2)
        if bc2 != 0.0:
            g2[0] += bc2 * exp(er2 * l2 + hr1 * l1)


def nonlinear_coefficients(u1, u2, double mu1, double p1, double mu2, double p2,
                           double beta, double r1, double r2):
    cdef double complex[::1] a = np.ascontiguousarray(u1, dtype=np.complex128).ravel()
    cdef double complex[::1] b = np.ascontiguousarray(u2, dtype=np.complex128).ravel()
    cdef Py_ssize_t n = a.shape[0], i
    g1_arr = np.empty(n)
    g2_arr = np.empty(n)
    cdef double[::1] g1 = g1_arr
    cdef double[::1] g2 = g2_arr
    cdef double m1, m2
    cdef double ep1 = 0.5 * p1 - 1.0, ep2 = 0.5 * p2 - 1.0
    cdef double er1 = 0.5 * r1 - 1.0, er2 = 0.5 * r2 - 1.0
    cdef double hr1 = 0.5 * r1, hr2 = 0.5 * r2
    cdef double bc1 = beta * r1, bc2 = beta * r2
    with nogil:
        for i in range(n):
            m1 = a[i].real * a[i].real + a[i].imag * a[i].imag
            m2 = b[i].real * b[i].real + b[i].imag * b[i].imag
            _coeffs(m1, m2, mu1, ep1, mu2, ep2, bc1, bc2, er1, er2, hr1, hr2, &g1[i], &g2[i])
    return g1_arr.reshape(np.shape(u1)), g2_arr.reshape(np.shape(u2))


def nonlinear_phase_step(u1, u2, double mu1, double p1, double mu2, double p2,
                         double beta, double r1, double r2, double dt):
    cdef double complex[::1] a = np.ascontiguousarray(u1, dtype=np.complex128).ravel()
    cdef double complex[::1] b = np.ascontiguousarray(u2, dtype=np.complex128).ravel()
    cdef Py_ssize_t n = a.shape[0], i
    o1_arr = np.empty(n, dtype=np.complex128)
    o2_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o1 = o1_arr
    cdef double complex[::1] o2 = o2_arr
    cdef double m1, m2, g1, g2, c, s
    cdef double ep1 = 0.5 * p1 - 1.0, ep2 = 0.5 * p2 - 1.0
    cdef double er1 = 0.5 * r1 - 1.0, er2 = 0.5 * r2 - 1.0
    cdef double hr1 = 0.5 * r1, hr2 = 0.5 * r2
    cdef double bc1 = beta * r1, bc2 = beta * r2
    with nogil:
        for i in range(n):
            m1 = a[i].real * a[i].real + a[i].imag * a[i].imag
            m2 = b[i].real * b[i].real + b[i].imag * b[i].imag
            _coeffs(m1, m2, mu1, ep1, mu2, ep2, bc1, bc2, er1, er2, hr1, hr2, &g1, &g2)
            sincos(g1 * dt, &s, &c)
            o1[i] = (a[i].real * c + a[i].imag * s) + 1j * (a[i].imag * c - a[i].real * s)
            sincos(g2 * dt, &s, &c)
            o2[i] = (b[i].real * c + b[i].imag * s) + 1j * (b[i].imag * c - b[i].real * s)
    return o1_arr.reshape(np.shape(u1)), o2_arr.reshape(np.shape(u2))


def power_sums(u1, u2, double p1, double p2, double r1, double r2):
    cdef double complex[::1] a = np.ascontiguousarray(u1, dtype=np.complex128).ravel()
    cdef double complex[::1] b = np.ascontiguousarray(u2, dtype=np.complex128).ravel()
    cdef Py_ssize_t n = a.shape[0], i
    cdef double m1, m2, l1, l2, s1 = 0.0, s2 = 0.0, s12 = 0.0
    cdef double hp1 = 0.5 * p1, hp2 = 0.5 * p2, hr1 = 0.5 * r1, hr2 = 0.5 * r2
    with nogil:
        for i in range(n):
            m1 = a[i].real * a[i].real + a[i].imag * a[i].imag
            m2 = b[i].real * b[i].real + b[i].imag * b[i].imag
            if m1 > 0.0:
                l1 = log(m1)
                s1 += exp(hp1 * l1)
            if m2 > 0.0:
                l2 = log(m2)
                s2 += exp(hp2 * l2)
            if m1 > 0.0 and m2 > 0.0:
                s12 += exp(hr1 * l1 + hr2 * l2)
    return s1, s2, s12


def gagliardo_double_sum_1d(u, kernel):
    cdef double complex[::1] a = np.ascontiguousarray(u, dtype=np.complex128).ravel()
    cdef double[::1] k = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], i, j, lag
    cdef double total = 0.0, dr, di
    with nogil:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                lag = i - j if i > j else i - j + n
                dr = a[i].real - a[j].real
                di = a[i].imag - a[j].imag
                total += (dr * dr + di * di) * k[lag]
    return total
