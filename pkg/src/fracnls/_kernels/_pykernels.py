"""Pure numpy implementations of the pointwise kernels.

Every function mirrors the compiled version in ``_ckernels.pyx`` exactly
(same argument order, same zero-modulus convention), operating on
C-contiguous arrays of any shape.
"""
import numpy as np


def _powm(m2, half_exp):
    # |u|^(2*half_exp) from |u|^2, 0 where |u| == 0
    out = np.zeros_like(m2)
    nz = m2 > 0
    out[nz] = np.exp(half_exp * np.log(m2[nz]))
    return out


def nonlinear_coefficients(u1, u2, mu1, p1, mu2, p2, beta, r1, r2):
    """Real multipliers ``g_j`` with ``g_j * u_j`` the nonlinear force on ``u_j``.

    ``g1 = mu1 |u1|^(p1-2) + beta r1 |u1|^(r1-2) |u2|^r2`` and symmetrically;
    every term with a negative exponent is zero where its base vanishes.
    """
    m1 = (u1.real**2 + u1.imag**2).ravel()
    m2 = (u2.real**2 + u2.imag**2).ravel()
    g1 = mu1 * _powm(m1, 0.5 * p1 - 1.0)
    g2 = mu2 * _powm(m2, 0.5 * p2 - 1.0)
    if beta != 0.0:
        g1 += beta * r1 * _powm(m1, 0.5 * r1 - 1.0) * _powm(m2, 0.5 * r2)
        g2 += beta * r2 * _powm(m2, 0.5 * r2 - 1.0) * _powm(m1, 0.5 * r1)
    return g1.reshape(u1.shape), g2.reshape(u2.shape)


def nonlinear_phase_step(u1, u2, mu1, p1, mu2, p2, beta, r1, r2, dt):
    """Return ``(u1 e^{-i g1 dt}, u2 e^{-i g2 dt})`` with ``g`` from the input moduli."""
    g1, g2 = nonlinear_coefficients(u1, u2, mu1, p1, mu2, p2, beta, r1, r2)
    return u1 * np.exp(-1j * dt * g1), u2 * np.exp(-1j * dt * g2)


def power_sums(u1, u2, p1, p2, r1, r2):
    """``(sum |u1|^p1, sum |u2|^p2, sum |u1|^r1 |u2|^r2)`` over all nodes."""
    m1 = (u1.real**2 + u1.imag**2).ravel()
    m2 = (u2.real**2 + u2.imag**2).ravel()
    s1 = float(_powm(m1, 0.5 * p1).sum())
    s2 = float(_powm(m2, 0.5 * p2).sum())
    s12 = float((_powm(m1, 0.5 * r1) * _powm(m2, 0.5 * r2)).sum())
    return s1, s2, s12


def gagliardo_double_sum_1d(u, kernel):
    """``sum_{i != j} |u_i - u_j|^2 kernel[(i - j) mod n]``; ``kernel[0]`` is ignored."""
    u = np.asarray(u).ravel()
    n = u.size
    total = 0.0
    for lag in range(1, n):
        diff = u - np.roll(u, lag)
        total += float((diff.real**2 + diff.imag**2).sum()) * kernel[lag]
    return total
