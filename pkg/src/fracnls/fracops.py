"""Fractional Laplacian, Sobolev-type norms and quadrature cross-checks.

Spectral operators act as Fourier multipliers on the periodic grid:
``frac_laplacian`` applies ``|xi|^(2 alpha)`` and ``half_frac`` applies
``|xi|^alpha``.  The slow routines ``normalization_constant``,
``singular_integral_oracle`` and ``gagliardo_double_sum`` evaluate the same
quantities from their real-space integral definitions and exist only to
validate the spectral path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as spi
from scipy import special

from . import _kernels
from .grid import Grid, fft, ifft


class QuadratureError(RuntimeError):
    pass


def _check_alpha(alpha, allow_one=True):
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        raise ValueError(f"fractional order must lie in (0, 1{']' if allow_one else ')'}, got {alpha}")


def apply_symbol(u, grid: Grid, power: float) -> np.ndarray:
    return ifft(grid.symbol(power) * fft(grid.check(u)))


def frac_laplacian(u, grid: Grid, alpha: float) -> np.ndarray:
    """``(-Delta)^alpha u`` through the multiplier ``|xi|^(2 alpha)``.

    ``alpha = 1`` is accepted as the classical test mode.
    """
    _check_alpha(alpha)
    return apply_symbol(u, grid, 2.0 * alpha)


def half_frac(u, grid: Grid, alpha: float) -> np.ndarray:
    """``(-Delta)^(alpha/2) u`` (multiplier ``|xi|^alpha``)."""
    _check_alpha(alpha)
    return apply_symbol(u, grid, alpha)


def kinetic_sq(u, grid: Grid, alpha: float) -> float:
    """``||(-Delta)^(alpha/2) u||^2`` evaluated in wavenumber space."""
    return grid.spectral_sum(fft(grid.check(u)), grid.symbol(2.0 * alpha))


def sobolev_norm_sq(u, grid: Grid, alpha: float) -> float:
    """``sum (1 + |xi|^2)^alpha |u_hat|^2`` normalized to an integral."""
    return grid.spectral_sum(fft(grid.check(u)), (1.0 + grid.k2) ** alpha)


# ---------------------------------------------------------------------------
# normalization constant


@dataclass(frozen=True)
class NormalizationConstant:
    """Both evaluations of the principal-value constant.

    ``value`` is the integral form and is what the rest of the package
    uses; ``gamma_form`` is the closed Gamma-function expression
    ``Gamma((2a+N)/2)/|Gamma(-a)| 2^(2a-1) pi^(-N/2)`` kept for reporting.
    """

    dim: int
    alpha: float
    value: float
    abserr: float
    gamma_form: float

    @property
    def ratio(self) -> float:
        return self.value / self.gamma_form

    @property
    def discrepancy(self) -> bool:
        return abs(self.ratio - 1.0) > 1e-6


def _quad(f, a, b, **kw):
    val, err, *rest = spi.quad(f, a, b, epsabs=1e-10, epsrel=1e-12, limit=500, full_output=1, **kw)
    if len(rest) > 1 and rest[0] != 0 and err > 1e-8:
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: {rest[1]}")
    return val, err


def _oscillatory_integral(alpha):
    """``int_R (1 - cos t) |t|^(-1-2 alpha) dt`` and its error estimate."""
    s = 1.0 + 2.0 * alpha
    near, e1 = _quad(lambda t: (2.0 * math.sin(0.5 * t) ** 2) * t ** (-s) if t > 0 else 0.0, 0.0, 1.0)
    tail_cos, e2 = _quad(lambda t: t ** (-s), 1.0, np.inf, weight="cos", wvar=1.0)
    return 2.0 * (near + 1.0 / (2.0 * alpha) - tail_cos), 2.0 * (e1 + e2)


def _transverse_integral(dim, alpha):
    """``int_{R^(N-1)} (1 + |y|^2)^(-(N+2 alpha)/2) dy``."""
    if dim == 1:
        return 1.0, 0.0
    e = 0.5 * (dim + 2.0 * alpha)
    sphere = {2: 2.0, 3: 2.0 * math.pi}[dim]
    val, err = _quad(lambda r: r ** (dim - 2) * (1.0 + r * r) ** (-e), 0.0, np.inf)
    return sphere * val, sphere * err


def _periodic_kernel(z, length, s):
    """``sum_k |z + k L|^(-s)`` for ``0 < z < L`` via Hurwitz zeta."""
    q = z / length
    return length ** (-s) * (special.zeta(s, q) + special.zeta(s, 1.0 - q))


def gamma_form_constant(dim: int, alpha: float) -> float:
    return (
        math.gamma(0.5 * (2.0 * alpha + dim))
        / abs(math.gamma(-alpha))
        * 2.0 ** (2.0 * alpha - 1.0)
        * math.pi ** (-0.5 * dim)
    )


@lru_cache(maxsize=None)
def normalization_constant(dim: int, alpha: float) -> NormalizationConstant:
    """Principal-value constant from ``(int (1 - cos x_1)/|x|^(N+2a) dx)^(-1)``.

    The N-dimensional integral factorizes into a 1-D oscillatory integral
    along ``x_1`` and a transverse radial integral; both are evaluated by
    adaptive quadrature.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    _check_alpha(alpha, allow_one=False)
    a, ea = _oscillatory_integral(alpha)
    t, et = _transverse_integral(dim, alpha)
    integral = a * t
    value = 1.0 / integral
    abserr = value * (ea / a + et / t)
    return NormalizationConstant(dim, alpha, value, abserr, gamma_form_constant(dim, alpha))


def integral_constant(dim: int, alpha: float) -> float:
    return normalization_constant(int(dim), float(alpha)).value


def gagliardo_seminorm_sq(u, grid: Grid, alpha: float) -> float:
    """Gagliardo seminorm squared via ``(2/C) ||(-Delta)^(alpha/2) u||^2``."""
    _check_alpha(alpha, allow_one=False)
    return 2.0 / integral_constant(grid.dim, alpha) * kinetic_sq(u, grid, alpha)


def gagliardo_double_sum(u, grid: Grid, alpha: float) -> float:
    """Brute-force O(M^2) node-pair sum for the seminorm on the 1-D torus.

    ``h^2 sum_{x != y} |u(x)-u(y)|^2 K(d(x, y))`` with ``d`` the minimum-image
    distance and ``K`` the periodized kernel ``sum_k |d + kL|^(-1-2 alpha)``
    (the bare ``d^(-1-2 alpha)`` would drop the kernel mass beyond ``L/2``).
    The diagonal is skipped, which costs ``O((|xi| h)^(2-2 alpha))``.
    """
    if grid.dim != 1:
        raise ValueError("the double-sum oracle is one-dimensional")
    _check_alpha(alpha, allow_one=False)
    h = grid.spacing
    lags = np.arange(grid.n) * h
    kernel = np.zeros(grid.n)
    kernel[1:] = _periodic_kernel(lags[1:], grid.length, 1.0 + 2.0 * alpha)
    return h * h * float(_kernels.gagliardo_double_sum_1d(grid.check(u), kernel))


# ---------------------------------------------------------------------------
# principal-value oracle


@dataclass(frozen=True)
class OracleValue:
    value: complex
    error: float
    levels: tuple


def _gauss_panels(edges, order=20):
    xg, wg = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * xg + 0.5 * (a + b)
    weights = 0.5 * (b - a) * wg
    return nodes.ravel(), weights.ravel()


def singular_integral_oracle(u, grid: Grid, alpha: float, point, eps0=None, levels=5,
                             fail_rtol=1e-5, mode_cutoff=1e-14):
    """``C P.V. int (u(x) - u(y)) / |x-y|^(1+2 alpha) dy`` at a grid node (1-D).

    The field is read as its trigonometric interpolant, so the integral runs
    over the periodic extension on the whole line; periodic images are
    folded into a Hurwitz-zeta kernel on ``(0, L/2]``.  The symmetric
    integrand ``2u(x) - u(x+z) - u(x-z)`` is integrated outside a ball of
    radius ``eps`` with composite Gauss-Legendre panels, and the missing
    ball is removed by Richardson extrapolation over a halving sequence of
    ``eps`` using the known powers ``2-2a, 3, 4-2a, 5``.

    Modes below ``mode_cutoff`` times the largest coefficient are dropped.
    Returns an :class:`OracleValue` whose error estimate is the spread
    between the two highest extrapolation orders.
    """
    if grid.dim != 1:
        raise ValueError("the principal-value oracle is one-dimensional")
    _check_alpha(alpha, allow_one=False)
    u = grid.check(u)
    n, L = grid.n, grid.length
    x0 = grid.x[int(point)]
    k = grid.wavenumbers
    # interpolant coefficients around x0; the symmetric difference treats
    # +xi and -xi alike, so the Nyquist mode needs no splitting
    c = fft(u) / n * np.exp(1j * k * (x0 - grid.x[0]))
    keep = np.abs(c) > mode_cutoff * max(np.abs(c).max(), 1e-300)
    keep[0] = False
    ks, cs = k[keep], c[keep]
    C = integral_constant(1, alpha)
    if not ks.size:
        return OracleValue(0j, 0.0, (0j,) * levels)
    kmax = np.abs(ks).max()
    s = 1.0 + 2.0 * alpha
    half = 0.5 * L
    if eps0 is None:
        eps0 = min(0.25, 0.5 / kmax)

    def panel_sums(edges):
        z, w = _gauss_panels(edges)
        num = np.empty(z.size, dtype=complex)
        for lo in range(0, z.size, 2048):
            zz = z[lo:lo + 2048]
            num[lo:lo + 2048] = 4.0 * (np.sin(0.5 * np.outer(zz, ks)) ** 2) @ cs
        return (w * _periodic_kernel(z, L, s) * num).reshape(edges.size - 1, -1).sum(axis=1)

    # outer part [eps0, L/2]: geometric panels up to ~1/kmax, then uniform
    width = min(0.5, math.pi / (2.0 * kmax))
    geo = eps0 * 2.0 ** np.arange(1, 64)
    geo = geo[geo < min(4.0 * width, half)]
    start = geo[-1] if geo.size else eps0
    uni = np.linspace(start, half, max(2, int(math.ceil((half - start) / width)) + 1))
    outer = panel_sums(np.unique(np.concatenate([[eps0], geo, uni]))).sum()
    # inner shells [eps_j, eps_{j-1}] for the halving sequence
    eps = eps0 * 0.5 ** np.arange(levels)
    inner = panel_sums(eps[::-1])[::-1]
    vals = outer + np.concatenate([[0.0], np.cumsum(inner)])

    powers = []
    for p in (2.0 - 2.0 * alpha, 3.0, 4.0 - 2.0 * alpha, 5.0):
        if all(abs(p - q) > 1e-9 for q in powers):
            powers.append(p)

    def extrapolate(npow):
        A = np.ones((levels, npow + 1))
        for j, p in enumerate(powers[:npow]):
            A[:, j + 1] = eps**p
        sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
        return sol[0]

    m = min(len(powers), levels - 1)
    best = extrapolate(m)
    err = C * abs(best - extrapolate(m - 1))
    value = C * best
    scale = max(abs(value), C * float(np.abs(cs).sum()) * kmax ** (2.0 * alpha))
    if not np.isfinite(value) or err > fail_rtol * scale:
        raise QuadratureError(f"eps-extrapolation did not settle (estimate {err:.3e})")
    return OracleValue(complex(value), float(err), tuple(C * vals))
