"""Energy functional of the coupled system and its first variation.

For a state ``(u1, u2)``::

    E = 1/2 (||D u1||^2 + ||D u2||^2)
        - int (mu1/p1 |u1|^p1 + mu2/p2 |u2|^p2 + beta |u1|^r1 |u2|^r2)

with ``D = (-Delta)^(alpha/2)``.  Power terms of complex fields use the
modulus, the phase being carried by the field itself.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import _kernels
from .fracops import frac_laplacian, gagliardo_seminorm_sq, kinetic_sq
from .grid import Grid, inner_product, norm2


class ParamsError(ValueError):
    pass


PARAM_KEYS = ("alpha", "mu1", "mu2", "p1", "p2", "beta", "r1", "r2", "tau1", "tau2")


@dataclass(frozen=True)
class Params:
    """Model constants.

    Construction checks the dimension-free assumptions; :meth:`check_dim`
    adds the mass-subcritical upper bounds ``2 + 4 alpha / N``.  ``beta = 0``
    is tolerated (with a warning) so decoupled runs can be compared against
    scalar solves.
    """

    alpha: float = 0.75
    mu1: float = 1.0
    mu2: float = 1.0
    p1: float = 2.5
    p2: float = 2.5
    beta: float = 1.0
    r1: float = 1.2
    r2: float = 1.2
    tau1: float = 1.0
    tau2: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ParamsError(f"{f.name} must be finite, got {v}")
        if not 0.0 < self.alpha < 1.0:
            raise ParamsError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name in ("mu1", "mu2", "tau1", "tau2"):
            if getattr(self, name) <= 0:
                raise ParamsError(f"{name} must be positive, got {getattr(self, name)}")
        if self.beta < 0:
            raise ParamsError(f"beta must be positive, got {self.beta}")
        if self.beta == 0:
            warnings.warn("beta = 0 decouples the system (diagnostic mode)", stacklevel=3)
        for name in ("p1", "p2"):
            if getattr(self, name) <= 2:
                raise ParamsError(f"{name} must exceed 2, got {getattr(self, name)}")
        for name in ("r1", "r2"):
            if getattr(self, name) <= 1:
                raise ParamsError(f"{name} must exceed 1, got {getattr(self, name)}")

    @property
    def gamma1(self) -> float:
        return self.mu1 / self.p1

    @property
    def gamma2(self) -> float:
        return self.mu2 / self.p2

    def critical(self, dim: int) -> float:
        return 2.0 + 4.0 * self.alpha / dim

    def check_dim(self, dim: int) -> "Params":
        if dim < 1:
            raise ParamsError(f"dimension must be positive, got {dim}")
        if dim == 1:
            warnings.warn("N = 1 lies outside the N >= 2 setting of the existence theory", stacklevel=2)
        crit = self.critical(dim)
        for name in ("p1", "p2"):
            if getattr(self, name) >= crit:
                raise ParamsError(f"{name} = {getattr(self, name)} must be below 2 + 4 alpha / N = {crit}")
        if self.r1 + self.r2 >= crit:
            raise ParamsError(f"r1 + r2 = {self.r1 + self.r2} must be below 2 + 4 alpha / N = {crit}")
        return self

    def with_masses(self, tau1, tau2) -> "Params":
        return replace(self, tau1=float(tau1), tau2=float(tau2))

    def component(self, which: int):
        """``(mu, p)`` of component 1 or 2."""
        if which == 1:
            return self.mu1, self.p1
        if which == 2:
            return self.mu2, self.p2
        raise ValueError(f"component must be 1 or 2, got {which}")

    def to_mapping(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data) -> "Params":
        unknown = set(data) - set(PARAM_KEYS)
        if unknown:
            raise ParamsError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_text(self) -> str:
        return "".join(f"{k} = {getattr(self, k)!r}\n" for k in PARAM_KEYS)

    @classmethod
    def from_text(cls, text: str) -> "Params":
        from .config import parse_flat

        return cls.from_mapping(parse_flat(text))


@dataclass(frozen=True, eq=False)
class State:
    """Pair of complex fields on a shared grid."""

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        u1 = np.asarray(self.grid.check(self.u1), dtype=complex)
        u2 = np.asarray(self.grid.check(self.u2), dtype=complex)
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
            raise ValueError("state contains non-finite values")
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2)

    @property
    def components(self):
        return (self.u1, self.u2)

    def __iter__(self):
        return iter((self.u1, self.u2))

    def replace(self, u1=None, u2=None) -> "State":
        return State(self.grid, self.u1 if u1 is None else u1, self.u2 if u2 is None else u2)

    def __add__(self, other: "State") -> "State":
        return State(self.grid, self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "State") -> "State":
        return State(self.grid, self.u1 - other.u1, self.u2 - other.u2)

    def scale(self, a, b=None) -> "State":
        return State(self.grid, a * self.u1, (a if b is None else b) * self.u2)

    def masses(self):
        return mass(self.u1, self.grid), mass(self.u2, self.grid)

    def inner(self, other: "State") -> complex:
        """Sum of the component L2 pairings (conjugate-linear in ``self``)."""
        g = self.grid
        return inner_product(self.u1, other.u1, g) + inner_product(self.u2, other.u2, g)


def zero_state(grid: Grid) -> State:
    z = np.zeros(grid.shape, dtype=complex)
    return State(grid, z, z)


def mass(u, grid: Grid) -> float:
    """``int |u|^2``."""
    return norm2(grid.check(u), grid)


def lp_norm(u, grid: Grid, p: float) -> float:
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    return float((grid.cell_volume * np.sum(np.abs(u) ** p)) ** (1.0 / p))


def _power_integrals(state: State, params: Params):
    s1, s2, s12 = _kernels.power_sums(state.u1, state.u2, params.p1, params.p2, params.r1, params.r2)
    dv = state.grid.cell_volume
    return dv * s1, dv * s2, dv * s12


def coupling(state: State, params: Params) -> float:
    """``int beta |u1|^r1 |u2|^r2``."""
    return params.beta * _power_integrals(state, params)[2]


def single_energy(u, grid: Grid, which: int, params: Params) -> float:
    """``e_i(u) = 1/2 ||D u||^2 - mu_i/p_i ||u||_p_i^p_i``."""
    mu, p = params.component(which)
    u = grid.check(u)
    sp = _kernels.power_sums(u, np.zeros_like(u), p, 2.0, 2.0, 2.0)[0]
    return 0.5 * kinetic_sq(u, grid, params.alpha) - mu / p * (grid.cell_volume * sp)


@dataclass(frozen=True)
class EnergyTerms:
    kinetic1: float
    kinetic2: float
    power1: float
    power2: float
    coupling: float

    @property
    def total(self) -> float:
        return self.kinetic1 + self.kinetic2 - self.power1 - self.power2 - self.coupling


def energy_terms(state: State, params: Params) -> EnergyTerms:
    g = state.grid
    k1 = 0.5 * kinetic_sq(state.u1, g, params.alpha)
    k2 = 0.5 * kinetic_sq(state.u2, g, params.alpha)
    s1, s2, s12 = _power_integrals(state, params)
    return EnergyTerms(k1, k2, params.gamma1 * s1, params.gamma2 * s2, params.beta * s12)


def energy(state: State, params: Params) -> float:
    return energy_terms(state, params).total


def gradient(state: State, params: Params) -> State:
    """First variation ``G_j`` so that ``dE(u)[v] = Re <G, v>``.

    ``G_j = (-Delta)^alpha u_j - mu_j |u_j|^(p_j-2) u_j
    - beta r_j |u_j|^(r_j-2) u_j |u_k|^r_k``.
    """
    g1, g2 = _kernels.nonlinear_coefficients(state.u1, state.u2, params.mu1, params.p1,
                                             params.mu2, params.p2, params.beta, params.r1, params.r2)
    a = params.alpha
    grid = state.grid
    return State(grid,
                 frac_laplacian(state.u1, grid, a) - g1 * state.u1,
                 frac_laplacian(state.u2, grid, a) - g2 * state.u2)


# ---------------------------------------------------------------------------
# Gagliardo-Nirenberg


class GNError(ValueError):
    pass


def critical_exponent(dim: int, alpha: float) -> float:
    """``2N/(N - 2 alpha)``; infinite when ``N <= 2 alpha``."""
    return math.inf if dim <= 2 * alpha else 2.0 * dim / (dim - 2.0 * alpha)


def gn_exponent(p: float, q: float, dim: int, alpha: float) -> float:
    """Interpolation weight in ``N/p = lam (N - 2 alpha)/2 + N (1 - lam)/q``."""
    num = dim / p - dim / q
    den = 0.5 * (dim - 2.0 * alpha) - dim / q
    if num == 0:
        return 0.0
    if den == 0:
        raise GNError(f"no interpolation weight for p={p}, q={q}, N={dim}, alpha={alpha}")
    lam = num / den
    if not -1e-12 <= lam <= 1.0 + 1e-12:
        raise GNError(f"interpolation weight {lam:.6g} outside [0, 1] for p={p}, q={q}, N={dim}, alpha={alpha}")
    return min(max(lam, 0.0), 1.0)


def gn_check(u, grid: Grid, p: float, q: float, alpha: float) -> float:
    """``||u||_p / ([u]^lam ||u||_q^(1-lam))`` for the interpolation weight ``lam``."""
    lam = gn_exponent(p, q, grid.dim, alpha)
    semi = gagliardo_seminorm_sq(u, grid, alpha)
    lq = lp_norm(u, grid, q)
    den = (math.sqrt(semi) ** lam if lam > 0 else 1.0) * (lq ** (1.0 - lam) if lam < 1 else 1.0)
    if den <= 0 or not math.isfinite(den) or lq == 0:
        raise GNError("Gagliardo-Nirenberg denominator vanishes (zero or constant field)")
    return lp_norm(u, grid, p) / den


def scaled_profile(profile, grid: Grid, lam: float) -> np.ndarray:
    """Mass-preserving dilation ``lam^(1/2) f(lam^(1/N) x)`` of a closed-form profile.

    ``profile`` is a callable of the coordinate arrays; it is evaluated
    afresh on the grid rather than interpolated.
    """
    s = lam ** (1.0 / grid.dim)
    return math.sqrt(lam) * np.asarray(profile(*[s * c for c in grid.coords]), dtype=complex)


def gaussian_profile(mass_: float, width: float, dim: int, center=None):
    """Closed-form Gaussian with ``int |f|^2 = mass_`` on the whole space."""
    amp = math.sqrt(mass_) * (2.0 / (math.pi * width**2)) ** (dim / 4.0)
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def f(*xs):
        r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
        return amp * np.exp(-r2 / width**2)

    return f
