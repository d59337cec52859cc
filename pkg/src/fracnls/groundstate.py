"""Constrained minimization of the energy on products of L2 spheres.

The optimizer is a projected gradient method: the gradient is projected on
the tangent space of each sphere, a trial point is pulled back to the
sphere by radial rescaling, and Armijo backtracking accepts only
energy-decreasing steps.  Convergence is declared on the Euler-Lagrange
residual ``||G_j - lambda_j u_j||``, not on energy stagnation.

By default the search direction is the tangent projection of the
Sobolev-preconditioned gradient ``(c + |xi|^(2 alpha))^(-1) G``; this is
still a first-order method and leaves the fixed points unchanged.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .fracops import frac_laplacian, sobolev_norm_sq
from .functional import (
    Params,
    State,
    energy,
    energy_terms,
    gaussian_profile,
    gradient,
    lp_norm,
    mass,
    scaled_profile,
)
from .grid import Grid, fft, ifft, inner_product, norm2, tail_fraction
from .rng import generator

log = logging.getLogger(__name__)

INIT_MODES = ("gaussian-bumps", "provided-state", "scalar-product")


@dataclass(frozen=True)
class MinimizeConfig:
    step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    tol: float = 1e-6
    max_iter: int = 5000
    seed: int = 0
    init: str = "gaussian-bumps"
    precondition: bool = True
    shift: float = 1.0
    max_step: float = 64.0
    initial_state: State | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo constant must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "provided-state" and self.initial_state is None:
            raise ValueError("init 'provided-state' needs initial_state")
        if not self.shift > 0:
            raise ValueError("preconditioner shift must be positive")


@dataclass
class Descent:
    fields: list
    energy: float
    multipliers: list
    residuals: list
    sobolev: list
    iterations: int
    trace: np.ndarray
    converged: bool
    message: str


def retract(u, grid: Grid, tau: float) -> np.ndarray:
    """Radial rescale of ``u`` onto the sphere ``int |u|^2 = tau``."""
    m = mass(u, grid)
    if m == 0:
        raise ValueError("cannot retract a zero field onto a sphere")
    return u * math.sqrt(tau / m)


def project_tangent(state: State, grad_state: State, tau1: float, tau2: float) -> State:
    """``G_j - (Re<G_j, u_j>/tau_j) u_j`` for each component."""
    out = []
    for u, g, tau in zip(state, grad_state, (tau1, tau2)):
        if tau <= 0 or mass(u, state.grid) == 0:
            raise ValueError("tangent projection needs a component with positive mass")
        out.append(g - (inner_product(g, u, state.grid).real / tau) * u)
    return State(state.grid, *out)


def _descend(fields, taus, grid, energy_fn, grad_fn, alpha, config: MinimizeConfig) -> Descent:
    u = [retract(f, grid, t) for f, t in zip(fields, taus)]
    E = energy_fn(u)
    trace = [E]
    pre = 1.0 / (config.shift + grid.symbol(2.0 * alpha)) if config.precondition else None
    t = config.step
    converged = False
    message = "max_iter reached"
    it = 0
    while True:
        G = grad_fn(u)
        masses = [norm2(v, grid) for v in u]
        lam = [inner_product(g, v, grid).real / m for g, v, m in zip(G, u, masses)]
        R = [g - l * v for g, l, v in zip(G, lam, u)]
        res = [math.sqrt(norm2(r, grid)) for r in R]
        sob = [math.sqrt(sobolev_norm_sq(v, grid, alpha)) for v in u]
        if all(r <= config.tol * s for r, s in zip(res, sob)):
            converged = True
            message = "residual below tolerance"
            break
        if it >= config.max_iter:
            break
        if pre is None:
            d = [-r for r in R]
        else:
            d = []
            for g, v in zip(G, u):
                pg = ifft(pre * fft(g))
                pv = ifft(pre * fft(v))
                a = inner_product(v, pg, grid).real / inner_product(v, pv, grid).real
                d.append(-(pg - a * pv))
        slope = sum(inner_product(g, dj, grid).real for g, dj in zip(G, d))
        if slope >= 0:
            message = "search direction is not a descent direction"
            break
        t = min(t / config.shrink, config.max_step)
        while True:
            trial = [retract(v + t * dj, grid, tau) for v, dj, tau in zip(u, d, taus)]
            Et = energy_fn(trial)
            if Et <= E + config.armijo * t * slope:
                break
            t *= config.shrink
            if t < 1e-14:
                trial = None
                break
        if trial is None:
            message = "line search failed"
            break
        u, E = trial, Et
        trace.append(E)
        it += 1
    return Descent(u, E, lam, res, sob, it, np.asarray(trace), converged, message)


# ---------------------------------------------------------------------------
# coupled problem


@dataclass
class MinimizerResult:
    state: State
    energy: float
    multipliers: tuple
    residuals: tuple
    sobolev_norms: tuple
    iterations: int
    trace: np.ndarray
    converged: bool
    message: str
    params: Params
    config: MinimizeConfig
    lp_norms: tuple = ()
    tail_fraction: float = 0.0

    @property
    def lambda1(self) -> float:
        return self.multipliers[0]

    @property
    def lambda2(self) -> float:
        return self.multipliers[1]

    def canonical(self) -> State:
        return canonical_form(self.state)

    def metadata(self) -> dict:
        return {
            "energy": self.energy,
            "lambda1": self.multipliers[0],
            "lambda2": self.multipliers[1],
            "residual1": self.residuals[0],
            "residual2": self.residuals[1],
            "iterations": self.iterations,
            "converged": self.converged,
            "tail_fraction": self.tail_fraction,
            "seed": self.config.seed,
            **{f"params.{k}": v for k, v in self.params.to_mapping().items()},
            **{f"minimize.{k}": getattr(self.config, k)
               for k in ("step", "shrink", "armijo", "tol", "max_iter", "init", "precondition", "shift")},
        }


def canonical_form(state: State) -> State:
    """Translate the density peak to the origin node and make each ``sum u_j`` real positive."""
    grid = state.grid
    rho = np.abs(state.u1) ** 2 + np.abs(state.u2) ** 2
    peak = np.unravel_index(int(np.argmax(rho)), rho.shape)
    steps = [grid.n // 2 - int(i) for i in peak]
    out = []
    for u in state:
        v = np.roll(u, steps, axis=tuple(range(grid.dim)))
        s = v.sum()
        out.append(v * (np.conj(s) / abs(s)) if abs(s) > 0 else v)
    return State(grid, *out)


def initial_bumps(params: Params, grid: Grid, seed: int, stream: int = 0) -> State:
    """Two randomly centred Gaussian bumps on the mass spheres (seed-deterministic)."""
    rng = generator(seed, stream)
    out = []
    for tau in (params.tau1, params.tau2):
        center = rng.uniform(-grid.length / 16, grid.length / 16, size=grid.dim)
        width = rng.uniform(1.5, 3.0)
        out.append(gaussian_profile(tau, width, grid.dim, center)(*grid.coords))
    return State(grid, *out)


def _coupled_fns(params: Params, grid: Grid):
    def efn(u):
        return energy(State(grid, u[0], u[1]), params)

    def gfn(u):
        return list(gradient(State(grid, u[0], u[1]), params))

    return efn, gfn


def minimize(params: Params, config: MinimizeConfig, grid: Grid) -> MinimizerResult:
    """Approximate a minimizer of the energy on the product of mass spheres.

    Non-convergence is reported through ``converged=False`` and ``message``.
    """
    params.check_dim(grid.dim)
    if config.init == "provided-state":
        start = config.initial_state
        if start.grid != grid:
            raise ValueError("initial state lives on a different grid")
    elif config.init == "scalar-product":
        sub = replace(config, init="gaussian-bumps")
        s1 = scalar_ground_state(params.alpha, params.mu1, params.p1, params.tau1, sub, grid)
        s2 = scalar_ground_state(params.alpha, params.mu2, params.p2, params.tau2, replace(sub, seed=sub.seed + 1), grid)
        start = State(grid, s1.field, s2.field)
    else:
        start = initial_bumps(params, grid, config.seed)
    efn, gfn = _coupled_fns(params, grid)
    run = _descend(list(start), (params.tau1, params.tau2), grid, efn, gfn, params.alpha, config)
    state = State(grid, *run.fields)
    tail = max(tail_fraction(u, grid) for u in state)
    if tail > 1e-8:
        log.info("boundary tail mass fraction %.3e exceeds 1e-8; consider a larger box", tail)
    return MinimizerResult(
        state=state,
        energy=run.energy,
        multipliers=tuple(run.multipliers),
        residuals=tuple(run.residuals),
        sobolev_norms=tuple(run.sobolev),
        iterations=run.iterations,
        trace=run.trace,
        converged=run.converged,
        message=run.message,
        params=params,
        config=config,
        lp_norms=(lp_norm(state.u1, grid, params.p1), lp_norm(state.u2, grid, params.p2)),
        tail_fraction=tail,
    )


def lagrange_multipliers(state: State, params: Params):
    """``lambda_j = Re<G_j, u_j> / ||u_j||^2`` (equal to ``tau_j`` on the spheres).

    This is the least-squares multiplier, i.e. the minimizer of the
    Euler-Lagrange residual in ``lambda_j``.
    """
    G = gradient(state, params)
    out = []
    for g, u in zip(G, state):
        m = mass(u, state.grid)
        if m == 0:
            raise ValueError("multiplier undefined for a zero-mass component")
        out.append(inner_product(g, u, state.grid).real / m)
    return tuple(out)


def el_residual(state: State, params: Params, lambda1: float, lambda2: float):
    """L2 norms of ``(-Delta)^alpha u_j - lambda_j u_j - mu_j |u_j|^(p_j-2) u_j - d_j F``."""
    G = gradient(state, params)
    return tuple(math.sqrt(norm2(g - l * u, state.grid)) for g, l, u in zip(G, (lambda1, lambda2), state))


# ---------------------------------------------------------------------------
# scalar problem


@dataclass
class ScalarResult:
    field: np.ndarray
    omega: float
    residual: float
    energy: float
    iterations: int
    trace: np.ndarray
    converged: bool
    message: str
    sobolev_norm: float


def scalar_energy(u, grid: Grid, alpha: float, mu: float, p: float) -> float:
    kin = 0.5 * grid.spectral_sum(fft(u), grid.symbol(2.0 * alpha))
    sp = _kernels.power_sums(u, np.zeros_like(u), p, 2.0, 2.0, 2.0)[0]
    return kin - mu / p * grid.cell_volume * sp


def scalar_gradient(u, grid: Grid, alpha: float, mu: float, p: float) -> np.ndarray:
    g, _ = _kernels.nonlinear_coefficients(u, np.zeros_like(u), mu, p, 1.0, 3.0, 0.0, 2.0, 2.0)
    return frac_laplacian(u, grid, alpha) - g * u


def scalar_ground_state(alpha, mu, p, tau, config: MinimizeConfig, grid: Grid, initial=None) -> ScalarResult:
    """Minimize ``1/2 ||D u||^2 - mu/p ||u||_p^p`` on ``int |u|^2 = tau``.

    ``alpha = 1`` is accepted as the classical test mode.  The multiplier
    ``omega`` satisfies ``(-Delta)^alpha Q = omega Q + mu |Q|^(p-2) Q``.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if mu <= 0 or p <= 2 or tau <= 0:
        raise ValueError("scalar problem needs mu > 0, p > 2 and tau > 0")
    if initial is None:
        rng = generator(config.seed, 1)
        center = rng.uniform(-grid.length / 16, grid.length / 16, size=grid.dim)
        initial = gaussian_profile(tau, rng.uniform(1.5, 3.0), grid.dim, center)(*grid.coords)
    run = _descend(
        [np.asarray(initial, dtype=complex)], (tau,), grid,
        lambda u: scalar_energy(u[0], grid, alpha, mu, p),
        lambda u: [scalar_gradient(u[0], grid, alpha, mu, p)],
        alpha, config,
    )
    return ScalarResult(run.fields[0], run.multipliers[0], run.residuals[0], run.energy, run.iterations,
                        run.trace, run.converged, run.message, run.sobolev[0])


# ---------------------------------------------------------------------------
# negativity witness


class WitnessNotFound(RuntimeError):
    def __init__(self, table):
        self.table = table
        super().__init__(f"no negative energy on the scanned ladder ({len(table)} rungs)")


@dataclass(frozen=True)
class Witness:
    scale: float
    energy: float
    table: tuple  # rows (lambda, energy, kinetic, power, coupling)


def negativity_witness(params: Params, grid: Grid, width: float = 2.0, ladder=None) -> Witness:
    """Scan the mass-preserving dilations of a Gaussian pair for ``E < 0``.

    ``ladder`` defaults to ``1, 1/2, 1/4, ...`` down to ``2^-12``.  The
    dilation is re-evaluated analytically on the grid at each rung.
    """
    params.check_dim(grid.dim)
    if ladder is None:
        ladder = [2.0**-k for k in range(13)]
    f1 = gaussian_profile(params.tau1, width, grid.dim)
    f2 = gaussian_profile(params.tau2, width, grid.dim)
    table = []
    for lam in ladder:
        st = State(grid, scaled_profile(f1, grid, lam), scaled_profile(f2, grid, lam))
        terms = energy_terms(st, params)
        row = (lam, terms.total, terms.kinetic1 + terms.kinetic2, terms.power1 + terms.power2, terms.coupling)
        table.append(row)
        if terms.total < 0:
            return Witness(lam, terms.total, tuple(table))
    raise WitnessNotFound(tuple(table))
