"""Strang split-step integrator for the time-dependent system.

Sign convention::

    i d_t Psi_j + (-Delta)^alpha Psi_j = g_j(|Psi_1|, |Psi_2|) Psi_j

so a standing wave is ``Psi_j = exp(i lambda_j t) u_j`` with
``(-Delta)^alpha u_j - g_j u_j = lambda_j u_j``.  The linear flow multiplies
``u_hat`` by ``exp(+i |xi|^(2 alpha) t)``; the nonlinear flow is a pointwise
phase rotation ``exp(-i g_j t)`` at frozen moduli.  Both are unitary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .functional import Params, State, energy, mass
from .grid import fft, ifft, inner_product


class EvolutionAborted(RuntimeError):
    """Non-finite values appeared; ``trajectory`` holds the samples up to ``last_index``."""

    def __init__(self, trajectory, last_index, step):
        self.trajectory = trajectory
        self.last_index = last_index
        self.step = step
        super().__init__(f"non-finite state at step {step}; last finite sample index {last_index}")


@dataclass(frozen=True)
class EvolveConfig:
    dt: float = 1e-3
    t_final: float = 5.0
    stride: int = 100
    store_states: bool = False

    def __post_init__(self):
        if not self.dt != 0 or not math.isfinite(self.dt):
            raise ValueError("dt must be finite and nonzero")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if abs(self.dt) > self.t_final:
            raise ValueError("|dt| must not exceed t_final")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if self.stride * abs(self.dt) > self.t_final * (1 + 1e-12):
            raise ValueError("stride * |dt| must not exceed t_final")

    @property
    def steps(self) -> int:
        n = round(self.t_final / abs(self.dt))
        if abs(n * abs(self.dt) - self.t_final) > 1e-9 * self.t_final:
            raise ValueError("t_final must be an integer multiple of |dt|")
        return n


@dataclass
class Trajectory:
    times: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    energy: np.ndarray
    orbit_distance: np.ndarray | None = None
    states: list = field(default_factory=list)
    final: State | None = None

    def __len__(self):
        return len(self.times)

    def mass_drift(self) -> float:
        d1 = np.max(np.abs(self.m1 - self.m1[0])) / self.m1[0] if self.m1[0] > 0 else 0.0
        d2 = np.max(np.abs(self.m2 - self.m2[0])) / self.m2[0] if self.m2[0] > 0 else 0.0
        return float(max(d1, d2))

    def energy_drift(self) -> float:
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), 1e-300))

    def columns(self):
        cols = {"t": self.times, "m1": self.m1, "m2": self.m2, "energy": self.energy}
        if self.orbit_distance is not None:
            cols["orbit_distance"] = self.orbit_distance
        return cols


def linear_phase(grid, alpha: float, dt: float) -> np.ndarray:
    return np.exp(1j * dt * grid.symbol(2.0 * alpha))


def linear_halfstep(state: State, dt: float, alpha: float) -> State:
    """Exact linear flow over ``dt`` (called with half the step by the integrator)."""
    ph = linear_phase(state.grid, alpha, dt)
    return State(state.grid, ifft(ph * fft(state.u1)), ifft(ph * fft(state.u2)))


def nonlinear_step(state: State, dt: float, params: Params) -> State:
    """Exact pointwise solve of ``i d_t Psi_j = g_j Psi_j`` at frozen moduli."""
    p = params
    v1, v2 = _kernels.nonlinear_phase_step(state.u1, state.u2, p.mu1, p.p1, p.mu2, p.p2, p.beta, p.r1, p.r2, dt)
    return State(state.grid, v1, v2)


def _record(buf, t, u1, u2, grid, params, reference, store):
    st = State(grid, u1, u2)
    buf["t"].append(t)
    buf["m1"].append(mass(u1, grid))
    buf["m2"].append(mass(u2, grid))
    buf["energy"].append(energy(st, params))
    if reference is not None:
        from .analysis import orbit_distance

        buf["orbit"].append(orbit_distance(st, reference, params.alpha))
    if store:
        buf["states"].append(st)


def _trajectory(buf, reference, final):
    return Trajectory(
        times=np.asarray(buf["t"]),
        m1=np.asarray(buf["m1"]),
        m2=np.asarray(buf["m2"]),
        energy=np.asarray(buf["energy"]),
        orbit_distance=np.asarray(buf["orbit"]) if reference is not None else None,
        states=buf["states"],
        final=final,
    )


def evolve(state: State, params: Params, config: EvolveConfig, reference: State | None = None) -> Trajectory:
    """Strang composition L(dt/2) N(dt) L(dt/2) with adjacent half steps merged.

    Samples are taken at ``t = 0`` and every ``stride`` steps (and at the
    final step).  A negative ``dt`` integrates backwards.
    """
    grid = state.grid
    a = params.alpha
    p = params
    dt = config.dt
    n = config.steps
    half = linear_phase(grid, a, 0.5 * dt)
    full = half * half
    buf = {"t": [], "m1": [], "m2": [], "energy": [], "orbit": [], "states": []}
    _record(buf, 0.0, state.u1, state.u2, grid, params, reference, config.store_states)
    w1, w2 = fft(state.u1), fft(state.u2)
    w1 *= half
    w2 *= half
    for k in range(1, n + 1):
        u1, u2 = ifft(w1), ifft(w2)
        u1, u2 = _kernels.nonlinear_phase_step(u1, u2, p.mu1, p.p1, p.mu2, p.p2, p.beta, p.r1, p.r2, dt)
        w1, w2 = fft(u1), fft(u2)
        if k % config.stride == 0 or k == n:
            w1 *= half
            w2 *= half
            u1, u2 = ifft(w1), ifft(w2)
            if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
                raise EvolutionAborted(_trajectory(buf, reference, None), len(buf["t"]) - 1, k)
            _record(buf, k * dt, u1, u2, grid, params, reference, config.store_states)
            if k < n:
                w1 *= half
                w2 *= half
        else:
            w1 *= full
            w2 *= full
    return _trajectory(buf, reference, State(grid, u1, u2))


def phase_slopes(trajectory: Trajectory, reference: State):
    """Least-squares slopes of ``arg <u_j, Psi_j(t)>`` (unwrapped) against ``t``.

    Needs stored states.
    """
    if not trajectory.states:
        raise ValueError("trajectory has no stored states")
    grid = reference.grid
    t = trajectory.times
    out = []
    for j in range(2):
        ref = reference.components[j]
        ph = np.unwrap([np.angle(inner_product(ref, s.components[j], grid)) for s in trajectory.states])
        out.append(float(np.polyfit(t, ph, 1)[0]))
    return tuple(out)
