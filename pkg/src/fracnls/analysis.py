"""Diagnostics on states and families of states.

Concentration functions, a finite-family compact/vanishing/dichotomy
classifier, the orbit distance modulo translations and phases, the strict
subadditivity scan over mass pairs, and the orbital stability experiment.
Suprema over translations are taken over grid translates only, so reported
values are lower bounds of the continuum suprema.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import EvolutionAborted, EvolveConfig, evolve
from .functional import Params, State, lp_norm, mass
from .grid import Grid, fft, ifft
from .groundstate import MinimizeConfig, MinimizerResult, minimize, retract, scalar_ground_state
from .parallel import parallel_map
from .rng import generator, stream_id

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# concentration


def _ball_window(grid: Grid, radius: float) -> np.ndarray:
    # indicator of the min-image ball centred at node 0
    d2 = np.zeros(grid.shape)
    for ax in range(grid.dim):
        k = np.arange(grid.n)
        d = np.minimum(k, grid.n - k) * grid.spacing
        sh = [1] * grid.dim
        sh[ax] = grid.n
        d2 = d2 + (d**2).reshape(sh)
    return (d2 <= radius**2 * (1 + 1e-12)).astype(float)


def concentration_function(state: State, radii):
    """``[(t, Q(t))]`` with ``Q(t) = max_y int_{B_t(y)} (|u1|^2 + |u2|^2)`` over grid translates.

    Radii are processed in ascending order; a running maximum removes
    roundoff-level non-monotonicity.
    """
    grid = state.grid
    radii = sorted(float(t) for t in radii)
    if not radii:
        return []
    if radii[0] <= 0:
        raise ValueError("radii must be positive")
    if radii[-1] > grid.length / 2:
        raise ValueError(f"radius {radii[-1]} exceeds L/2 = {grid.length / 2}; the window would wrap")
    rho = np.abs(state.u1) ** 2 + np.abs(state.u2) ** 2
    rho_h = fft(rho)
    out = []
    best = 0.0
    for t in radii:
        conv = ifft(rho_h * fft(_ball_window(grid, t))).real
        best = max(best, float(conv.max()) * grid.cell_volume)
        out.append((t, best))
    return out


@dataclass(frozen=True)
class Thresholds:
    eps_c: float = 0.01
    eps_v_fraction: float = 0.05
    compact_radius: float | None = None  # default L/4


@dataclass(frozen=True)
class Classification:
    label: str
    total_mass: float
    compact_q: float
    window_q: float
    window_series: tuple


def classify_sequence(states, window_radius: float, thresholds: Thresholds = Thresholds()) -> Classification:
    """Label a finite family standing in for a minimizing sequence.

    compact: the last member has ``Q(R_c) >= (1 - eps_c) * total`` where
    ``R_c`` is ``thresholds.compact_radius``; vanishing: the last member has
    ``Q(window_radius) <= eps_v_fraction * total``; dichotomy otherwise.
    """
    states = list(states)
    if not states:
        raise ValueError("classify_sequence needs at least one state")
    last = states[-1]
    grid = last.grid
    rc = thresholds.compact_radius if thresholds.compact_radius is not None else grid.length / 4
    total = sum(last.masses())
    series = tuple(concentration_function(s, [window_radius])[0][1] for s in states)
    qc = concentration_function(last, [rc])[0][1]
    if qc >= (1.0 - thresholds.eps_c) * total:
        label = "compact"
    elif series[-1] <= thresholds.eps_v_fraction * total:
        label = "vanishing"
    else:
        label = "dichotomy"
    return Classification(label, total, qc, series[-1], series)


def vanishing_norms(state: State, q_list):
    """``{q: (||u1||_q, ||u2||_q)}``."""
    out = {}
    for q in q_list:
        if q < 1:
            raise ValueError(f"q must be at least 1, got {q}")
        out[q] = (lp_norm(state.u1, state.grid, q), lp_norm(state.u2, state.grid, q))
    return out


# ---------------------------------------------------------------------------
# orbit distance


def _as_state(ref):
    return ref.state if isinstance(ref, MinimizerResult) else ref


def orbit_distance(state: State, reference, alpha: float | None = None) -> float:
    """Distance from ``state`` to the translation/phase orbit of ``reference`` in H^alpha x H^alpha.

    All grid shifts are scanned at once through one correlation per
    component; the optimal phase for each shift is the argument of the
    H^alpha pairing.  The distance is then re-evaluated directly at the
    optimal shift and phases to avoid cancellation in the expanded square.
    """
    if alpha is None:
        if not isinstance(reference, MinimizerResult):
            raise ValueError("alpha is required when the reference is a bare State")
        alpha = reference.params.alpha
    ref = _as_state(reference)
    grid = state.grid
    if ref.grid != grid:
        raise ValueError("state and reference live on different grids")
    weight = (1.0 + grid.k2) ** alpha
    scale = grid.spectral_weight
    corr = np.zeros(grid.shape)
    fields = []
    for u, v in zip(state, ref):
        uh, vh = fft(u), fft(v)
        # proportional to <u, v(. - s)>_H
        c = fft(weight * np.conj(uh) * vh)
        fields.append((uh, vh, c))
        corr += np.abs(c)
    s = np.unravel_index(int(np.argmax(corr)), grid.shape)
    total = 0.0
    for uh, vh, c in fields:
        cs = c[s]
        phase = np.conj(cs) / abs(cs) if abs(cs) > 0 else 1.0
        # shift v by s in Fourier space: v(x - s) <-> exp(-i xi.s h) v_hat
        shifted = vh * phase
        for ax, k in enumerate(s):
            sh = [1] * grid.dim
            sh[ax] = grid.n
            shifted = shifted * np.exp(-2j * np.pi * np.arange(grid.n) * k / grid.n).reshape(sh)
        d = uh - shifted
        total += float(np.sum(weight * np.abs(d) ** 2)) * scale
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# subadditivity


def _pair(m):
    a, b = m
    return (float(a), float(b))


def _pair_energy(task):
    masses, params, config, grid = task
    t1, t2 = masses
    if t1 == 0 and t2 == 0:
        return {"masses": masses, "energy": 0.0, "converged": True, "solver": "none", "iterations": 0}
    seed = config.seed + stream_id(t1, t2) % (1 << 31)
    cfg = replace(config, seed=seed)
    if t1 == 0 or t2 == 0:
        which = 2 if t1 == 0 else 1
        mu, p = params.component(which)
        r = scalar_ground_state(params.alpha, mu, p, t2 if t1 == 0 else t1, cfg, grid)
        return {"masses": masses, "energy": r.energy, "converged": r.converged,
                "solver": f"scalar{which}", "iterations": r.iterations}
    r = minimize(params.with_masses(t1, t2), cfg, grid)
    return {"masses": masses, "energy": r.energy, "converged": r.converged,
            "solver": "coupled", "iterations": r.iterations}


@dataclass(frozen=True)
class SubadditivityTable:
    energies: tuple  # dicts per mass pair, sorted by masses
    rows: tuple  # dicts: sigma1, sigma2, tau1, tau2, e_sigma, e_tau, e_sum, margin, valid

    @property
    def all_negative(self) -> bool:
        return all(r["valid"] and r["margin"] < 0 for r in self.rows)

    def flagged(self):
        return [r for r in self.rows if r["valid"] and r["margin"] >= 0]


def subadditivity_scan(mass_grid, base_params: Params, config: MinimizeConfig, grid: Grid,
                       workers: int = 1) -> SubadditivityTable:
    """Margins ``E(sigma + tau) - E(sigma) - E(tau)`` over all ordered pairs of ``mass_grid``.

    Pairs with a zero entry are solved with the single-component solver.
    A non-converged solve marks every row that uses it as invalid.
    """
    base = [_pair(m) for m in mass_grid]
    if not base:
        raise ValueError("mass grid is empty")
    for m in base:
        if min(m) < 0 or max(m) <= 0:
            raise ValueError(f"mass pair {m} must be non-negative and not both zero")
    needed = set(base)
    for s, t in itertools.product(base, repeat=2):
        needed.add((s[0] + t[0], s[1] + t[1]))
    keys = sorted(needed)
    results = parallel_map(_pair_energy, [(k, base_params, config, grid) for k in keys], workers)
    table = {r["masses"]: r for r in results}
    rows = []
    for s, t in itertools.product(base, repeat=2):
        st = (s[0] + t[0], s[1] + t[1])
        es, et, esum = table[s], table[t], table[st]
        valid = es["converged"] and et["converged"] and esum["converged"]
        rows.append({
            "sigma1": s[0], "sigma2": s[1], "tau1": t[0], "tau2": t[1],
            "e_sigma": es["energy"], "e_tau": et["energy"], "e_sum": esum["energy"],
            "margin": esum["energy"] - es["energy"] - et["energy"], "valid": valid,
        })
    return SubadditivityTable(tuple(table[k] for k in keys), tuple(rows))


# ---------------------------------------------------------------------------
# stability


def random_direction(grid: Grid, alpha: float, seed: int, stream: int, smoothness: float = 1.0) -> State:
    """Smooth random pair with unit H^alpha x H^alpha norm.

    White noise damped by ``exp(-smoothness |xi|^2)`` in Fourier space.
    """
    rng = generator(seed, stream)
    damp = np.exp(-smoothness * grid.k2)
    comps = []
    for _ in range(2):
        z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        comps.append(ifft(damp * z))
    weight = (1.0 + grid.k2) ** alpha
    nrm = sum(float(np.sum(weight * np.abs(fft(c)) ** 2)) for c in comps) * grid.spectral_weight
    return State(grid, *(c / math.sqrt(nrm) for c in comps))


def _stability_row(task):
    delta, index, reference, params, econfig, seed = task
    grid = reference.grid
    d = random_direction(grid, params.alpha, seed, 1000 + index)
    start = State(grid,
                  retract(reference.u1 + delta * d.u1, grid, params.tau1),
                  retract(reference.u2 + delta * d.u2, grid, params.tau2))
    initial = orbit_distance(start, reference, params.alpha)
    try:
        tr = evolve(start, params, econfig, reference=reference)
        status = "ok"
    except EvolutionAborted as exc:
        tr = exc.trajectory
        status = f"aborted at step {exc.step}"
    return {
        "delta": float(delta),
        "initial_distance": initial,
        "sup_distance": float(np.max(tr.orbit_distance)) if len(tr) else math.nan,
        "mass_drift": tr.mass_drift() if len(tr) else math.nan,
        "energy_drift": tr.energy_drift() if len(tr) else math.nan,
        "status": status,
    }


@dataclass(frozen=True)
class StabilityTable:
    rows: tuple

    @property
    def monotone(self) -> bool:
        d = [r["sup_distance"] for r in sorted(self.rows, key=lambda r: r["delta"])]
        return all(b >= a for a, b in zip(d, d[1:]))


def stability_experiment(reference, delta_list, params: Params, evolve_config: EvolveConfig,
                         seed: int = 0, workers: int = 1) -> StabilityTable:
    """Perturb, renormalize, evolve and record the sup of the orbit distance per ``delta``."""
    ref = _as_state(reference)
    tasks = [(float(d), i, ref, params, evolve_config, seed) for i, d in enumerate(delta_list)]
    rows = parallel_map(_stability_row, tasks, workers)
    table = StabilityTable(tuple(rows))
    if not table.monotone:
        log.warning("sup orbit distance is not monotone in delta")
    return table
