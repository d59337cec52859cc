import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnls.analysis import (
    Thresholds,
    classify_sequence,
    concentration_function,
    orbit_distance,
    random_direction,
    stability_experiment,
    subadditivity_scan,
    vanishing_norms,
)
from fracnls.dynamics import EvolveConfig
from fracnls.fracops import sobolev_norm_sq
from fracnls.functional import State, gaussian_profile
from fracnls.grid import fft, make_grid
from fracnls.groundstate import MinimizeConfig, scalar_ground_state

from conftest import smooth_field

pytestmark = pytest.mark.filterwarnings("ignore:N = 1 lies outside")


def bump_state(grid, centers, width=1.0, tau=1.0):
    parts = [gaussian_profile(tau, width, grid.dim, c)(*grid.coords) for c in centers]
    u = sum(parts)
    return State(grid, u, np.zeros(grid.shape, dtype=complex))


def brute_orbit_distance(a, b, alpha):
    # scan every grid shift with np.roll and the closed-form optimal phase
    g = a.grid
    w = (1 + g.k2) ** alpha

    def hip(x, y):
        return np.sum(w * np.conj(fft(x)) * fft(y)) * g.spectral_weight

    base = sum(hip(x, x).real + hip(y, y).real for x, y in zip(a, b))
    best = math.inf
    for s in range(g.n):
        c = sum(abs(hip(x, np.roll(y, s))) for x, y in zip(a, b))
        best = min(best, base - 2 * c)
    return math.sqrt(max(best, 0.0))


# --- concentration ------------------------------------------------------------


def test_centered_bump_nearly_full():
    g = make_grid(2, 64, 20.0)
    s = bump_state(g, [(0.0, 0.0)])
    (t, q), = concentration_function(s, [g.length / 2 - g.spacing])
    assert q == pytest.approx(1.0, abs=1e-10)


def test_two_far_bumps_give_half():
    g = make_grid(1, 256, 40.0)
    s = bump_state(g, [(-10.0,), (10.0,)], width=0.8, tau=0.5)
    total = sum(s.masses())
    (_, q), = concentration_function(s, [3.0])
    assert q == pytest.approx(total / 2, rel=1e-6)


def test_concentration_monotone_and_translation_invariant(rng):
    g = make_grid(2, 64, 20.0)
    s = State(g, smooth_field(rng, g, 3), smooth_field(rng, g, 2))
    radii = np.linspace(0.5, 10.0, 12)
    qs = [q for _, q in concentration_function(s, radii[::-1])]
    assert all(b >= a for a, b in zip(qs, qs[1:]))
    assert qs[-1] <= sum(s.masses()) * (1 + 1e-12)
    rolled = State(g, *(np.roll(u, (5, -11), (0, 1)) for u in s))
    np.testing.assert_allclose([q for _, q in concentration_function(rolled, radii)], qs, rtol=1e-12)


@pytest.mark.parametrize("radius", [0.0, -1.0, 10.5])
def test_concentration_rejects_radius(radius):
    g = make_grid(1, 64, 20.0)
    with pytest.raises(ValueError):
        concentration_function(bump_state(g, [(0.0,)]), [1.0, radius])


def test_concentration_empty_radii():
    g = make_grid(1, 64, 20.0)
    assert concentration_function(bump_state(g, [(0.0,)]), []) == []


# --- classification -----------------------------------------------------------


def test_classify_compact(desk_result):
    c = classify_sequence([desk_result.state], window_radius=2.0)
    assert c.label == "compact"
    assert c.total_mass == pytest.approx(2.0, rel=1e-12)


def spreading_family():
    g = make_grid(1, 1024, 400.0)
    return [bump_state(g, [(0.0,)], width=3.0 * n) for n in (1, 2, 4, 8, 16)]


def test_classify_vanishing():
    fam = spreading_family()
    c = classify_sequence(fam, window_radius=1.0, thresholds=Thresholds(compact_radius=10.0))
    assert c.label == "vanishing"
    assert all(b < a for a, b in zip(c.window_series, c.window_series[1:]))


def test_classify_dichotomy():
    g = make_grid(1, 1024, 200.0)
    fam = [bump_state(g, [(-d / 2,), (d / 2,)], tau=0.5) for d in (10.0, 40.0, 80.0)]
    c = classify_sequence(fam, window_radius=3.0, thresholds=Thresholds(compact_radius=5.0))
    assert c.label == "dichotomy"
    assert c.window_q == pytest.approx(0.5 * c.total_mass, rel=1e-6)


def test_classify_empty():
    with pytest.raises(ValueError):
        classify_sequence([], window_radius=1.0)


def test_vanishing_norms_on_spreading_family():
    norms = [vanishing_norms(s, [2, 3]) for s in spreading_family()]
    l2 = [n[2][0] for n in norms]
    l3 = [n[3][0] for n in norms]
    np.testing.assert_allclose(l2, 1.0, rtol=1e-10)
    assert all(b < a for a, b in zip(l3, l3[1:]))
    with pytest.raises(ValueError):
        vanishing_norms(spreading_family()[0], [0.5])


# --- orbit distance -----------------------------------------------------------


def test_orbit_distance_of_translated_phased_copy(desk_result):
    s = desk_result.state
    assert orbit_distance(s, desk_result) <= 1e-10
    moved = State(s.grid, np.exp(1.3j) * np.roll(s.u1, (9, -20), (0, 1)), np.exp(-0.4j) * np.roll(s.u2, (9, -20), (0, 1)))
    assert orbit_distance(moved, desk_result) <= 1e-10


def test_orbit_distance_bounded_by_perturbation(desk_result):
    s = desk_result.state
    d = random_direction(s.grid, 0.75, 0, 4)
    for delta in (1e-3, 1e-1):
        val = orbit_distance(s + d.scale(delta), desk_result)
        assert 0 < val <= delta * (1 + 1e-12)


def test_orbit_distance_requires_alpha_and_same_grid(desk_result):
    with pytest.raises(ValueError):
        orbit_distance(desk_result.state, desk_result.state)
    other = bump_state(make_grid(2, 64, 40.0), [(0.0, 0.0)])
    with pytest.raises(ValueError):
        orbit_distance(other, desk_result)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.1, 0.9))
def test_orbit_distance_matches_brute_force(seed, alpha):
    g = make_grid(1, 32, 12.0)
    r = np.random.default_rng(seed)
    a = State(g, smooth_field(r, g, 5), smooth_field(r, g, 5))
    b = State(g, smooth_field(r, g, 5), smooth_field(r, g, 5))
    assert orbit_distance(a, b, alpha) == pytest.approx(brute_orbit_distance(a, b, alpha), rel=1e-9, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_orbit_distance_symmetric_and_triangle(seed):
    g = make_grid(2, 16, 8.0)
    r = np.random.default_rng(seed)
    a, b, c = (State(g, smooth_field(r, g, 3), smooth_field(r, g, 3)) for _ in range(3))
    ab, ba = orbit_distance(a, b, 0.5), orbit_distance(b, a, 0.5)
    assert ab == pytest.approx(ba, rel=1e-10)
    assert orbit_distance(a, c, 0.5) <= ab + orbit_distance(b, c, 0.5) + 1e-12


# --- random directions and stability --------------------------------------------


def test_random_direction_normalized_and_deterministic(desk_grid):
    d = random_direction(desk_grid, 0.75, 7, 3)
    total = sum(sobolev_norm_sq(u, desk_grid, 0.75) for u in d)
    assert total == pytest.approx(1.0, rel=1e-12)
    again = random_direction(desk_grid, 0.75, 7, 3)
    np.testing.assert_array_equal(d.u1, again.u1)
    assert not np.array_equal(d.u1, random_direction(desk_grid, 0.75, 7, 4).u1)


@pytest.fixture(scope="module")
def small_stability(line_result, line_params):
    cfg = EvolveConfig(dt=0.01, t_final=0.5, stride=10)
    return stability_experiment(line_result, [0.0, 1e-3, 1e-2], line_params, cfg, seed=0)


def test_stability_small_case(small_stability):
    rows = small_stability.rows
    assert [r["delta"] for r in rows] == [0.0, 1e-3, 1e-2]
    assert all(r["status"] == "ok" for r in rows)
    assert rows[0]["sup_distance"] <= 1e-5
    for r in rows[1:]:
        assert r["initial_distance"] <= 1.5 * r["delta"]
        assert r["sup_distance"] <= 10 * r["delta"]
        assert r["mass_drift"] <= 1e-12
    assert small_stability.monotone


def test_stability_worker_independent(small_stability, line_result, line_params):
    cfg = EvolveConfig(dt=0.01, t_final=0.5, stride=10)
    par = stability_experiment(line_result, [0.0, 1e-3, 1e-2], line_params, cfg, seed=0, workers=2)
    assert par.rows == small_stability.rows


# --- subadditivity --------------------------------------------------------------


@pytest.fixture(scope="module")
def small_scan(line_grid, line_params):
    return subadditivity_scan([(0.5, 0.0), (0.0, 0.5), (0.5, 0.5)], line_params, MinimizeConfig(), line_grid)


def test_subadditivity_rows(small_scan):
    rows = small_scan.rows
    assert len(rows) == 9
    for r in rows:
        assert r["margin"] == r["e_sum"] - r["e_sigma"] - r["e_tau"]
    by = {(r["sigma1"], r["sigma2"], r["tau1"], r["tau2"]): r for r in rows}
    for (s1, s2, t1, t2), r in by.items():
        assert by[(t1, t2, s1, s2)]["margin"] == pytest.approx(r["margin"], rel=1e-14)
    assert small_scan.all_negative
    assert small_scan.flagged() == []


def test_subadditivity_edge_rows_use_scalar_solver(small_scan, line_grid, line_params):
    edge = {e["masses"]: e for e in small_scan.energies}
    assert edge[(0.5, 0.0)]["solver"] == "scalar1"
    assert edge[(0.0, 1.0)]["solver"] == "scalar2"
    assert edge[(1.0, 1.0)]["solver"] == "coupled"
    direct = scalar_ground_state(line_params.alpha, line_params.mu1, line_params.p1, 0.5, MinimizeConfig(), line_grid)
    assert edge[(0.5, 0.0)]["energy"] == pytest.approx(direct.energy, rel=1e-6)


@pytest.mark.parametrize("grid_", [[], [(0.0, 0.0)], [(-1.0, 1.0)]])
def test_subadditivity_rejects_bad_mass_grid(grid_, line_grid, line_params):
    with pytest.raises(ValueError):
        subadditivity_scan(grid_, line_params, MinimizeConfig(), line_grid)
