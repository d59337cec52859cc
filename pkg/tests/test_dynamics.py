import math
import warnings

import numpy as np
import pytest

from fracnls import _kernels
from fracnls.dynamics import (
    EvolutionAborted,
    EvolveConfig,
    evolve,
    linear_halfstep,
    nonlinear_step,
    phase_slopes,
)
from fracnls.functional import Params, State, mass
from fracnls.grid import make_grid, norm2

from conftest import random_field


def dist(a, b):
    return math.sqrt(norm2(a.u1 - b.u1, a.grid) + norm2(a.u2 - b.u2, a.grid))


@pytest.fixture(scope="module")
def perturbed(line_result):
    g = line_result.state.grid
    x = g.x
    s = line_result.state
    return State(g, s.u1 * (1 + 0.2 * np.exp(-(x**2) / 4)), s.u2 * (1 + 0.2j * np.sin(x / 2) * np.exp(-(x**2) / 9)))


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(dt=float("nan")), dict(t_final=0.0), dict(dt=2.0, t_final=1.0),
                                dict(stride=0), dict(dt=0.1, t_final=1.0, stride=11)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolveConfig(**kw)


def test_steps_need_integer_multiple():
    assert EvolveConfig(dt=0.04, t_final=0.48, stride=1).steps == 12
    assert EvolveConfig(dt=-0.01, t_final=1.0, stride=10).steps == 100
    with pytest.raises(ValueError):
        EvolveConfig(dt=0.04, t_final=0.5, stride=1).steps


def test_zero_step_is_identity(rng, line_params):
    g = make_grid(1, 64, 10.0)
    s = State(g, random_field(rng, g.shape), random_field(rng, g.shape))
    for out in (linear_halfstep(s, 0.0, 0.6), nonlinear_step(s, 0.0, line_params)):
        np.testing.assert_allclose(out.u1, s.u1, rtol=0, atol=1e-15)
        np.testing.assert_allclose(out.u2, s.u2, rtol=0, atol=1e-15)


def test_plane_wave_linear_phase():
    g = make_grid(2, 32, 10.0)
    k = (g.wavenumbers[3], g.wavenumbers[-2])
    u = np.exp(1j * (k[0] * g.coords[0] + k[1] * g.coords[1]))
    a, dt = 0.6, 0.37
    out = linear_halfstep(State(g, u, 2 * u), dt, a)
    w = (k[0] ** 2 + k[1] ** 2) ** a
    np.testing.assert_allclose(out.u1, np.exp(1j * w * dt) * u, atol=1e-12)
    np.testing.assert_allclose(out.u2, 2 * np.exp(1j * w * dt) * u, atol=1e-12)


def test_linear_flow_conserves_mass(rng):
    g = make_grid(2, 32, 10.0)
    s = State(g, random_field(rng, g.shape), random_field(rng, g.shape))
    m0 = s.masses()
    for _ in range(1000):
        s = linear_halfstep(s, 0.005, 0.75)
    for a, b in zip(s.masses(), m0):
        assert abs(a - b) <= 1e-12 * b


def test_nonlinear_step_preserves_modulus(rng, desk_params):
    g = make_grid(2, 32, 10.0)
    s = State(g, random_field(rng, g.shape), random_field(rng, g.shape))
    out = nonlinear_step(s, 0.3, desk_params)
    np.testing.assert_allclose(np.abs(out.u1), np.abs(s.u1), rtol=1e-13)
    np.testing.assert_allclose(np.abs(out.u2), np.abs(s.u2), rtol=1e-13)


def test_constant_modulus_phase(desk_params):
    p = desk_params
    g = make_grid(1, 16, 5.0)
    c1, c2, dt = 0.8 + 0.3j, 1.1 - 0.2j, 0.05
    s = State(g, np.full(g.shape, c1), np.full(g.shape, c2))
    out = nonlinear_step(s, dt, p)
    a1, a2 = abs(c1), abs(c2)
    g1 = p.mu1 * a1 ** (p.p1 - 2) + p.beta * p.r1 * a1 ** (p.r1 - 2) * a2**p.r2
    g2 = p.mu2 * a2 ** (p.p2 - 2) + p.beta * p.r2 * a2 ** (p.r2 - 2) * a1**p.r1
    np.testing.assert_allclose(out.u1, c1 * np.exp(-1j * g1 * dt), rtol=1e-13)
    np.testing.assert_allclose(out.u2, c2 * np.exp(-1j * g2 * dt), rtol=1e-13)


def test_conservation_on_perturbed_state(perturbed, line_params):
    tr = evolve(perturbed, line_params, EvolveConfig(dt=0.01, t_final=1.0, stride=10))
    assert len(tr) == 11
    np.testing.assert_allclose(tr.times, np.arange(11) * 0.1, atol=1e-12)
    assert tr.mass_drift() <= 1e-12
    assert tr.energy_drift() <= 1e-6


def test_reversibility(perturbed, line_params):
    fwd = evolve(perturbed, line_params, EvolveConfig(dt=0.02, t_final=0.6, stride=30)).final
    back = evolve(fwd, line_params, EvolveConfig(dt=-0.02, t_final=0.6, stride=30)).final
    assert dist(back, perturbed) <= 1e-8


def test_phase_equivariance(perturbed, line_params):
    cfg = EvolveConfig(dt=0.02, t_final=0.4, stride=20)
    th = (0.9, -2.3)
    rot = State(perturbed.grid, np.exp(1j * th[0]) * perturbed.u1, np.exp(1j * th[1]) * perturbed.u2)
    a = evolve(perturbed, line_params, cfg).final
    b = evolve(rot, line_params, cfg).final
    np.testing.assert_allclose(b.u1, np.exp(1j * th[0]) * a.u1, atol=1e-12)
    np.testing.assert_allclose(b.u2, np.exp(1j * th[1]) * a.u2, atol=1e-12)


def test_merged_halfsteps_match_plain_strang(perturbed, line_params):
    dt, n = 0.03, 7
    s = perturbed
    for _ in range(n):
        s = linear_halfstep(nonlinear_step(linear_halfstep(s, dt / 2, line_params.alpha), dt, line_params),
                            dt / 2, line_params.alpha)
    merged = evolve(perturbed, line_params, EvolveConfig(dt=dt, t_final=n * dt, stride=3)).final
    assert dist(s, merged) <= 1e-12


def test_second_order(perturbed, line_params):
    T = 0.48
    fin = {dt: evolve(perturbed, line_params, EvolveConfig(dt=dt, t_final=T, stride=1)) for dt in (0.04, 0.02, 0.005)}
    ref = fin[0.005].final
    ratio = dist(fin[0.04].final, ref) / dist(fin[0.02].final, ref)
    assert 3.5 <= ratio <= 4.6
    drift_ratio = fin[0.04].energy_drift() / fin[0.02].energy_drift()
    assert 3.5 <= drift_ratio <= 4.5


def test_standing_wave_phase(line_result, line_params):
    cfg = EvolveConfig(dt=0.01, t_final=1.0, stride=10, store_states=True)
    tr = evolve(line_result.state, line_params, cfg, reference=line_result.state)
    assert len(tr.states) == len(tr)
    assert np.max(tr.orbit_distance) <= 1e-4
    for slope, lam in zip(phase_slopes(tr, line_result.state), line_result.multipliers):
        assert slope == pytest.approx(lam, rel=1e-4)
    with pytest.raises(ValueError):
        phase_slopes(evolve(line_result.state, line_params, EvolveConfig(dt=0.1, t_final=0.2, stride=1)),
                     line_result.state)


def test_classical_soliton_is_stationary():
    # alpha = 1, mu = 2, p = 4 in 1-D: exp(-i t) sech(x) solves the flow exactly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = Params(mu1=2.0, p1=4.0, beta=0.0)
    g = make_grid(1, 512, 40.0)
    q = (1 / np.cosh(g.x)).astype(complex)
    s = State(g, q, np.zeros(g.shape, dtype=complex))
    dt, T = 1e-3, 2.0
    for _ in range(round(T / dt)):
        s = linear_halfstep(nonlinear_step(linear_halfstep(s, dt / 2, 1.0), dt, p), dt / 2, 1.0)
    assert np.max(np.abs(np.abs(s.u1) - np.abs(q))) <= 1e-3
    assert math.sqrt(norm2(s.u1 - np.exp(-1j * T) * q, g)) <= 1e-3
    assert np.all(s.u2 == 0)
    assert mass(s.u1, g) == pytest.approx(2.0, rel=1e-10)


def test_abort_keeps_partial_trajectory(perturbed, line_params, monkeypatch):
    real = _kernels.nonlinear_phase_step
    calls = {"n": 0}

    def poisoned(*args):
        calls["n"] += 1
        v1, v2 = real(*args)
        if calls["n"] >= 7:
            v1 = v1.copy()
            v1[3] = np.nan
        return v1, v2

    monkeypatch.setattr(_kernels, "nonlinear_phase_step", poisoned)
    with pytest.raises(EvolutionAborted) as exc:
        evolve(perturbed, line_params, EvolveConfig(dt=0.01, t_final=0.2, stride=5))
    err = exc.value
    assert err.step == 10
    assert err.last_index == 1
    assert len(err.trajectory) == 2
    assert np.all(np.isfinite(err.trajectory.energy))


def test_columns(perturbed, line_params):
    tr = evolve(perturbed, line_params, EvolveConfig(dt=0.1, t_final=0.2, stride=1))
    assert list(tr.columns()) == ["t", "m1", "m2", "energy"]
    tr = evolve(perturbed, line_params, EvolveConfig(dt=0.1, t_final=0.2, stride=1), reference=perturbed)
    assert list(tr.columns()) == ["t", "m1", "m2", "energy", "orbit_distance"]
    assert tr.orbit_distance[0] <= 1e-12
