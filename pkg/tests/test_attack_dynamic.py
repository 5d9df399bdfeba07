import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankpoison import attack_dynamic
from rankpoison.aggregator import aggregate
from rankpoison.attack_dynamic import (
    ChiSquareBall,
    DynamicAttackConfig,
    edge_objective,
    find_shift,
    run_dynamic_attack,
    worst_case_frequency,
    worst_case_search,
)
from rankpoison.core import FrequencyVector, InvalidArgumentError, build_full_design, rank_from_scores
from rankpoison.data_io import SyntheticConfig, generate_synthetic
from rankpoison.metrics import kendall_tau

from oracles import simplex_projection


def _instance(rng, N, zero_frac=0.3):
    p = rng.random(N)
    p[rng.random(N) < zero_frac] = 0.0
    p[0] += 1e-3
    p /= p.sum()
    z = rng.normal(size=N)
    return z, p


def test_config_validation():
    for kwargs in ({"rho": 0.0}, {"rho": 1.0, "epsilon": 0.0}, {"rho": 1.0, "max_rounds": 0}):
        with pytest.raises(InvalidArgumentError):
            DynamicAttackConfig(**kwargs)


def test_edge_objective_zero_scores():
    d = build_full_design(4)
    np.testing.assert_allclose(edge_objective(np.zeros(4), d), 0.5)


def test_edge_objective_absorbed_residual_is_zero():
    d = build_full_design(3)
    theta = np.array([0.3, -0.1, -0.2])
    i, j = d.pairs
    r = 1 - (theta[i] - theta[j])
    np.testing.assert_allclose(edge_objective(theta, d, gamma=r, lam=0.0), 0.0, atol=1e-15)


def test_edge_objective_robust_slot():
    d = build_full_design(3)
    theta = np.array([0.4, 0.0, -0.4])
    i, j = d.pairs
    r = 1 - (theta[i] - theta[j])
    gamma = np.zeros(6)
    gamma[2] = r[2]
    z = edge_objective(theta, d, gamma=gamma, lam=0.1)
    assert z[2] == pytest.approx(0.1 * abs(r[2]), abs=1e-15)
    np.testing.assert_allclose(np.delete(z, 2), 0.5 * np.delete(r, 2) ** 2)
    with pytest.raises(InvalidArgumentError):
        edge_objective(theta, d, gamma=np.zeros(5))


def test_find_shift_hand_example():
    # v = (0.9, 0.5, 0.1): full support would need eta = 1/6 and push v_3 negative,
    # so the support shrinks to two entries and eta = (1.4 - 1) / 2.
    v = np.array([0.9, 0.5, 0.1])
    eta, i = find_shift(np.zeros(3), v, 1.0)
    assert i == 2
    assert eta == pytest.approx(0.2, abs=1e-15)
    np.testing.assert_allclose(np.maximum(v - eta, 0), [0.7, 0.3, 0.0], atol=1e-15)


def test_find_shift_identity_on_simplex(rng):
    p = rng.random(7)
    p /= p.sum()
    eta, i = find_shift(np.zeros(7), p, 1.0)
    assert abs(eta) < 1e-15 and i == 7


def test_find_shift_matches_oracle(rng):
    for N in (10, 100, 1000):
        for _ in range(50):
            z, p = _instance(rng, N)
            z -= z.mean()
            mu = float(10 ** rng.uniform(-2, 2))
            eta, i = find_shift(z, p, mu)
            q_or, eta_or, i_or = simplex_projection(p - z / mu)
            assert i == i_or
            assert eta == pytest.approx(eta_or, abs=1e-12)
            np.testing.assert_allclose(np.maximum(p - z / mu - eta, 0), q_or, atol=1e-12)


def test_constant_z_returns_p(rng):
    _, p = _instance(rng, 12)
    q = worst_case_frequency(np.full(12, 3.7), p, 0.1)
    np.testing.assert_allclose(q.values, p, atol=1e-15)


@pytest.mark.parametrize("rho", [1e-2, 1e-4, 1e-8])
def test_shrinking_ball(rng, rho):
    z, p = _instance(rng, 50)
    q = worst_case_frequency(z, p, rho).values
    assert np.linalg.norm(q - p) <= np.sqrt(2 * rho) * np.linalg.norm(p) * (1 + 1e-9)


def test_worst_case_beats_sampled_feasible_points():
    rng = np.random.default_rng(7)
    N = 6
    z, p = _instance(rng, N, zero_frac=0.0)
    rho = 0.5
    q = worst_case_frequency(z, p, rho)
    ball = ChiSquareBall(FrequencyVector(p, normalized=True), rho)
    assert ball.contains(q)
    best = float(q.values @ z)
    # random directions in the sum-zero plane, radius uniform in the ball, kept if nonnegative
    radius = np.sqrt(2 * rho) * np.linalg.norm(p)
    d = rng.normal(size=(100_000, N))
    d -= d.mean(axis=1, keepdims=True)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    cand = p + d * (radius * rng.random((100_000, 1)) ** (1 / (N - 1)))
    cand = cand[np.all(cand >= 0, axis=1)]
    assert len(cand) > 1000
    assert np.all(cand @ z <= best + 1e-6)


def test_maximizes_not_minimizes(rng):
    z, p = _instance(rng, 40)
    q = worst_case_frequency(z, p, 0.05).values
    assert q @ z > p @ z


def test_solution_is_projection_at_returned_mu(rng):
    for N in (10, 100, 10_000):
        z, p = _instance(rng, N)
        res = worst_case_search(z, p, 0.01)
        zc = -(z - z.mean())
        q_or, _, _ = simplex_projection(p - zc / res.mu)
        np.testing.assert_allclose(res.q.values, q_or, atol=1e-9)


def test_dual_derivative_nonincreasing(rng):
    for _ in range(10):
        z, p = _instance(rng, 30)
        zc = -(z - z.mean())
        rho = float(10 ** rng.uniform(-4, 0))
        mus = np.geomspace(1e-4, 1e3, 200)
        g = []
        for mu in mus:
            q, _, _ = simplex_projection(p - zc / mu)
            g.append(0.5 * np.sum((q - p) ** 2) - rho * np.sum(p**2))
        assert np.all(np.diff(g) <= 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.integers(0, 10**6), st.floats(1e-8, 10.0))
def test_ball_membership_property(N, seed, rho):
    rng = np.random.default_rng(seed)
    z, p = _instance(rng, N)
    res = worst_case_search(z, p, rho)
    q = res.q.values
    assert np.all(q >= 0)
    assert abs(q.sum() - 1) <= 1e-9
    assert 0.5 * np.sum((q - p) ** 2) <= rho * np.sum(p**2) + 1e-9


def test_membership_assertion_is_active():
    assert attack_dynamic.CHECK_INVARIANTS


def test_chi_square_ball_rejects_outside_points():
    p = FrequencyVector(np.array([0.5, 0.5]), normalized=True)
    ball = ChiSquareBall(p, 0.01)
    assert ball.contains(np.array([0.55, 0.45]))
    assert not ball.contains(np.array([0.9, 0.1]))
    assert not ball.contains(np.array([0.6, 0.6]))
    with pytest.raises(InvalidArgumentError):
        ChiSquareBall(FrequencyVector(np.array([0.2, 0.2])), 0.1)


def test_runtime_full_design_n100(rng):
    z, p = _instance(rng, 9900)
    t0 = time.perf_counter()
    worst_case_frequency(z, p, 1e-3)
    assert time.perf_counter() - t0 <= 2.0


def test_tiny_radius_round_trips_weights():
    data, _ = generate_synthetic(SyntheticConfig(10, 2000, 0.1, 0))
    res = run_dynamic_attack(data, DynamicAttackConfig(rho=1e-14))
    np.testing.assert_array_equal(res.poisoned.weights, data.weights)


def test_moderate_budget_keeps_positive_correlation():
    data, truth = generate_synthetic(SyntheticConfig(10, 2000, 0.0, 0))
    res = run_dynamic_attack(data, DynamicAttackConfig(rho=1e-2))
    assert kendall_tau(truth, rank_from_scores(aggregate(res.poisoned))) >= 0.3


def test_diagnostics_and_rounds():
    data, _ = generate_synthetic(SyntheticConfig(6, 500, 0.1, 1))
    res = run_dynamic_attack(data, DynamicAttackConfig(rho=0.5, max_rounds=3))
    diag = res.diagnostics()
    assert set(diag) >= {"mu", "eta", "index", "rounds", "q_dot_z"}
    assert 1 <= diag["rounds"] <= 3


def test_robust_ranker_mode():
    data, _ = generate_synthetic(SyntheticConfig(6, 500, 0.1, 1))
    res = run_dynamic_attack(data, DynamicAttackConfig(rho=0.1, robust=True, lam=0.2))
    assert res.poisoned.total <= data.total + data.num_slots
