import numpy as np
import pytest

from oracles import empirical_frequency, recurrent_points_oracle
from stogame.frequencies import (
    EnumerationSizeError,
    enumerate_recurrent_points,
    payoff_of_frequency,
    stationary_frequency,
    type_a_feasibility,
)
from stogame.game import (
    StationaryProfile,
    StochasticGame,
    discounted_payoff_stationary,
    pure_profile,
)
from stogame.generators import random_dense_game, sorin_game


def test_two_cycle_uniform_frequency():
    payoffs = np.zeros((2, 1, 2))
    transitions = np.array([[[0.0, 1.0]], [[1.0, 0.0]]])
    g = StochasticGame(("a", "b"), (("x",), ("y",)), payoffs, transitions)
    freq = stationary_frequency(g, pure_profile(g, [(0, 0)] * 2), 0)
    np.testing.assert_allclose(freq.rho[:, 0], [0.5, 0.5], atol=1e-12)
    assert freq.total() == pytest.approx(1.0)


def test_absorbing_concentration(sorin):
    prof = pure_profile(sorin, [(1, 0)] * 3)   # (B, L): absorb at (0, 1)
    freq = stationary_frequency(sorin, prof, 0)
    assert freq.rho[1].sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(payoff_of_frequency(sorin, freq), [0, 1], atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_frequency_matches_long_simulation(seed):
    g = random_dense_game(seed + 50, n_states=3)
    rng = np.random.default_rng(seed)
    table = np.stack([rng.dirichlet(np.ones(g.n_profiles)) for _ in range(3)])
    freq = stationary_frequency(g, table, 0)
    emp = empirical_frequency(g, table, 0, steps=10**6, seed=seed)
    assert float(np.max(np.abs(freq.rho - emp))) <= 1e-2


def test_payoff_point_mass(sorin):
    rho = np.zeros((3, 4))
    rho[0, 0] = 1.0   # loop on (T, L)
    np.testing.assert_allclose(payoff_of_frequency(sorin, rho), [1, 0])


def test_payoff_matches_patient_discounted():
    g = random_dense_game(83, n_states=4)
    rng = np.random.default_rng(12)
    for _ in range(5):
        table = np.stack([rng.dirichlet(np.ones(g.n_profiles)) for _ in range(4)])
        freq = stationary_frequency(g, table, 0)
        gamma = discounted_payoff_stationary(g, table, 0.9999, 0)
        assert float(np.max(np.abs(payoff_of_frequency(g, freq) - gamma))) <= 0.02


def test_recurrent_points_single_state(sorin):
    points = enumerate_recurrent_points(sorin, [0])
    payoffs = sorted(tuple(p.payoff.round(9)) for p in points)
    assert payoffs == [(0.0, 1.0), (1.0, 0.0)]


def test_recurrent_points_exclude_exiting_classes(sorin):
    # On the whole state space every profile's classes are inside, but on
    # {s0} the quitting rows are excluded by region preservation.
    points = enumerate_recurrent_points(sorin, [0])
    for p in points:
        assert all(a in (0, 1) for a in p.actions.values())


@pytest.mark.parametrize("seed", [60, 61, 62])
def test_recurrent_points_match_oracle(seed):
    g = random_dense_game(seed, n_states=3)
    points = enumerate_recurrent_points(g, range(3))
    mine = {tuple(np.round(p.freq.rho, 8).ravel()) for p in points}
    assert mine == recurrent_points_oracle(g, range(3))


def test_enumeration_guard():
    g = random_dense_game(99, n_states=5, n_actions=2)
    big = StochasticGame(
        tuple(f"s{k}" for k in range(5)),
        (tuple(f"a{j}" for j in range(16)), tuple(f"b{j}" for j in range(16))),
        np.zeros((5, 256, 2)),
        np.tile(np.full(5, 0.2), (5, 256, 1)),
    )
    with pytest.raises(EnumerationSizeError):
        enumerate_recurrent_points(big, range(5))
    del g


def test_feasibility_single_point():
    g = sorin_game()
    plan = type_a_feasibility(g, [1], np.array([0.0, 1.0]), eps=0.05)
    assert plan is not None
    np.testing.assert_allclose(plan.weights, [1.0])
    assert plan.slack >= 0.05 - 1e-12


def test_feasibility_symmetric_mixture(sorin):
    plan = type_a_feasibility(sorin, [0], np.array([0.4, 0.4]))
    assert plan is not None
    np.testing.assert_allclose(plan.weights, [0.5, 0.5], atol=1e-9)
    np.testing.assert_allclose(plan.achieved, [0.5, 0.5], atol=1e-9)


def test_feasibility_infeasible_target(sorin):
    assert type_a_feasibility(sorin, [0], np.array([2 / 3, 0.5]), eps=0.05) is None


@pytest.mark.parametrize("seed", range(4))
def test_feasibility_matches_grid(seed):
    g = random_dense_game(seed + 200, n_states=3)
    points = enumerate_recurrent_points(g, range(3))
    pays = np.stack([p.payoff for p in points])
    target = pays.mean(axis=0)
    plan = type_a_feasibility(g, range(3), target, points=points)
    # Grid search over mixture weights of the first three points as a bound.
    grid_best = -np.inf
    k = min(3, len(points))
    for w1 in np.linspace(0, 1, 101):
        for w2 in np.linspace(0, 1 - w1, max(2, int(101 * (1 - w1)) + 1)):
            w = np.zeros(k)
            w[0] = w1
            if k > 1:
                w[1] = w2
            if k > 2:
                w[2] = 1 - w1 - w2
            else:
                w[-1] += 1 - w.sum()
            mix = w @ pays[:k]
            grid_best = max(grid_best, float(np.min(mix - target)))
    assert plan is not None
    assert plan.slack >= grid_best - 1e-6


def test_plan_support_is_small():
    g = random_dense_game(77, n_states=4)
    points = enumerate_recurrent_points(g, range(4))
    target = np.stack([p.payoff for p in points]).mean(axis=0)
    plan = type_a_feasibility(g, range(4), target, points=points)
    assert plan is not None
    assert len(plan.atoms) <= g.n_players + 1
    assert np.all(plan.weights > 0)
    assert plan.weights.sum() == pytest.approx(1.0)
