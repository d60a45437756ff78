import numpy as np
import pytest

from stogame.game import StochasticGame
from stogame.generators import random_dense_game, sorin_game
from stogame.minmax import solve_uniform_minmax
from stogame.oneshot import (
    AuxiliaryGame,
    build_auxiliary_game,
    check_value_inequality,
    continuation_values,
    enumerate_all_states,
    enumerate_equilibria,
    profile_value,
    regret,
)


@pytest.fixture(scope="module")
def sorin_v1():
    g = sorin_game()
    return g, solve_uniform_minmax(g).uniform_values


def test_absorbing_state_table_is_constant(sorin_v1):
    g, v1 = sorin_v1
    aux = build_auxiliary_game(g, 1, v1)
    np.testing.assert_allclose(aux.table, np.tile([0.0, 1.0], (4, 1)), atol=1e-9)


def test_deterministic_transition_copies_value(sorin_v1):
    g, v1 = sorin_v1
    aux = build_auxiliary_game(g, 0, v1)
    # (B, R) moves surely to the (2,0) absorbing state
    np.testing.assert_allclose(aux.table[3], v1[2], atol=1e-9)
    np.testing.assert_allclose(aux.table[3], [2.0, 0.0], atol=1e-9)


def test_continuation_values_match_aux_tables(sorin_v1):
    g, v1 = sorin_v1
    u_star = continuation_values(g, v1)
    for s in range(g.n_states):
        np.testing.assert_allclose(u_star[s], build_auxiliary_game(g, s, v1).table)


def test_dominant_strategy_game_unique_pure():
    table = np.array([[3, 3], [1, 2], [2, 1], [0, 0]], dtype=float)
    aux = AuxiliaryGame(0, table, (2, 2))
    eqs = enumerate_equilibria(aux)
    assert len(eqs.items) == 1
    np.testing.assert_allclose(eqs.items[0].mixes[0], [1, 0])
    np.testing.assert_allclose(eqs.items[0].mixes[1], [1, 0])


def test_matching_pennies_mixed_equilibrium():
    table = np.array([[1, -1], [-1, 1], [-1, 1], [1, -1]], dtype=float)
    aux = AuxiliaryGame(0, table, (2, 2))
    eqs = enumerate_equilibria(aux)
    assert len(eqs.items) == 1
    for m in eqs.items[0].mixes:
        np.testing.assert_allclose(m, [0.5, 0.5], atol=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_random_2x2_equilibria_match_grid_scan(seed):
    rng = np.random.default_rng(seed)
    table = rng.uniform(-1, 1, size=(4, 2))
    aux = AuxiliaryGame(0, table, (2, 2))
    eqs = enumerate_equilibria(aux)
    assert eqs.items, "two-player enumeration must find an equilibrium"
    # Every reported equilibrium has grid-verified regret.
    for eq in eqs.items:
        assert regret(aux, eq.mixes) <= 1e-8
    # Grid scan: every near-equilibrium grid point is close to a reported one
    # in payoff-regret terms, and best grid regret is tiny.
    grid = np.linspace(0, 1, 1001)
    best = np.inf
    for p in grid:
        x = np.array([p, 1 - p])
        tensor = aux.tensor()
        # player 2 best response set given x, then player 1 regret at (x, br)
        u2 = x @ tensor[..., 1]
        for j in (0, 1):
            if u2[j] < u2.max() - 1e-12:
                continue
            y = np.zeros(2)
            y[j] = 1.0
            best = min(best, regret(aux, (x, y)))
    found_pure_or_best = min(best, min(regret(aux, eq.mixes) for eq in eqs.items))
    assert found_pure_or_best <= 1e-3


def test_equilibrium_regret_bound_under_tol():
    g = random_dense_game(9, n_states=3)
    v1 = solve_uniform_minmax(g).uniform_values
    for eq_set in enumerate_all_states(g, v1):
        assert eq_set.items
        for eq in eq_set.items:
            aux = build_auxiliary_game(g, eq_set.state, v1)
            bound = 1e-9 if eq.exact else 1e-6
            assert regret(aux, eq.mixes) <= bound + 1e-12


def test_value_inequality_absorbing_margin_zero(sorin_v1):
    g, v1 = sorin_v1
    aux = build_auxiliary_game(g, 1, v1)
    eqs = enumerate_equilibria(aux)
    ok, margins = check_value_inequality(aux, eqs.items[0].mixes, v1)
    assert ok
    np.testing.assert_allclose(margins, [0, 0], atol=1e-9)


def test_value_inequality_over_random_game():
    g = random_dense_game(23, n_states=4)
    v1 = solve_uniform_minmax(g).uniform_values
    for eq_set in enumerate_all_states(g, v1):
        aux = build_auxiliary_game(g, eq_set.state, v1)
        for eq in eq_set.items:
            ok, margins = check_value_inequality(aux, eq.mixes, v1)
            assert ok, f"margin {margins} below tolerance at state {eq_set.state}"
            assert np.all(margins >= -1e-6)


def test_value_inequality_flags_crafted_violation(sorin_v1):
    g, v1 = sorin_v1
    aux = build_auxiliary_game(g, 0, v1)
    # (B, L) drops player 1 to 0, far below 2/3.
    bad = (np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    ok, margins = check_value_inequality(aux, bad, v1)
    assert not ok
    assert margins[0] < -0.5


def test_sorin_equilibria_stay_home(sorin_v1):
    g, v1 = sorin_v1
    aux = build_auxiliary_game(g, 0, v1)
    eqs = enumerate_equilibria(aux)
    assert eqs.items
    for eq in eqs.items:
        row = eq.correlated_row()
        # all staying mass: no weight on the quitting row
        assert row[2] == pytest.approx(0.0, abs=1e-9)
        assert row[3] == pytest.approx(0.0, abs=1e-9)


def test_three_player_path_reports_rather_than_fabricates():
    from stogame.generators import three_player_game
    from stogame.minmax import default_schedule

    g = three_player_game()
    v1 = solve_uniform_minmax(g, schedule=default_schedule(8)).uniform_values
    aux = build_auxiliary_game(g, 0, v1)
    eqs = enumerate_equilibria(aux)
    for eq in eqs.items:
        bound = 1e-9 if eq.exact else 1e-6
        assert regret(aux, eq.mixes) <= bound + 1e-12


def test_profile_value_is_multilinear():
    rng = np.random.default_rng(4)
    table = rng.uniform(-1, 1, size=(4, 2))
    aux = AuxiliaryGame(0, table, (2, 2))
    x = rng.dirichlet(np.ones(2))
    y = rng.dirichlet(np.ones(2))
    direct = sum(x[i] * y[j] * table[2 * i + j] for i in range(2) for j in range(2))
    np.testing.assert_allclose(profile_value(aux, (x, y)), direct, atol=1e-12)
