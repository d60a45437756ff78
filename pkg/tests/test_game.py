import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stogame.game import (
    GameFormatError,
    StationaryProfile,
    StochasticGame,
    discounted_payoff_stationary,
    extend_payoff,
    extend_transition,
    game_from_dict,
    game_to_dict,
    load_game,
    pure_profile,
    save_game,
    validate_game,
)
from stogame.generators import random_dense_game, sorin_game
from stogame.simulate import simulate


def one_state_game(payoff=(0.5,)):
    payoffs = np.array([[[p for p in payoff]]], dtype=float)
    transitions = np.ones((1, 1, 1))
    return StochasticGame(("s",), tuple(("a",) for _ in payoff), payoffs, transitions)


def test_validate_well_formed():
    assert validate_game(one_state_game()) == []


def test_validate_bad_transition_mass():
    g = one_state_game()
    bad = StochasticGame(g.state_names, g.action_names, g.payoffs,
                         np.full((1, 1, 1), 0.9))
    report = validate_game(bad)
    assert len(report) == 1
    assert "transition mass 0.9" in report[0]


def test_validate_out_of_range_payoff():
    g = one_state_game(payoff=(1.5,))
    report = validate_game(g)
    assert any("outside" in msg for msg in report)


def test_validate_sorin_file_empty(tmp_path, sorin):
    path = tmp_path / "sorin.json"
    save_game(sorin, path)
    assert validate_game(load_game(path)) == []


def test_extend_transition_point_mass(sorin):
    alpha = np.zeros(4)
    alpha[0] = 1.0   # (T, L)
    np.testing.assert_allclose(extend_transition(sorin, 0, alpha), [1, 0, 0])


def test_extend_transition_mixture_linearity(sorin):
    alpha = np.array([0.5, 0.0, 0.5, 0.0])
    out = extend_transition(sorin, 0, alpha)
    np.testing.assert_allclose(out, 0.5 * sorin.transitions[0, 0] + 0.5 * sorin.transitions[0, 2])


def test_extend_payoff_entries(sorin):
    tl = np.array([1.0, 0, 0, 0])
    br = np.array([0, 0, 0, 1.0])
    np.testing.assert_allclose(extend_payoff(sorin, 0, tl), [1, 0])
    np.testing.assert_allclose(extend_payoff(sorin, 0, br), [2, 0])
    half = np.array([0.5, 0.5, 0, 0])
    np.testing.assert_allclose(extend_payoff(sorin, 0, half), [0.5, 0.5])


def test_extend_rejects_bad_distribution(sorin):
    with pytest.raises(ValueError):
        extend_transition(sorin, 0, np.array([0.5, 0.2, 0.0, 0.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_extension_is_linear_in_alpha(seed, t):
    g = random_dense_game(seed % 1000 + 1, n_states=3)
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.ones(g.n_profiles))
    b = rng.dirichlet(np.ones(g.n_profiles))
    mix = t * a + (1 - t) * b
    np.testing.assert_allclose(
        extend_transition(g, 0, mix),
        t * extend_transition(g, 0, a) + (1 - t) * extend_transition(g, 0, b),
        atol=1e-12)
    np.testing.assert_allclose(
        extend_payoff(g, 0, mix),
        t * extend_payoff(g, 0, a) + (1 - t) * extend_payoff(g, 0, b),
        atol=1e-12)


def test_discounted_constant_stream():
    g = one_state_game(payoff=(0.3, -0.2))
    prof = StationaryProfile((np.ones((1, 1)), np.ones((1, 1))))
    for lam in (0.0, 0.5, 0.9, 0.999):
        np.testing.assert_allclose(
            discounted_payoff_stationary(g, prof, lam, 0), [0.3, -0.2])


def test_discounted_sorin_fixed_profile_approaches_one_third(sorin):
    prof = StationaryProfile((np.tile([1.0, 0.0], (3, 1)),
                              np.tile([2 / 3, 1 / 3], (3, 1))))
    for lam in (0.9, 0.99, 0.9999):
        pay = discounted_payoff_stationary(sorin, prof, lam, 0)
        np.testing.assert_allclose(pay, [2 / 3, 1 / 3], atol=1e-12)


def test_discounted_sorin_immediate_absorption(sorin):
    prof = pure_profile(sorin, [(1, 0)] * 3)   # (B, L) everywhere
    np.testing.assert_allclose(
        discounted_payoff_stationary(sorin, prof, 0.5, 0), [0, 1], atol=1e-12)


def test_discounted_rejects_bad_lambda(sorin):
    prof = pure_profile(sorin, [(0, 0)] * 3)
    with pytest.raises(ValueError):
        discounted_payoff_stationary(sorin, prof, 1.0, 0)


def test_bellman_one_step_consistency():
    g = random_dense_game(7, n_states=4)
    rng = np.random.default_rng(3)
    table = np.stack([rng.dirichlet(np.ones(g.n_profiles)) for _ in range(4)])
    lam = 0.9
    from stogame.game import induced_chain

    P, r = induced_chain(g, table)
    gamma = discounted_payoff_stationary(g, table, lam)
    np.testing.assert_allclose(gamma, (1 - lam) * r + lam * P @ gamma, atol=1e-9)


def test_simulate_deterministic_game_zero_variance():
    g = one_state_game(payoff=(0.4,))
    prof = StationaryProfile((np.ones((1, 1)),))
    res = simulate(g, 0, prof, 0.5, seed=1, replications=50)
    np.testing.assert_allclose(res.mean, [0.4], atol=1e-12)
    np.testing.assert_allclose(res.std_error, [0.0], atol=1e-12)


def test_simulate_matches_exact_within_four_se(sorin):
    prof = StationaryProfile((np.tile([1.0, 0.0], (3, 1)),
                              np.tile([2 / 3, 1 / 3], (3, 1))))
    for lam, reps in ((0.5, 4000), (0.9, 4000), (0.99, 2000)):
        exact = discounted_payoff_stationary(sorin, prof, lam, 0)
        res = simulate(sorin, 0, prof, lam, seed=11, replications=reps)
        assert np.all(np.abs(res.mean - exact) <= 4 * res.std_error + 1e-9)


def test_simulate_seed_determinism(sorin):
    prof = pure_profile(sorin, [(0, 0)] * 3)
    a = simulate(sorin, 0, prof, 0.9, seed=5, replications=300)
    b = simulate(sorin, 0, prof, 0.9, seed=5, replications=300)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.state_visits, b.state_visits)


def test_game_file_round_trip(tmp_path):
    g = random_dense_game(42, n_states=3)
    path = tmp_path / "g.json"
    save_game(g, path)
    h = load_game(path)
    assert np.array_equal(g.payoffs, h.payoffs)
    assert np.array_equal(g.transitions, h.transitions)
    assert g.state_names == h.state_names


def test_unspecified_transitions_parse_as_zero(sorin):
    doc = game_to_dict(sorin)
    del doc["transitions"]["s0"]["T/L"]["s0"]
    g = game_from_dict(doc)
    report = validate_game(g)
    assert any("transition mass 0.0" in msg for msg in report)


def test_parse_errors_raise(tmp_path):
    with pytest.raises(GameFormatError):
        load_game(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(GameFormatError):
        load_game(bad)
    nopay = tmp_path / "nopay.json"
    nopay.write_text(json.dumps({
        "players": 1, "states": ["s"], "actions": [["a"]],
        "payoffs": {}, "transitions": {"s": {"a": {"s": 1.0}}}}))
    with pytest.raises(GameFormatError):
        load_game(nopay)
