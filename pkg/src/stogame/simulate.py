"""Reproducible Monte Carlo simulation of stationary and automaton strategies.

Simulation runs on the exact product chain of (game state, machine state)
nodes, vectorized across replications.  Randomness is confined to a
per-call seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import json_ready
from .automata import (
    JointAutomaton,
    JointAutomatonProfile,
    build_product_model,
    stationary_automaton,
)
from .game import StationaryCorrelated, StationaryProfile, StochasticGame


def as_automaton(game: StochasticGame, strategy) -> JointAutomaton:
    if isinstance(strategy, JointAutomaton):
        return strategy
    if isinstance(strategy, JointAutomatonProfile):
        return strategy.joint
    if isinstance(strategy, (StationaryProfile, StationaryCorrelated)):
        return stationary_automaton(game, strategy)
    return stationary_automaton(game, strategy)


def default_horizon(lam: float, tail: float = 1e-9) -> int:
    """Smallest horizon with lam^horizon < tail."""
    if lam <= 0.0:
        return 1
    return max(1, int(math.ceil(math.log(tail) / math.log(lam))))


@dataclass(frozen=True)
class SimulationResult:
    mean: np.ndarray
    std_error: np.ndarray
    replications: int
    horizon: int
    seed: int
    state_visits: np.ndarray     # average per-stage visit frequency per state

    def to_dict(self) -> dict:
        return json_ready({
            "mean": self.mean,
            "std_error": self.std_error,
            "replications": self.replications,
            "horizon": self.horizon,
            "seed": self.seed,
            "state_visits": self.state_visits,
        })


def simulate(game: StochasticGame, s1: int, strategy, lam: float, seed: int,
             replications: int = 1000, horizon: int | None = None
             ) -> SimulationResult:
    """Sampled discounted payoff of a strategy from one initial state.

    The horizon defaults to the first stage where the residual discount
    weight drops below 1e-9, so truncation error is negligible next to the
    Monte Carlo noise.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"discount factor {lam} outside [0, 1)")
    automaton = as_automaton(game, strategy)
    model = build_product_model(game, automaton)
    horizon = default_horizon(lam) if horizon is None else horizon

    cum_alpha = np.cumsum(model.alpha, axis=1)
    K = model.action_kernel()
    cum_K = np.cumsum(K, axis=2)
    node_state = np.array([s for s, _ in model.nodes])

    rng = np.random.default_rng(seed)
    nodes = np.full(replications, model.node_of(s1), dtype=np.int64)
    total = np.zeros((replications, game.n_players))
    visits = np.zeros(game.n_states)
    weight = 1.0 - lam
    for _ in range(horizon):
        u = rng.random(replications)
        a = np.sum(cum_alpha[nodes] < u[:, None], axis=1)
        np.clip(a, 0, game.n_profiles - 1, out=a)
        states = node_state[nodes]
        np.add.at(visits, states, 1.0)
        total += weight * game.payoffs[states, a]
        u2 = rng.random(replications)
        rows = cum_K[nodes, a]
        nxt = np.sum(rows < u2[:, None], axis=1)
        np.clip(nxt, 0, model.n_nodes - 1, out=nxt)
        nodes = nxt
        weight *= lam
    mean = total.mean(axis=0)
    se = total.std(axis=0, ddof=1) / math.sqrt(replications) if replications > 1 \
        else np.zeros(game.n_players)
    return SimulationResult(mean, se, replications, horizon, seed,
                            visits / (horizon * replications))


# ---------------------------------------------------------------------------
# Path-level execution (joint machine vs per-player machines)


def _draw(rng, weights) -> int:
    u = rng.random()
    return int(min(np.sum(np.cumsum(weights) < u), len(weights) - 1))


def sample_play_joint(game: StochasticGame, profile: JointAutomatonProfile,
                      s1: int, stages: int, seed: int) -> list:
    """Sample a play path through the joint machine.

    Action coins are drawn per player from dedicated streams; machine
    transitions and nature use shared public streams, so the per-player
    execution below reproduces the path exactly.
    """
    joint = profile.joint
    if not joint.has_product_outputs:
        raise ValueError("joint machine has correlated outputs; no per-player view")
    n_players = len(joint.factors[0])
    rng_nature = np.random.default_rng([0, seed])
    rng_machine = np.random.default_rng([1, seed])
    rng_act = [np.random.default_rng([10 + i, seed]) for i in range(n_players)]
    s, q = s1, joint.init[s1]
    path = []
    for _ in range(stages):
        actions = tuple(_draw(rng_act[i], joint.factors[q][i]) for i in range(n_players))
        a = game.profile_index(actions)
        s_next = _draw(rng_nature, game.transitions[s, a])
        dist = joint.step_dist(q, a, s_next)
        probs = np.array([p for _, p in dist])
        q_next = dist[_draw(rng_machine, probs)][0]
        path.append((s, a, s_next))
        s, q = s_next, q_next
    return path


def sample_play_per_player(game: StochasticGame, profile: JointAutomatonProfile,
                           s1: int, stages: int, seed: int) -> list:
    """Same play, executed through the per-player automaton views."""
    players = profile.players
    if not players:
        raise ValueError("profile has no per-player decomposition")
    n_players = len(players)
    rng_nature = np.random.default_rng([0, seed])
    rng_machine = np.random.default_rng([1, seed])
    rng_act = [np.random.default_rng([10 + i, seed]) for i in range(n_players)]
    joint = profile.joint
    s = s1
    qs = [view.joint.init[s1] for view in players]
    path = []
    for _ in range(stages):
        actions = tuple(_draw(rng_act[i], players[i].output(qs[i]))
                        for i in range(n_players))
        a = game.profile_index(actions)
        s_next = _draw(rng_nature, game.transitions[s, a])
        # All machines consume the same public coin for their common
        # stochastic transition.
        dist = joint.step_dist(qs[0], a, s_next)
        probs = np.array([p for _, p in dist])
        pick = _draw(rng_machine, probs)
        q_next = dist[pick][0]
        path.append((s, a, s_next))
        s = s_next
        qs = [q_next] * n_players
    return path
