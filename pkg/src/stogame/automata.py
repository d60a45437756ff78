"""Finite-state machine strategies and their exact product-chain analysis.

A joint automaton reads the played action profile and the next game state,
emits one correlated mixed action per machine state, and moves stochastically
between machine states.  When each output is a product of per-player mixes,
the machine decomposes into one automaton per player: all of them share the
machine-state evolution (driven by public inputs and a declared public coin
stream), and each emits only its own factor.

Exact evaluation never materializes histories: play under an automaton is a
Markov chain over (game state, machine state) nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import DIST_TOL, json_ready
from .chains import (
    absorption_probabilities,
    recurrent_classes,
    stationary_distribution,
)
from .game import StochasticGame, as_correlated_table


@dataclass(eq=False)
class JointAutomaton:
    """Joint machine.

    labels: hashable descriptor per machine state (reporting only)
    outputs: per machine state, correlated action row over profiles, (Q, A)
    factors: per machine state, tuple of per-player mixes, or None when the
             output is genuinely correlated (no product decomposition)
    transitions: (q, a_flat, s_next) -> tuple of (q', prob); pairs not listed
             fall back to `fallback(q, a, s_next)`
    init: initial machine state per initial game state
    coin_note: contract for the shared public coins driving stochastic
             machine transitions
    """

    labels: list
    outputs: np.ndarray
    factors: list | None
    transitions: dict
    init: dict
    coin_note: str = "machine transitions consume one shared public coin per stage"
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def has_product_outputs(self) -> bool:
        return self.factors is not None

    def output_row(self, q: int) -> np.ndarray:
        return self.outputs[q]

    def step_dist(self, q: int, a: int, s_next: int):
        got = self.transitions.get((q, a, s_next))
        if got is not None:
            return got
        return self.fallback(q, a, s_next)

    def fallback(self, q: int, a: int, s_next: int):
        """Default reaction to inputs outside the stored table: restart at the
        initial machine state of the observed game state."""
        return ((self.init[s_next], 1.0),)

    def to_dict(self) -> dict:
        rows = {}
        for (q, a, s_next), dist in sorted(self.transitions.items()):
            rows[f"{q}|{a}|{s_next}"] = [[int(q2), float(p)] for q2, p in dist]
        return json_ready({
            "size": self.size,
            "labels": [str(l) for l in self.labels],
            "outputs": self.outputs,
            "factors": None if self.factors is None else [
                [m for m in f] for f in self.factors
            ],
            "transitions": rows,
            "init": {str(s): int(q) for s, q in self.init.items()},
            "coin_note": self.coin_note,
        })


@dataclass(frozen=True, eq=False)
class PlayerAutomaton:
    """Player view of a joint machine with product outputs: identical states,
    inputs and transitions, output restricted to the player's own factor."""

    joint: JointAutomaton
    player: int

    @property
    def size(self) -> int:
        return self.joint.size

    def output(self, q: int) -> np.ndarray:
        return self.joint.factors[q][self.player]


@dataclass(eq=False)
class JointAutomatonProfile:
    """A joint machine plus its per-player decomposition (when one exists)."""

    joint: JointAutomaton
    meta: dict = field(default_factory=dict)

    @property
    def players(self) -> list:
        if not self.joint.has_product_outputs:
            return []
        n = len(self.joint.factors[0])
        return [PlayerAutomaton(self.joint, i) for i in range(n)]

    def player_sizes(self, n_players: int) -> list:
        return [self.joint.size] * n_players

    def to_dict(self) -> dict:
        return json_ready({"joint": self.joint.to_dict(), "meta": self.meta})


def stationary_automaton(game: StochasticGame, strategy,
                         factors_by_state=None) -> JointAutomaton:
    """Wrap a stationary strategy as a state-tracking machine of size |S|."""
    table = as_correlated_table(game, strategy)
    n = game.n_states
    transitions = {}
    for q in range(n):
        row = table[q]
        for a in np.nonzero(row > DIST_TOL)[0]:
            for s_next in np.nonzero(game.transitions[q, a] > DIST_TOL)[0]:
                transitions[(q, int(a), int(s_next))] = ((int(s_next), 1.0),)
    factors = None
    if factors_by_state is not None:
        factors = [tuple(np.asarray(m) for m in factors_by_state[s]) for s in range(n)]
    else:
        from .game import StationaryProfile

        if isinstance(strategy, StationaryProfile):
            factors = [tuple(m[s] for m in strategy.mixes) for s in range(n)]
    return JointAutomaton(
        labels=[("state", game.state_names[s]) for s in range(n)],
        outputs=table.copy(),
        factors=factors,
        transitions=transitions,
        init={s: s for s in range(n)},
        coin_note="deterministic machine transitions (state tracking only)",
    )


# ---------------------------------------------------------------------------
# Product chain


@dataclass(eq=False)
class ProductModel:
    """Markov chain over reachable (game state, machine state) nodes."""

    game: StochasticGame
    automaton: JointAutomaton
    nodes: list                 # (s, q) pairs
    index: dict                 # (s, q) -> node id
    P: np.ndarray               # (N, N) chain
    r: np.ndarray               # (N, I) stage payoffs
    alpha: np.ndarray           # (N, A) played correlated action

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_of(self, s: int, q: int | None = None) -> int:
        q = self.automaton.init[s] if q is None else q
        return self.index[(s, q)]

    def action_kernel(self) -> np.ndarray:
        """K[n, a, n']: next-node law given the profile actually played."""
        N = self.n_nodes
        K = np.zeros((N, self.game.n_profiles, N))
        for n, (s, q) in enumerate(self.nodes):
            for a in np.nonzero(self.alpha[n] > DIST_TOL)[0]:
                a = int(a)
                for s_next in np.nonzero(self.game.transitions[s, a] > DIST_TOL)[0]:
                    s_next = int(s_next)
                    p_s = self.game.transitions[s, a, s_next]
                    for q2, p_q in self.automaton.step_dist(q, a, s_next):
                        K[n, a, self.index[(s_next, q2)]] += p_s * p_q
        return K


def build_product_model(game: StochasticGame, automaton: JointAutomaton,
                        extra_nodes=()) -> ProductModel:
    """Breadth-first closure of the product chain from every initial state."""
    frontier = [(s, automaton.init[s]) for s in range(game.n_states)]
    frontier.extend(extra_nodes)
    index = {}
    nodes = []
    for node in frontier:
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
    edges = []
    k = 0
    while k < len(nodes):
        s, q = nodes[k]
        row = automaton.output_row(q)
        for a in np.nonzero(row > DIST_TOL)[0]:
            a = int(a)
            w_a = row[a]
            for s_next in np.nonzero(game.transitions[s, a] > DIST_TOL)[0]:
                s_next = int(s_next)
                p_s = game.transitions[s, a, s_next]
                for q2, p_q in automaton.step_dist(q, a, s_next):
                    node2 = (s_next, q2)
                    if node2 not in index:
                        index[node2] = len(nodes)
                        nodes.append(node2)
                    edges.append((k, index[node2], w_a * p_s * p_q))
        k += 1
    N = len(nodes)
    P = np.zeros((N, N))
    for a_from, a_to, p in edges:
        P[a_from, a_to] += p
    alpha = np.zeros((N, game.n_profiles))
    r = np.zeros((N, game.n_players))
    for n, (s, q) in enumerate(nodes):
        alpha[n] = automaton.output_row(q)
        r[n] = alpha[n] @ game.payoffs[s]
    return ProductModel(game, automaton, nodes, index, P, r, alpha)


def discounted_value(model: ProductModel, lam: float) -> np.ndarray:
    """Exact discounted payoffs per node, shape (N, I)."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"discount factor {lam} outside [0, 1)")
    N = model.n_nodes
    return np.linalg.solve(np.eye(N) - lam * model.P, (1.0 - lam) * model.r)


def limit_value(model: ProductModel) -> np.ndarray:
    """Cesaro-limit payoffs per node, shape (N, I)."""
    classes, transient = recurrent_classes(model.P)
    absorb = absorption_probabilities(model.P, classes, transient)
    class_pay = np.zeros((len(classes), model.r.shape[1]))
    for j, cls in enumerate(classes):
        pi = stationary_distribution(model.P, cls)
        class_pay[j] = pi @ model.r[cls]
    return absorb @ class_pay


def node_frequency(model: ProductModel, node: int) -> np.ndarray:
    """Long-run (game state, profile) frequency from a start node."""
    classes, transient = recurrent_classes(model.P)
    absorb = absorption_probabilities(model.P, classes, transient)
    rho = np.zeros((model.game.n_states, model.game.n_profiles))
    for j, cls in enumerate(classes):
        w = absorb[node, j]
        if w <= 0.0:
            continue
        pi = stationary_distribution(model.P, cls)
        for pos, n in enumerate(cls):
            s, _ = model.nodes[n]
            rho[s] += w * pi[pos] * model.alpha[n]
    return rho


def reachable_nodes(model: ProductModel, from_states=None) -> list:
    """Node ids reachable (positive probability) from the given initial game
    states (default: all)."""
    from_states = range(model.game.n_states) if from_states is None else from_states
    seen = set()
    stack = [model.node_of(s) for s in from_states]
    seen.update(stack)
    while stack:
        n = stack.pop()
        for n2 in np.nonzero(model.P[n] > DIST_TOL)[0]:
            if int(n2) not in seen:
                seen.add(int(n2))
                stack.append(int(n2))
    return sorted(seen)
