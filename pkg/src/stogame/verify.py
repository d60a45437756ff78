"""Exact verification of acceptability, individual rationality and structure.

All checks run on the finite product chain of (game state, machine state)
nodes, so the `for every history` quantifiers in the definitions reduce to
finitely many reachable product states.  Margins are recomputed from scratch,
never cached from synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import json_ready
from .automata import (
    JointAutomatonProfile,
    build_product_model,
    discounted_value,
    limit_value,
    reachable_nodes,
)
from .game import StationaryCorrelated, StationaryProfile, StochasticGame
from .oneshot import continuation_values
from .simulate import as_automaton
from .structure import Decomposition

DEFAULT_LAMBDA_GRID = (0.9, 0.99, 0.999, 0.9999, 0.99999)
MARGIN_TOL = 1e-9


def exact_discounted_payoff_automaton(game: StochasticGame, profile, s1: int,
                                      lam: float) -> np.ndarray:
    """Exact discounted payoff of an automaton (or stationary) strategy."""
    model = build_product_model(game, as_automaton(game, profile))
    return discounted_value(model, lam)[model.node_of(s1)]


# ---------------------------------------------------------------------------
# Acceptability


@dataclass
class AcceptabilityEntry:
    state: int
    player: int
    payoffs: list          # per grid discount factor
    margins: list
    limit_payoff: float
    limit_margin: float
    threshold_from: float | None   # smallest grid point from which all pass
    machine_state: int | None = None   # set by the per-product-state variant

    @property
    def ok(self) -> bool:
        return self.threshold_from is not None and self.limit_margin >= -MARGIN_TOL


@dataclass
class AcceptabilityReport:
    grid: list
    entries: list
    ok: bool
    threshold_from: float | None

    def to_dict(self) -> dict:
        return json_ready({
            "grid": self.grid,
            "ok": self.ok,
            "threshold_from": self.threshold_from,
            "entries": [{
                "state": e.state,
                "player": e.player,
                "payoffs": e.payoffs,
                "margins": e.margins,
                "limit_payoff": e.limit_payoff,
                "limit_margin": e.limit_margin,
                "threshold_from": e.threshold_from,
            } for e in self.entries],
        })


def check_w_acceptable(game: StochasticGame, profile, w: np.ndarray,
                       lam_grid=DEFAULT_LAMBDA_GRID,
                       subgame_perfect: bool = False) -> AcceptabilityReport:
    """Does the profile pay every player at least w_i(s) at every initial
    state for all grid discount factors from some point on, and in the limit?

    w is an (S, I) matrix.  The report records payoffs and margins per
    (state, player) and the smallest passing grid point.  With
    `subgame_perfect` the margins are checked from every reachable
    (game state, machine state) node, i.e. after every on-path history,
    rather than only at fresh starts.
    """
    model = build_product_model(game, as_automaton(game, profile))
    grid = list(lam_grid)
    by_lam = [discounted_value(model, lam) for lam in grid]
    lim = limit_value(model)
    if subgame_perfect:
        checkpoints = [(model.nodes[n][0], n) for n in reachable_nodes(model)]
    else:
        checkpoints = [(s, model.node_of(s)) for s in range(game.n_states)]
    entries = []
    for s, node in checkpoints:
        q = model.nodes[node][1]
        for i in range(game.n_players):
            pays = [float(v[node, i]) for v in by_lam]
            margins = [p - float(w[s, i]) for p in pays]
            limit_payoff = float(lim[node, i])
            limit_margin = limit_payoff - float(w[s, i])
            threshold = None
            if limit_margin >= -MARGIN_TOL:
                for k in range(len(grid)):
                    if all(m >= -MARGIN_TOL for m in margins[k:]):
                        threshold = grid[k]
                        break
            entries.append(AcceptabilityEntry(
                s, i, pays, margins, limit_payoff, limit_margin, threshold,
                machine_state=q if subgame_perfect else None))
    ok = all(e.ok for e in entries)
    threshold = max((e.threshold_from for e in entries), default=None) if ok else None
    return AcceptabilityReport(grid, entries, ok, threshold)


def check_minmax_acceptable(game: StochasticGame, profile, v1: np.ndarray,
                            eps: float, lam_grid=DEFAULT_LAMBDA_GRID,
                            subgame_perfect: bool = False) -> AcceptabilityReport:
    """Acceptability against the uniform min-max values lowered by eps."""
    return check_w_acceptable(game, profile, v1 - eps, lam_grid,
                              subgame_perfect=subgame_perfect)


# ---------------------------------------------------------------------------
# Average and limit acceptability


@dataclass
class AverageLimitReport:
    average_ok: bool
    limit_ok: bool
    discounted_ok: bool
    uniform_ok: bool
    average_threshold: dict        # per state, first stage count passing onward
    horizon: int
    details: dict

    def to_dict(self) -> dict:
        return json_ready({
            "average_ok": self.average_ok,
            "limit_ok": self.limit_ok,
            "discounted_ok": self.discounted_ok,
            "uniform_ok": self.uniform_ok,
            "average_threshold": self.average_threshold,
            "horizon": self.horizon,
            "details": self.details,
        })


def check_average_limit_acceptable(game: StochasticGame, profile, w: np.ndarray,
                                   horizon: int = 4000,
                                   lam_grid=DEFAULT_LAMBDA_GRID
                                   ) -> AverageLimitReport:
    """Finite-horizon average and limit-average acceptability.

    Expected k-stage averages are computed by exact transient analysis on the
    product chain for k up to `horizon`; the limit uses the recurrent-class
    decomposition.  The two must agree at the horizon for the average
    criterion to conclude.
    """
    model = build_product_model(game, as_automaton(game, profile))
    lim = limit_value(model)
    thresholds = {}
    average_ok = True
    stage_gap = 0.0
    for s in range(game.n_states):
        node = model.node_of(s)
        dist = np.zeros(model.n_nodes)
        dist[node] = 1.0
        cum = np.zeros(game.n_players)
        margins_ok_from = None
        for k in range(1, horizon + 1):
            cum += dist @ model.r
            avg = cum / k
            if np.all(avg - w[s] >= -MARGIN_TOL):
                if margins_ok_from is None:
                    margins_ok_from = k
            else:
                margins_ok_from = None
            dist = dist @ model.P
        thresholds[str(s)] = margins_ok_from
        if margins_ok_from is None:
            average_ok = False
        # Stage payoffs converge geometrically; once they sit on the limit,
        # averages beyond the horizon are mixtures of the verified horizon
        # average and the (separately checked) limit.
        stage_gap = max(stage_gap, float(np.max(np.abs(dist @ model.r - lim[node]))))
    converged = stage_gap <= 1e-6
    limit_ok = all(
        np.all(lim[model.node_of(s)] - w[s] >= -MARGIN_TOL)
        for s in range(game.n_states)
    )
    disc = check_w_acceptable(game, profile, w, lam_grid)
    average_ok = average_ok and converged and limit_ok
    return AverageLimitReport(
        average_ok=average_ok,
        limit_ok=limit_ok,
        discounted_ok=disc.ok,
        uniform_ok=bool(average_ok and limit_ok and disc.ok),
        average_threshold=thresholds,
        horizon=horizon,
        details={"tail_converged": converged, "stage_gap_at_horizon": stage_gap},
    )


# ---------------------------------------------------------------------------
# Individual rationality


@dataclass
class IRViolation:
    state: int
    machine_state: int
    player: int
    action: int
    deviation_value: float
    continuation: float

    @property
    def gain(self) -> float:
        return self.deviation_value - self.continuation


@dataclass
class IRReport:
    eps: float
    worst_gain: float
    checks: int
    violations: list
    ok: bool

    def to_dict(self) -> dict:
        return json_ready({
            "eps": self.eps,
            "worst_gain": self.worst_gain,
            "checks": self.checks,
            "ok": self.ok,
            "violations": [{
                "state": v.state, "machine_state": v.machine_state,
                "player": v.player, "action": v.action,
                "deviation_value": v.deviation_value,
                "continuation": v.continuation,
            } for v in self.violations],
        })


def check_individual_rationality(game: StochasticGame, profile, v1: np.ndarray,
                                 eps: float, tol: float = 1e-6) -> IRReport:
    """One-shot deviation audit at every reachable product state.

    A deviation by player i to action a is priced at the expected
    continuation min-max value u*(s, a, others' marginal); it must not beat
    the limit continuation payoff of conforming by more than eps.
    """
    model = build_product_model(game, as_automaton(game, profile))
    lim = limit_value(model)
    u_star = continuation_values(game, v1)
    shape = game.action_counts
    violations = []
    worst = -np.inf
    checks = 0
    for node in reachable_nodes(model):
        s, q = model.nodes[node]
        row = model.alpha[node]
        tensor_row = row.reshape(shape)
        for i in range(game.n_players):
            # Marginal of the other players under the node's correlated action.
            marg = np.moveaxis(tensor_row, i, 0).reshape(shape[i], -1).sum(axis=0)
            u_mat = np.moveaxis(
                u_star[s, :, i].reshape(shape), i, 0
            ).reshape(shape[i], -1)
            dev_values = u_mat @ marg
            cont = float(lim[node, i])
            for a_i in range(shape[i]):
                checks += 1
                gain = float(dev_values[a_i]) - cont
                worst = max(worst, gain)
                if gain > eps + tol:
                    violations.append(IRViolation(s, q, i, a_i,
                                                  float(dev_values[a_i]), cont))
    worst = float(worst) if checks else 0.0
    return IRReport(eps, worst, checks, violations, not violations)


# ---------------------------------------------------------------------------
# Block-value monotonicity (submartingale structure)


@dataclass
class BlockDriftEntry:
    kind: str                  # "transient" or "departing-set"
    state: int
    detail: dict
    drift: float               # min over players


@dataclass
class SubmartingaleReport:
    entries: list
    min_drift: float
    ok: bool
    tol: float

    def to_dict(self) -> dict:
        return json_ready({
            "min_drift": self.min_drift,
            "ok": self.ok,
            "tol": self.tol,
            "entries": [{
                "kind": e.kind, "state": e.state, "drift": e.drift,
                "detail": e.detail,
            } for e in self.entries],
        })


def check_submartingale(game: StochasticGame, profile: JointAutomatonProfile,
                        v1: np.ndarray, decomposition: Decomposition,
                        classifications, tol: float = 1e-6) -> SubmartingaleReport:
    """Expected value drift across block boundaries.

    Transient blocks last one stage; a departing set's block ends when play
    first leaves the set.  At every checkpoint the expected value at the next
    block start must not drop by more than `tol`.  Entry into a sustainable
    set ends the process, so no constraint applies there.
    """
    model = build_product_model(game, as_automaton(game, profile))
    entries = []
    for s in decomposition.transient:
        row = decomposition.transient_profile[s].correlated_row()
        nxt = row @ game.transitions[s]
        expected = nxt @ v1
        drift = float(np.min(expected - v1[s]))
        entries.append(BlockDriftEntry("transient", s, {
            "expected_next": json_ready(expected)}, drift))
    for k, (cset, cls) in enumerate(zip(decomposition.sets, classifications)):
        if cls.kind != "B":
            continue
        region = set(cset.states)
        mode_nodes = [n for n, (s, q) in enumerate(model.nodes)
                      if isinstance(model.automaton.labels[q], tuple)
                      and model.automaton.labels[q][0] == k]
        inside = [n for n in mode_nodes if model.nodes[n][0] in region]
        if not inside:
            continue
        pos = {n: j for j, n in enumerate(inside)}
        T = np.zeros((len(inside), len(inside)))
        b = np.zeros((len(inside), game.n_players))
        for n in inside:
            for n2 in np.nonzero(model.P[n] > 0)[0]:
                n2 = int(n2)
                p = model.P[n, n2]
                s2 = model.nodes[n2][0]
                if s2 in region and n2 in pos:
                    T[pos[n], pos[n2]] += p
                else:
                    b[pos[n]] += p * v1[s2]
        W = np.linalg.solve(np.eye(len(inside)) - T, b)
        for s in cset.states:
            node = model.index.get((s, model.automaton.init[s]))
            if node is None or node not in pos:
                continue
            drift = float(np.min(W[pos[node]] - cset.value))
            entries.append(BlockDriftEntry("departing-set", s, {
                "set": k, "expected_at_departure": json_ready(W[pos[node]])}, drift))
    min_drift = min((e.drift for e in entries), default=0.0)
    return SubmartingaleReport(entries, float(min_drift), min_drift >= -tol, tol)


# ---------------------------------------------------------------------------
# Automaton size audit


@dataclass
class SizeAudit:
    sizes: list
    bound: int
    ok: bool

    def to_dict(self) -> dict:
        return json_ready({"sizes": self.sizes, "bound": self.bound, "ok": self.ok})


def automaton_size_audit(game: StochasticGame, profile) -> SizeAudit:
    """Per-player machine sizes against the |S| x |I| bound (|S| for
    stationary strategies, which need only track the game state)."""
    if isinstance(profile, (StationaryProfile, StationaryCorrelated)):
        sizes = [game.n_states] * game.n_players
        bound = game.n_states
        return SizeAudit(sizes, bound, all(sz <= bound for sz in sizes))
    joint = profile.joint if isinstance(profile, JointAutomatonProfile) else profile
    sizes = [joint.size] * game.n_players
    bound = game.n_states * game.n_players
    return SizeAudit(sizes, bound, all(sz <= bound for sz in sizes))
