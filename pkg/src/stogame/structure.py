"""State-space structure: irreducible sets, communicating sets, transient states.

A set C is communicating (relative to the enumerated per-state equilibrium
lists E) when it is closed under every listed equilibrium, every state can be
led to every other state without leaving C, and the per-player uniform
min-max values agree across C.  Maximal communicating sets partition part of
the state space; the remaining states are transient and carry a stationary
equilibrium profile that reaches the union of the maximal sets almost surely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._util import DIST_TOL, VALUE_SPREAD_TOL, json_ready
from .chains import reach_probability, recurrent_classes
from .game import StochasticGame, as_correlated_table, induced_chain

CLOSED_TOL = 1e-9
EXHAUSTIVE_LIMIT = 12


# ---------------------------------------------------------------------------
# Irreducible sets of a stationary strategy


@dataclass(frozen=True)
class IrreducibleSet:
    states: tuple


def irreducible_sets(game: StochasticGame, strategy) -> list:
    """Minimal closed sets (recurrent classes) of the induced state chain."""
    table = as_correlated_table(game, strategy)
    P, _ = induced_chain(game, table)
    classes, _ = recurrent_classes(P)
    return [IrreducibleSet(tuple(c)) for c in classes]


# ---------------------------------------------------------------------------
# Almost-sure reachability inside a protected set


def safe_profiles(game: StochasticGame, region) -> dict:
    """Per state in `region`, the action profiles keeping play inside it."""
    region = sorted(region)
    stay = game.stay_mass(region)
    return {
        s: [a for a in range(game.n_profiles) if stay[s, a] >= 1.0 - CLOSED_TOL]
        for s in region
    }


def almost_sure_reach(game: StochasticGame, region, targets):
    """States of `region` from which `targets` is reachable almost surely
    without leaving `region`, plus a pure stationary witness.

    Iterative pruning: drop states that cannot positively reach the targets
    through region-preserving profiles, shrink the allowed profiles, repeat.
    The witness decreases the distance-to-target layer with positive
    probability at every step.
    """
    targets = set(targets) & set(region)
    live = set(region)
    if not targets:
        return set(), {}
    while True:
        allowed = safe_profiles(game, live)
        reach = set(t for t in targets if t in live)
        grew = True
        while grew:
            grew = False
            for s in live - reach:
                for a in allowed.get(s, []):
                    support = np.nonzero(game.transitions[s, a] > DIST_TOL)[0]
                    if any(t in reach for t in support):
                        reach.add(s)
                        grew = True
                        break
        if reach == live:
            break
        live = reach
    reachable = live
    # Attractor witness: layered by shortest safe-support distance to a target.
    allowed = safe_profiles(game, reachable)
    layer = {t: 0 for t in targets if t in reachable}
    policy = {}
    frontier = set(layer)
    depth = 0
    while frontier:
        depth += 1
        new = set()
        for s in reachable - set(layer):
            for a in allowed.get(s, []):
                support = np.nonzero(game.transitions[s, a] > DIST_TOL)[0]
                if any(t in layer for t in support):
                    layer[s] = depth
                    policy[s] = a
                    new.add(s)
                    break
        if not new:
            break
        frontier = new
    return reachable, policy


def leads_in_set(game: StochasticGame, region, s: int, target: int):
    """Whether `s` leads to `target` inside `region`, with a pure witness."""
    if s == target:
        return True, {}
    reachable, policy = almost_sure_reach(game, region, {target})
    return (s in reachable), policy


@dataclass(frozen=True)
class TravelStrategy:
    """Pure stationary profile driving play into `targets` without leaving
    `region`; `policy` maps each state of region minus targets to a flat
    profile index."""

    region: tuple
    targets: tuple
    policy: dict

    def action_at(self, s: int) -> int:
        return self.policy[s]


def travel_strategy(game: StochasticGame, region, targets) -> TravelStrategy:
    region = tuple(sorted(region))
    targets = tuple(sorted(set(targets)))
    reachable, policy = almost_sure_reach(game, region, targets)
    missing = set(region) - set(targets) - reachable
    if missing:
        raise ValueError(
            f"states {sorted(missing)} cannot reach {list(targets)} inside {list(region)}"
        )
    policy = {s: policy[s] for s in set(region) - set(targets)}
    return TravelStrategy(region, targets, policy)


def verify_travel(game: StochasticGame, travel: TravelStrategy) -> float:
    """Minimum probability, over source states, of hitting the targets before
    leaving the region (should be 1)."""
    n = game.n_states
    P = np.zeros((n, n))
    outside = [s for s in range(n) if s not in travel.region]
    for s in travel.region:
        if s in travel.targets:
            P[s, s] = 1.0
        else:
            P[s] = game.transitions[s, travel.policy[s]]
    for s in outside:
        P[s, s] = 1.0
    h = reach_probability(P, set(travel.targets))
    sources = [s for s in travel.region if s not in travel.targets]
    return float(min((h[s] for s in sources), default=1.0))


# ---------------------------------------------------------------------------
# Closedness and communication under the enumerated equilibrium lists


def equilibrium_support_chain(game: StochasticGame, eq_sets) -> list:
    """Adjacency list: edge s -> s' iff some listed equilibrium at s moves
    there with positive probability."""
    adj = []
    for s in range(game.n_states):
        mass = np.zeros(game.n_states)
        for eq in eq_sets[s].items:
            mass += eq.correlated_row() @ game.transitions[s]
        adj.append(list(np.nonzero(mass > DIST_TOL)[0]))
    return adj


def minimal_closed_sets_under_E(game: StochasticGame, eq_sets) -> list:
    """Minimal closed sets of the equilibrium support chain (its bottom
    strongly connected components)."""
    adj = equilibrium_support_chain(game, eq_sets)
    from .chains import strongly_connected_components

    comps = strongly_connected_components(adj)
    out = []
    for comp in comps:
        members = set(comp)
        if all(all(t in members for t in adj[s]) for s in comp):
            out.append(tuple(sorted(comp)))
    out.sort()
    return out


def closed_under_E(game: StochasticGame, eq_sets, states) -> bool:
    idx = sorted(states)
    stay = game.stay_mass(idx)
    for s in idx:
        for eq in eq_sets[s].items:
            if float(eq.correlated_row() @ stay[s]) < 1.0 - CLOSED_TOL:
                return False
    return True


def value_spread(v1: np.ndarray, states) -> float:
    sub = v1[sorted(states)]
    return float(np.max(sub.max(axis=0) - sub.min(axis=0))) if len(sub) else 0.0


def mutually_leading(game: StochasticGame, states):
    """C.2 check: every state leads to every other inside `states`.

    Returns (ok, witnesses) with one travel policy per target state.
    """
    states = sorted(states)
    witnesses = {}
    for target in states:
        reachable, policy = almost_sure_reach(game, states, {target})
        if not set(states).issubset(reachable | {target}):
            return False, {}
        witnesses[target] = policy
    return True, witnesses


def is_communicating(game: StochasticGame, eq_sets, v1, states,
                     tol_v: float = VALUE_SPREAD_TOL):
    """All three communicating-set conditions; returns (ok, witnesses)."""
    if not states:
        return False, {}
    if not closed_under_E(game, eq_sets, states):
        return False, {}
    if value_spread(v1, states) > tol_v:
        return False, {}
    ok, witnesses = mutually_leading(game, states)
    return ok, witnesses


# ---------------------------------------------------------------------------
# Decomposition


@dataclass
class CommunicatingSet:
    states: tuple
    value: np.ndarray            # common per-player value on the set
    travel_witnesses: dict       # target state -> pure policy dict

    def to_dict(self) -> dict:
        return json_ready({
            "states": list(self.states),
            "value": self.value,
            "travel_witnesses": {
                str(t): {str(s): a for s, a in pol.items()}
                for t, pol in self.travel_witnesses.items()
            },
        })


@dataclass
class Decomposition:
    sets: list
    transient: tuple
    transient_profile: dict      # state -> chosen Equilibrium
    transient_reach: float       # min absorption probability into the union
    method: str = "greedy+exhaustive"
    notes: list = field(default_factory=list)

    @property
    def union(self) -> tuple:
        return tuple(sorted(s for c in self.sets for s in c.states))

    def set_of_state(self, s: int):
        for k, c in enumerate(self.sets):
            if s in c.states:
                return k
        return None

    def to_dict(self) -> dict:
        return json_ready({
            "sets": [c.to_dict() for c in self.sets],
            "transient": list(self.transient),
            "transient_profile": {
                str(s): [m for m in eq.mixes] for s, eq in self.transient_profile.items()
            },
            "transient_reach": self.transient_reach,
            "method": self.method,
            "notes": self.notes,
        })


def _closure_under_E(game, eq_sets, seed) -> tuple:
    adj = equilibrium_support_chain(game, eq_sets)
    seen = set(seed)
    stack = list(seed)
    while stack:
        s = stack.pop()
        for t in adj[s]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return tuple(sorted(seen))


def _greedy_maximal(game, eq_sets, v1, tol_v):
    seeds = minimal_closed_sets_under_E(game, eq_sets)
    sets = []
    for seed in seeds:
        ok, wit = is_communicating(game, eq_sets, v1, seed, tol_v)
        if ok:
            sets.append((seed, wit))
    changed = True
    while changed:
        changed = False
        # Try absorbing extra states, then pairwise merges; keep closures only.
        for idx, (cur, _) in enumerate(list(sets)):
            value = v1[cur[0]]
            for t in range(game.n_states):
                if t in cur:
                    continue
                if np.max(np.abs(v1[t] - value)) > tol_v:
                    continue
                cand = _closure_under_E(game, eq_sets, set(cur) | {t})
                if cand == cur:
                    continue
                ok, wit = is_communicating(game, eq_sets, v1, cand, tol_v)
                if ok and len(cand) > len(cur):
                    sets[idx] = (cand, wit)
                    changed = True
                    break
            if changed:
                break
        if changed:
            continue
        for i, j in itertools.combinations(range(len(sets)), 2):
            cand = _closure_under_E(game, eq_sets, set(sets[i][0]) | set(sets[j][0]))
            ok, wit = is_communicating(game, eq_sets, v1, cand, tol_v)
            if ok:
                keep = [sets[k] for k in range(len(sets)) if k not in (i, j)]
                keep.append((cand, wit))
                sets = keep
                changed = True
                break
    # Deduplicate and drop strict subsets.
    uniq = {}
    for cur, wit in sets:
        uniq[cur] = wit
    final = []
    for cur in sorted(uniq):
        if not any(set(cur) < set(other) for other in uniq if other != cur):
            final.append((cur, uniq[cur]))
    return final


def _exhaustive_maximal(game, eq_sets, v1, tol_v):
    n = game.n_states
    communicating = []
    for mask in range(1, 1 << n):
        states = tuple(s for s in range(n) if mask >> s & 1)
        if value_spread(v1, states) > tol_v:
            continue
        if not closed_under_E(game, eq_sets, states):
            continue
        ok, wit = mutually_leading(game, states)
        if ok:
            communicating.append((states, wit))
    maximal = []
    for states, wit in communicating:
        if not any(set(states) < set(other) for other, _ in communicating):
            maximal.append((states, wit))
    maximal.sort()
    return maximal


def maximal_communicating_sets(game: StochasticGame, eq_sets, v1,
                               tol_v: float = VALUE_SPREAD_TOL):
    """Maximal communicating sets, greedy merge with exhaustive verification
    at desk scale (exact for up to 12 states)."""
    greedy = _greedy_maximal(game, eq_sets, v1, tol_v)
    notes = []
    if game.n_states <= EXHAUSTIVE_LIMIT:
        exact = _exhaustive_maximal(game, eq_sets, v1, tol_v)
        if [c for c, _ in greedy] != [c for c, _ in exact]:
            notes.append("greedy merge differed from exhaustive scan; using exhaustive result")
        chosen = exact
    else:
        notes.append(f"more than {EXHAUSTIVE_LIMIT} states: greedy merge only")
        chosen = greedy
    # Overlaps should not survive maximality; resolve deterministically if
    # numerics produce them.
    cleaned = []
    used = set()
    for states, wit in chosen:
        if used & set(states):
            notes.append(f"dropped overlapping candidate {list(states)}")
            continue
        used |= set(states)
        cleaned.append((states, wit))
    out = [
        CommunicatingSet(states, v1[states[0]].copy(), wit)
        for states, wit in cleaned
    ]
    return out, notes


def transient_profile(game: StochasticGame, eq_sets, union):
    """Stationary equilibrium selection on transient states reaching the
    union of maximal communicating sets almost surely.

    Built by the standard inward induction: repeatedly add states having a
    listed equilibrium with positive mass into the region already covered.
    Raises if the induction stalls (enumerated equilibrium lists too coarse).
    """
    covered = set(union)
    choice = {}
    while True:
        grew = False
        for s in range(game.n_states):
            if s in covered:
                continue
            for eq in eq_sets[s].items:
                mass = float(sum(
                    (eq.correlated_row() @ game.transitions[s])[t] for t in covered
                ))
                if mass > DIST_TOL:
                    choice[s] = eq
                    covered.add(s)
                    grew = True
                    break
        if not grew:
            break
    stuck = set(range(game.n_states)) - covered
    if stuck:
        raise RuntimeError(
            f"transient induction stalled; states {sorted(stuck)} have no listed "
            "equilibrium moving toward the communicating union"
        )
    return choice


def transient_reach_probability(game: StochasticGame, choice, union) -> float:
    """Min over transient states of the probability of reaching `union`."""
    if not choice:
        return 1.0
    n = game.n_states
    P = np.zeros((n, n))
    for s in range(n):
        if s in choice:
            P[s] = choice[s].correlated_row() @ game.transitions[s]
        else:
            P[s, s] = 1.0
    h = reach_probability(P, set(union))
    return float(min(h[s] for s in choice))


def decompose(game: StochasticGame, eq_sets, v1,
              tol_v: float = VALUE_SPREAD_TOL) -> Decomposition:
    """Full decomposition: maximal communicating sets, transient states and
    the transient stationary profile."""
    sets, notes = maximal_communicating_sets(game, eq_sets, v1, tol_v)
    union = tuple(sorted(s for c in sets for s in c.states))
    choice = transient_profile(game, eq_sets, union)
    reach = transient_reach_probability(game, choice, union)
    transient = tuple(sorted(choice))
    return Decomposition(sets, transient, choice, reach, notes=notes)
