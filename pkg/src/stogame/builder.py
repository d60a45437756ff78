"""Synthesis of acceptable strategy profiles as small automata.

Each maximal communicating set is classified by two feasibility tests against
its common value v(C) lowered by the accepted loss eps:

* sustainable (type A): some convex combination of in-set recurrent frequency
  points meets the target; the set's machine cycles through the combination's
  atoms, travelling to each atom's class and switching atoms with a small
  per-stage probability so the long-run frequency approaches the combination.
* departing (type B): some distribution over single-deviation exits meets the
  target in expected continuation value; the set's machine cycles through the
  exits, travelling to each exit state and playing the exit profile with a
  tuned probability so the first exit played has exactly the planned law.

The global machine plays a stationary equilibrium selection on transient
states and dispatches into set machines as play enters them; every machine
state is a (mode, game state) pair, so each player's automaton has at most
|S| x |I| states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import DIST_TOL, json_ready
from .automata import JointAutomaton, JointAutomatonProfile
from .chains import limit_average_values, recurrent_classes
from .frequencies import (
    EnumerationSizeError,
    SustainPlan,
    enumerate_recurrent_points,
    max_slack_mixture,
    type_a_feasibility,
)
from .game import StationaryCorrelated, StochasticGame, mixes_to_correlated_row
from .oneshot import continuation_values
from .structure import CLOSED_TOL, Decomposition, travel_strategy

EXIT_SCALE_DEFAULT = 0.1
DELTA_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# Exits and companions


def exit_options(game: StochasticGame, region):
    """All (state, profile) pairs that may leave `region`, and the minimal
    exit mass among them (None when the region is fully closed)."""
    region = sorted(region)
    stay = game.stay_mass(region)
    exits = []
    masses = []
    for s in region:
        for a in range(game.n_profiles):
            leak = 1.0 - stay[s, a]
            if leak > 1e-12:
                exits.append((s, a))
                masses.append(leak)
    q_min = float(min(masses)) if masses else None
    return exits, q_min


def companion_action(game: StochasticGame, region, s: int, a: int):
    """A single-player switch of `a` that keeps play inside `region`.

    Returns (profile index, switching player) for the lexicographically first
    (player, action) switch, or None when every switch also exits.
    """
    region = sorted(region)
    stay = game.stay_mass(region)
    profile = list(game.profile_of_index(a))
    for i in range(game.n_players):
        original = profile[i]
        for b in range(game.action_counts[i]):
            if b == original:
                continue
            profile[i] = b
            cand = game.profile_index(profile)
            if stay[s, cand] >= 1.0 - CLOSED_TOL:
                profile[i] = original
                return cand, i
        profile[i] = original
    return None


# ---------------------------------------------------------------------------
# Exit-rate tuning


def solve_eta(beta, scale: float = EXIT_SCALE_DEFAULT) -> np.ndarray:
    """Per-phase exit-play probabilities whose first-played-exit law is beta.

    The cyclic scheme attempts exit l with probability eta_l once per cycle;
    `scale` is the total per-cycle exit-play probability.  Solving
    B_{l-1} eta_l = beta_l * scale with B_l = prod_{m<=l}(1 - eta_m)
    sequentially gives the closed form below.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.size == 0:
        raise ValueError("beta must be a nonempty vector")
    if np.any(beta <= 0.0) or abs(beta.sum() - 1.0) > 1e-9:
        raise ValueError("beta must be strictly positive and sum to 1")
    if not 0.0 < scale < 1.0:
        raise ValueError("scale must lie in (0, 1)")
    eta = np.empty_like(beta)
    remaining = 1.0
    for l, b in enumerate(beta):
        eta[l] = b * scale / remaining
        remaining -= b * scale
    return eta


def first_exit_distribution(eta) -> np.ndarray:
    """Closed-form law of the first exit played under the cyclic scheme."""
    eta = np.asarray(eta, dtype=float)
    silent = np.cumprod(1.0 - eta)
    before = np.concatenate([[1.0], silent[:-1]])
    mass = before * eta
    return mass / (1.0 - silent[-1])


def simulate_first_exit(eta, trials: int, seed: int) -> np.ndarray:
    """Empirical first-exit frequencies of the cyclic scheme.

    Simulated cycle by cycle: each pending trial draws the cycle outcome
    (fire at phase l, or a silent cycle) from the coin process's per-cycle
    law; silent trials go around again.
    """
    rng = np.random.default_rng(seed)
    eta = np.asarray(eta, dtype=float)
    silent = np.cumprod(1.0 - eta)
    before = np.concatenate([[1.0], silent[:-1]])
    per_cycle = np.concatenate([before * eta, [silent[-1]]])
    cum = np.cumsum(per_cycle)
    L = eta.size
    counts = np.zeros(L)
    pending = trials
    while pending:
        draws = np.searchsorted(cum, rng.random(pending))
        fired = np.bincount(draws[draws < L], minlength=L)
        counts += fired
        pending = int((draws == L).sum())
    return counts / trials


# ---------------------------------------------------------------------------
# Plans


@dataclass
class ExitPlan:
    """Tuned departure plan for one communicating set."""

    exits: list                  # (state, profile index) per atom
    companions: list             # profile index per atom
    deviators: list              # switching player per atom
    beta: np.ndarray
    eta: np.ndarray
    scale: float
    target: np.ndarray
    achieved: np.ndarray         # sum_l beta_l u*(exit_l)
    slack: float

    def to_dict(self) -> dict:
        return json_ready({
            "exits": [[s, a] for s, a in self.exits],
            "companions": self.companions,
            "deviators": self.deviators,
            "beta": self.beta,
            "eta": self.eta,
            "scale": self.scale,
            "target": self.target,
            "achieved": self.achieved,
            "slack": self.slack,
        })


def type_b_feasibility(game: StochasticGame, region, value, eps: float,
                       u_star: np.ndarray, scale: float = EXIT_SCALE_DEFAULT
                       ) -> ExitPlan | None:
    """Departure plan meeting value - eps in expected continuation value, or
    None.  Only exits admitting a companion switch are eligible."""
    exits, _ = exit_options(game, region)
    admissible = []
    for s, a in exits:
        found = companion_action(game, region, s, a)
        if found is not None:
            admissible.append((s, a, found[0], found[1]))
    if not admissible:
        return None
    target = np.asarray(value, dtype=float) - eps
    payoffs = np.stack([u_star[s, a] for s, a, _, _ in admissible])
    beta, slack = max_slack_mixture(payoffs, target)
    if slack < -1e-9:
        return None
    support = [l for l in range(len(admissible)) if beta[l] > 1e-12]
    chosen = [admissible[l] for l in support]
    weights = beta[support]
    weights = weights / weights.sum()
    achieved = weights @ np.stack([u_star[s, a] for s, a, _, _ in chosen])
    return ExitPlan(
        exits=[(s, a) for s, a, _, _ in chosen],
        companions=[c for _, _, c, _ in chosen],
        deviators=[d for _, _, _, d in chosen],
        beta=weights,
        eta=solve_eta(weights, scale),
        scale=scale,
        target=target,
        achieved=achieved,
        slack=slack,
    )


@dataclass
class Classification:
    kind: str                    # "A", "B" or "unclassifiable"
    sustain: SustainPlan | None = None
    exit_plan: ExitPlan | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return json_ready({
            "kind": self.kind,
            "sustain": None if self.sustain is None else self.sustain.to_dict(),
            "exit_plan": None if self.exit_plan is None else self.exit_plan.to_dict(),
            "diagnostics": self.diagnostics,
        })


def classify_set(game: StochasticGame, cset, v1: np.ndarray, eps: float,
                 u_star: np.ndarray | None = None) -> Classification:
    """Classify one communicating set.

    The sustainable test is accepted outright only when its best mixture
    clears v(C) - eps/2, so that the eps/2 lost to the cycling machine still
    leaves the v(C) - eps guarantee intact.  Otherwise the departure test is
    tried; a sustain plan with thinner slack is kept as a last resort (the
    verifier decides its fate) before declaring the set unclassifiable.
    """
    diagnostics = {}
    points = None
    try:
        points = enumerate_recurrent_points(game, cset.states)
        diagnostics["recurrent_points"] = len(points)
    except EnumerationSizeError as exc:
        diagnostics["recurrent_points_error"] = str(exc)
    plan_a = None
    if points:
        plan_a = type_a_feasibility(game, cset.states, cset.value, eps=eps,
                                    points=points)
        diagnostics["sustain_slack"] = None if plan_a is None else plan_a.slack
        if plan_a is not None and np.all(plan_a.achieved >= cset.value - eps / 2.0):
            return Classification("A", sustain=plan_a, diagnostics=diagnostics)
    if u_star is None:
        u_star = continuation_values(game, v1)
    plan_b = type_b_feasibility(game, cset.states, cset.value, eps, u_star)
    if plan_b is not None:
        diagnostics["exit_slack"] = plan_b.slack
        return Classification("B", exit_plan=plan_b, diagnostics=diagnostics)
    if plan_a is not None:
        diagnostics["note"] = "sustain plan kept with thin slack; departure test infeasible"
        return Classification("A", sustain=plan_a, diagnostics=diagnostics)
    exits, q_min = exit_options(game, cset.states)
    diagnostics.update({
        "exit_count": len(exits),
        "min_exit_mass": q_min,
        "note": "both feasibility tests failed at the requested slack",
    })
    return Classification("unclassifiable", diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Set machine fragments
#
# A fragment is a list of (phase, state) machine states for one communicating
# set together with output factors and a transition emitter.  The same
# fragment backs both the standalone per-set machine and the global assembly.


def _pure_factors(game: StochasticGame, a: int):
    profile = game.profile_of_index(a)
    mixes = []
    for i, count in enumerate(game.action_counts):
        m = np.zeros(count)
        m[profile[i]] = 1.0
        mixes.append(m)
    return tuple(mixes)


def _mixed_exit_factors(game: StochasticGame, companion: int, exit_profile: int,
                        deviator: int, eta: float):
    """Factors of (1 - eta) companion + eta exit; they differ only in the
    deviator's coordinate."""
    comp = game.profile_of_index(companion)
    exi = game.profile_of_index(exit_profile)
    mixes = []
    for i, count in enumerate(game.action_counts):
        m = np.zeros(count)
        if i == deviator:
            m[comp[i]] += 1.0 - eta
            m[exi[i]] += eta
        else:
            m[comp[i]] = 1.0
        mixes.append(m)
    return tuple(mixes)


@dataclass
class SetFragment:
    region: tuple
    phases: int
    local_states: list           # (phase, state) pairs, deterministic order
    factors: dict                # (phase, state) -> per-player mixes
    kind: str

    def machine_states(self):
        return self.local_states


def _travels_to_targets(game, region, target_sets):
    return [travel_strategy(game, region, targets) for targets in target_sets]


def build_type_a_fragment(game: StochasticGame, region, plan: SustainPlan,
                          delta: float) -> tuple:
    """Fragment plus transition emitter for a sustainable set.

    In phase l the machine travels to the atom's class and plays its profile;
    while inside the class it advances the phase with probability
    delta / weight_l per stage (single-atom plans advance never and are
    exact).
    """
    region = tuple(sorted(region))
    L = len(plan.atoms)
    travels = _travels_to_targets(game, region, [p.states for p in plan.atoms])
    local = [(l, s) for l in range(L) for s in region]
    factors = {}
    action_of = {}
    for l, atom in enumerate(plan.atoms):
        for s in region:
            if s in atom.actions:
                a = atom.actions[s]
            else:
                a = travels[l].policy[s]
            action_of[(l, s)] = a
            factors[(l, s)] = _pure_factors(game, a)

    def emit(transitions: dict, index_of, dispatch):
        for l, atom in enumerate(plan.atoms):
            advance = 0.0 if L == 1 else delta / float(plan.weights[l])
            for s in region:
                a = action_of[(l, s)]
                in_class = s in atom.actions
                for s_next in np.nonzero(game.transitions[s, a] > DIST_TOL)[0]:
                    s_next = int(s_next)
                    stay = index_of((l, s_next))
                    if in_class and advance > 0.0:
                        nxt = index_of(((l + 1) % L, s_next))
                        transitions[(index_of((l, s)), a, s_next)] = (
                            (stay, 1.0 - advance), (nxt, advance))
                    else:
                        transitions[(index_of((l, s)), a, s_next)] = ((stay, 1.0),)

    return SetFragment(region, L, local, factors, "A"), emit


def build_type_b_fragment(game: StochasticGame, region, plan: ExitPlan) -> tuple:
    """Fragment plus transition emitter for a departing set.

    In phase l the machine travels to the exit state and plays the companion
    profile tilted toward the exit profile with probability eta_l.  Once the
    exit profile is actually played the machine re-dispatches on the realized
    next state (phase 1 if play happens to stay in the set), so the
    first-played-exit law is exactly the planned one from every entry state.
    """
    region = tuple(sorted(region))
    L = len(plan.exits)
    travels = _travels_to_targets(game, region, [{s} for s, _ in plan.exits])
    local = [(l, s) for l in range(L) for s in region]
    factors = {}
    for l in range(L):
        exit_state, exit_profile = plan.exits[l]
        for s in region:
            if s == exit_state:
                factors[(l, s)] = _mixed_exit_factors(
                    game, plan.companions[l], exit_profile, plan.deviators[l],
                    float(plan.eta[l]))
            else:
                factors[(l, s)] = _pure_factors(game, travels[l].policy[s])

    def emit(transitions: dict, index_of, dispatch):
        for l in range(L):
            exit_state, exit_profile = plan.exits[l]
            companion = plan.companions[l]
            for s in region:
                q = index_of((l, s))
                if s != exit_state:
                    a = travels[l].policy[s]
                    for s_next in np.nonzero(game.transitions[s, a] > DIST_TOL)[0]:
                        transitions[(q, a, int(s_next))] = ((index_of((l, int(s_next))), 1.0),)
                    continue
                # Companion keeps play inside; advance the phase.
                nxt_phase = (l + 1) % L
                for s_next in np.nonzero(game.transitions[s, companion] > DIST_TOL)[0]:
                    transitions[(q, companion, int(s_next))] = (
                        (index_of((nxt_phase, int(s_next))), 1.0),)
                # The exit profile ends the block: re-dispatch wherever play
                # lands (inside the set this restarts at phase 1).
                for s_next in np.nonzero(game.transitions[s, exit_profile] > DIST_TOL)[0]:
                    transitions[(q, exit_profile, int(s_next))] = (
                        (dispatch(int(s_next)), 1.0),)

    return SetFragment(region, L, local, factors, "B"), emit


# ---------------------------------------------------------------------------
# Exact per-set analysis (first-exit law, departure values, sustain payoff)


def _type_b_system(game: StochasticGame, region, plan: ExitPlan):
    """Transient system of the departing machine restricted to the set."""
    region = tuple(sorted(region))
    L = len(plan.exits)
    travels = _travels_to_targets(game, region, [{s} for s, _ in plan.exits])
    idx = {(l, s): k for k, (l, s) in enumerate(
        (l, s) for l in range(L) for s in region)}
    n = len(idx)
    in_region = set(region)
    M = np.zeros((n, n))            # strictly pre-exit-play dynamics
    exit_mass = np.zeros((n, L))    # probability of playing exit l now
    restart = np.zeros((n, n))      # exit played but play stayed inside
    depart = np.zeros((n, game.n_states))  # exit played and play left
    for l in range(L):
        exit_state, exit_profile = plan.exits[l]
        companion = plan.companions[l]
        eta = float(plan.eta[l])
        for s in region:
            k = idx[(l, s)]
            if s != exit_state:
                a = travels[l].policy[s]
                for s_next, p in enumerate(game.transitions[s, a]):
                    if p > DIST_TOL:
                        M[k, idx[(l, s_next)]] += p
                continue
            exit_mass[k, l] = eta
            for s_next, p in enumerate(game.transitions[s, companion]):
                if p > DIST_TOL:
                    M[k, idx[((l + 1) % L, s_next)]] += (1.0 - eta) * p
            for s_next, p in enumerate(game.transitions[s, exit_profile]):
                if p <= DIST_TOL:
                    continue
                if s_next in in_region:
                    restart[k, idx[(0, s_next)]] += eta * p
                else:
                    depart[k, s_next] += eta * p
    return idx, M, exit_mass, restart, depart


def exit_play_law(game: StochasticGame, region, plan: ExitPlan) -> np.ndarray:
    """Exact first-played-exit law per entry state (rows, one per region
    state) by absorption analysis; every row should equal plan.beta."""
    region = tuple(sorted(region))
    idx, M, exit_mass, restart, _ = _type_b_system(game, region, plan)
    Q = M  # exit plays absorb for first-play accounting
    B = np.linalg.solve(np.eye(len(idx)) - Q, exit_mass)
    return np.stack([B[idx[(0, s)]] for s in region])


def departure_values(game: StochasticGame, region, plan: ExitPlan,
                     v1: np.ndarray):
    """Expected uniform min-max value at the first state outside the set,
    per entry state, plus the probability of never leaving."""
    region = tuple(sorted(region))
    idx, M, _, restart, depart = _type_b_system(game, region, plan)
    n = len(idx)
    T = M + restart
    b_val = depart @ v1
    W = np.linalg.solve(np.eye(n) - T, b_val)
    leave = np.linalg.solve(np.eye(n) - T, depart.sum(axis=1))
    rows = [idx[(0, s)] for s in region]
    return np.stack([W[k] for k in rows]), float(1.0 - min(leave[k] for k in rows))


def _type_a_chain(game: StochasticGame, region, plan: SustainPlan, delta: float):
    region = tuple(sorted(region))
    L = len(plan.atoms)
    travels = _travels_to_targets(game, region, [p.states for p in plan.atoms])
    idx = {(l, s): k for k, (l, s) in enumerate(
        (l, s) for l in range(L) for s in region)}
    n = len(idx)
    P = np.zeros((n, n))
    r = np.zeros((n, game.n_players))
    for l, atom in enumerate(plan.atoms):
        advance = 0.0 if L == 1 else delta / float(plan.weights[l])
        for s in region:
            k = idx[(l, s)]
            a = atom.actions.get(s, travels[l].policy.get(s))
            r[k] = game.payoffs[s, a]
            in_class = s in atom.actions
            for s_next, p in enumerate(game.transitions[s, a]):
                if p <= DIST_TOL:
                    continue
                if in_class and advance > 0.0:
                    P[k, idx[(l, s_next)]] += p * (1.0 - advance)
                    P[k, idx[((l + 1) % L, s_next)]] += p * advance
                else:
                    P[k, idx[(l, s_next)]] += p
    return idx, P, r


def sustain_payoff(game: StochasticGame, region, plan: SustainPlan,
                   delta: float) -> np.ndarray:
    """Exact long-run payoff of the sustainable machine, per entry state."""
    region = tuple(sorted(region))
    idx, P, r = _type_a_chain(game, region, plan, delta)
    vals = limit_average_values(P, r)
    return np.stack([vals[idx[(0, s)]] for s in region])


def sustain_target(value, plan: SustainPlan, eps: float) -> np.ndarray:
    """Payoff floor for a sustainable-set machine: within eps/2 of the plan,
    and above v(C) - eps with a cushion whenever the plan leaves room."""
    target = np.maximum(plan.achieved - eps / 2.0,
                        np.asarray(value, dtype=float) - eps + 1e-4)
    return np.minimum(target, plan.achieved - 1e-4)


def tune_type_a_delta(game: StochasticGame, region, plan: SustainPlan,
                      eps: float, value=None, floor: float = DELTA_FLOOR):
    """Halve delta from weight/2 until every entry payoff clears the sustain
    target."""
    if len(plan.atoms) == 1:
        return 0.0, sustain_payoff(game, region, plan, 0.0)
    value = plan.target + eps if value is None else value
    target = sustain_target(value, plan, eps)
    delta = float(plan.weights.min()) / 2.0
    while True:
        payoff = sustain_payoff(game, region, plan, delta)
        if np.all(payoff >= target - 1e-9):
            return delta, payoff
        delta /= 2.0
        if delta < floor:
            raise RuntimeError(
                f"sustainable-set tuning failed on region {list(region)}: "
                f"payoff {payoff.min(axis=0)} below target {target} at the delta floor"
            )


# ---------------------------------------------------------------------------
# Standalone per-set machines and the global assembly


def _uniform_factors(game: StochasticGame):
    return tuple(np.full(k, 1.0 / k) for k in game.action_counts)


def _finish_machine(game, labels, factors_list, transitions, init, meta,
                    coin_note) -> JointAutomatonProfile:
    outputs = np.stack([mixes_to_correlated_row(f) for f in factors_list])
    joint = JointAutomaton(
        labels=labels,
        outputs=outputs,
        factors=factors_list,
        transitions=transitions,
        init=init,
        coin_note=coin_note,
        meta=meta,
    )
    return JointAutomatonProfile(joint, meta=meta)


def _standalone(game: StochasticGame, fragment: SetFragment, emit, meta
                ) -> JointAutomatonProfile:
    """Wrap one set fragment into a total machine: outside states track the
    game state and play uniformly (off-set behavior is not part of the set's
    contract)."""
    labels = list(fragment.local_states)
    outside = [s for s in range(game.n_states) if s not in fragment.region]
    labels.extend(("outside", s) for s in outside)
    index = {lab: k for k, lab in enumerate(labels)}
    init = {}
    for s in range(game.n_states):
        init[s] = index[(0, s)] if s in fragment.region else index[("outside", s)]
    factors_list = []
    for lab in labels:
        if lab in fragment.factors:
            factors_list.append(fragment.factors[lab])
        else:
            factors_list.append(_uniform_factors(game))
    transitions = {}
    emit(transitions, lambda lab: index[lab], lambda s: init[s])
    coin = ("phase coins are public and shared; exit tilts are the deviating "
            "player's private action randomization")
    return _finish_machine(game, labels, factors_list, transitions, init, meta, coin)


def build_type_b_automaton(game: StochasticGame, cset, plan: ExitPlan,
                           v1: np.ndarray | None = None) -> JointAutomatonProfile:
    """Standalone departing machine for one communicating set."""
    fragment, emit = build_type_b_fragment(game, cset.states, plan)
    meta = {"kind": "B", "region": list(cset.states), "plan": plan.to_dict()}
    profile = _standalone(game, fragment, emit, meta)
    law = exit_play_law(game, cset.states, plan)
    profile.meta["exit_law_error"] = float(np.max(np.abs(law - plan.beta)))
    if v1 is not None:
        W, leak = departure_values(game, cset.states, plan, v1)
        profile.meta["departure_values"] = json_ready(W)
        profile.meta["stay_forever_probability"] = leak
    return profile


def build_type_a_automaton(game: StochasticGame, cset, plan: SustainPlan,
                           eps: float) -> JointAutomatonProfile:
    """Standalone sustainable machine for one communicating set."""
    delta, payoff = tune_type_a_delta(game, cset.states, plan, eps, value=cset.value)
    fragment, emit = build_type_a_fragment(game, cset.states, plan, delta)
    meta = {
        "kind": "A",
        "region": list(cset.states),
        "delta": delta,
        "entry_payoffs": json_ready(payoff),
    }
    return _standalone(game, fragment, emit, meta)


def assemble_profile(game: StochasticGame, decomposition: Decomposition,
                     classifications, eps: float) -> JointAutomatonProfile:
    """Global machine for the whole game.

    Transient states re-dispatch every stage under the stationary equilibrium
    selection; set machines take over while play stays in their set.
    """
    bad = [k for k, c in enumerate(classifications) if c.kind == "unclassifiable"]
    if bad:
        raise RuntimeError(
            f"cannot assemble: communicating sets {bad} are unclassifiable"
        )
    labels = [("tr", s) for s in decomposition.transient]
    fragments = []
    for k, (cset, cls) in enumerate(zip(decomposition.sets, classifications)):
        if cls.kind == "A":
            delta, payoff = tune_type_a_delta(game, cset.states, cls.sustain, eps,
                                              value=cset.value)
            fragment, emit = build_type_a_fragment(game, cset.states, cls.sustain, delta)
            extra = {"delta": delta, "entry_payoffs": json_ready(payoff)}
        else:
            fragment, emit = build_type_b_fragment(game, cset.states, cls.exit_plan)
            extra = {}
        fragments.append((k, fragment, emit, extra))
        labels.extend((k, l, s) for l, s in fragment.local_states)
    index = {lab: pos for pos, lab in enumerate(labels)}

    init = {}
    for s in range(game.n_states):
        set_id = decomposition.set_of_state(s)
        init[s] = index[("tr", s)] if set_id is None else index[(set_id, 0, s)]

    factors_list = []
    for lab in labels:
        if lab[0] == "tr":
            factors_list.append(decomposition.transient_profile[lab[1]].mixes)
        else:
            k, l, s = lab
            factors_list.append(fragments[k][1].factors[(l, s)])

    transitions = {}
    for k, fragment, emit, _ in fragments:
        emit(transitions,
             lambda lab, _k=k: index[(_k,) + lab],
             lambda s: init[s])
    # Transient machine states carry no stored transitions: every input
    # re-dispatches through the initial-state map (the machine fallback).

    meta = {
        "eps": eps,
        "kinds": [c.kind for c in classifications],
        "regions": [list(c.states) for c in decomposition.sets],
        "transient": list(decomposition.transient),
        "set_meta": [extra for _, _, _, extra in fragments],
    }
    coin = ("phase-advance and phase-cycling coins are public and shared by "
            "all players' machines; action mixes are private randomizations")
    return _finish_machine(game, labels, factors_list, transitions, init, meta, coin)


# ---------------------------------------------------------------------------
# Stationary correlated construction


def _safe_profile_rows(game: StochasticGame, region):
    """Uniform mixture over region-preserving profiles, per region state."""
    region = sorted(region)
    stay = game.stay_mass(region)
    rows = {}
    for s in region:
        safe = [a for a in range(game.n_profiles) if stay[s, a] >= 1.0 - CLOSED_TOL]
        row = np.zeros(game.n_profiles)
        row[safe] = 1.0 / len(safe)
        rows[s] = row
    return rows


def _region_limit_payoff(game, region, rows):
    region = sorted(region)
    P = np.zeros((len(region), len(region)))
    r = np.zeros((len(region), game.n_players))
    pos = {s: k for k, s in enumerate(region)}
    for s in region:
        row = rows[s]
        r[pos[s]] = row @ game.payoffs[s]
        trans = row @ game.transitions[s]
        for t in region:
            P[pos[s], pos[t]] = trans[t]
    vals = limit_average_values(P, r)
    return {s: vals[pos[s]] for s in region}, P, pos


def _correlated_type_a_rows(game: StochasticGame, region, plan: SustainPlan,
                            eps: float, value=None, floor: float = DELTA_FLOOR) -> dict:
    """Stationary correlated rows sustaining the plan payoff inside the set.

    The plan's mixed frequency is itself invariant for its conditional kernel;
    when that kernel splits into several recurrent classes, a small per-class
    uniform-travel blend is tuned until the long-run payoff clears the target
    from every entry state.
    """
    region = tuple(sorted(region))
    rho = np.zeros((game.n_states, game.n_profiles))
    for atom, w in zip(plan.atoms, plan.weights):
        rho += w * atom.freq.rho
    marginal = rho.sum(axis=1)
    travel_rows = _safe_profile_rows(game, region)
    support = [s for s in region if marginal[s] > 1e-12]
    base = {}
    fill = None
    for s in region:
        if s in support:
            base[s] = rho[s] / marginal[s]
        else:
            if fill is None:
                fill = travel_strategy(game, region, support)
            row = np.zeros(game.n_profiles)
            row[fill.policy[s]] = 1.0
            base[s] = row
    target = sustain_target(plan.target + eps if value is None else value,
                            plan, eps)

    def meets(payoff):
        return all(np.all(payoff[s] >= target - 1e-9) for s in region)

    payoff, P, pos = _region_limit_payoff(game, region, base)
    if meets(payoff):
        return base

    # The conditional kernel of the mixed frequency splits into several
    # recurrent classes: blend a per-class travel rate and steer the class
    # occupations toward the plan's class masses.
    classes, _ = recurrent_classes(P)
    ordered = sorted(region)
    class_states = [[ordered[k] for k in cls] for cls in classes]
    goal = np.array([sum(marginal[s] for s in cls) for cls in class_states])
    goal = goal / goal.sum() if goal.sum() > 0 else np.full(len(classes), 1.0 / len(classes))
    kappa = np.ones(len(classes))
    theta = 1e-2
    for _ in range(200):
        rows = dict(base)
        for j, cls in enumerate(class_states):
            blend = min(0.5, theta * kappa[j])
            for s in cls:
                rows[s] = (1.0 - blend) * base[s] + blend * travel_rows[s]
        payoff, P2, pos = _region_limit_payoff(game, region, rows)
        if meets(payoff):
            return rows
        occ = limit_average_values(P2, np.eye(len(pos)))
        weights = np.array([
            occ[:, [pos[s] for s in cls]].sum(axis=1).mean()
            for cls in class_states
        ])
        weights = np.clip(weights, 1e-12, None)
        kappa *= np.clip(weights / goal, 0.25, 4.0)
        theta *= 0.8
        if theta < floor:
            break
    raise RuntimeError(
        f"stationary-correlated tuning failed on region {list(region)}"
    )


def _correlated_type_b_rows(game: StochasticGame, region, plan: ExitPlan,
                            eps: float) -> dict:
    """Stationary correlated rows reproducing the planned exit law.

    Non-exit states play the uniform mixture of the plan's travel profiles;
    exit states blend that mixture with the exit profiles.  Iterative scaling
    matches the first-played-exit law to the plan; entry dependence is driven
    out by shrinking the total exit weight.
    """
    region = tuple(sorted(region))
    L = len(plan.exits)
    travels = _travels_to_targets(game, region, [{s} for s, _ in plan.exits])
    safe_rows = _safe_profile_rows(game, region)
    z_rows = {}
    for s in region:
        row = np.zeros(game.n_profiles)
        hits = 0
        for trav in travels:
            if s in trav.policy:
                row[trav.policy[s]] += 1.0
                hits += 1
        z_rows[s] = row / hits if hits else safe_rows[s]

    pos = {s: k for k, s in enumerate(region)}
    exit_index = {}
    for l, (s, a) in enumerate(plan.exits):
        exit_index.setdefault(s, []).append(l)

    def build_rows(w):
        rows = {s: z_rows[s] for s in region}
        for s, ls in exit_index.items():
            total = sum(w[l] for l in ls)
            row = z_rows[s] * (1.0 - total)
            for l in ls:
                row = row.copy()
                row[plan.exits[l][1]] += w[l]
            rows[s] = row
        return rows

    def first_exit_law(rows):
        n = len(region)
        M = np.zeros((n, n))
        R = np.zeros((n, L))
        lookup = {(s, a): l for l, (s, a) in enumerate(plan.exits)}
        for s in region:
            row = rows[s]
            for a in np.nonzero(row > DIST_TOL)[0]:
                a = int(a)
                if (s, a) in lookup:
                    R[pos[s], lookup[(s, a)]] += row[a]
                    continue
                trans = game.transitions[s, a]
                for t in region:
                    M[pos[s], pos[t]] += row[a] * trans[t]
        return np.linalg.solve(np.eye(n) - M, R)

    w = plan.scale * plan.beta
    best_rows = None
    best_err = np.inf
    for _ in range(400):
        rows = build_rows(w)
        B = first_exit_law(rows)
        err = float(np.max(np.abs(B - plan.beta)))
        if err < best_err:
            best_rows, best_err = rows, err
        if err <= 1e-9:
            return rows
        mean_law = B.mean(axis=0)
        mean_law /= mean_law.sum()
        mismatch = float(np.max(np.abs(mean_law - plan.beta)))
        if mismatch > err / 4.0:
            w = w * np.clip(plan.beta / np.clip(mean_law, 1e-12, None), 0.5, 2.0)
        else:
            # Law already centered: entry dependence dominates, slow down.
            w = w * 0.5
        w = np.clip(w, 1e-14, 0.9 / L)
    if best_err <= 1e-7:
        return best_rows
    raise RuntimeError(
        f"exit-law tuning failed on region {list(region)}: residual {best_err:.2e}"
    )


def build_correlated_stationary(game: StochasticGame,
                                decomposition: Decomposition,
                                classifications, eps: float
                                ) -> StationaryCorrelated:
    """Stationary correlated strategy matching the per-set plans: transient
    states keep the equilibrium selection, sustainable sets play their tuned
    occupation rows, departing sets their tuned exit blends."""
    bad = [k for k, c in enumerate(classifications) if c.kind == "unclassifiable"]
    if bad:
        raise RuntimeError(
            f"cannot build stationary correlated strategy: sets {bad} unclassifiable"
        )
    table = np.zeros((game.n_states, game.n_profiles))
    for s in decomposition.transient:
        table[s] = decomposition.transient_profile[s].correlated_row()
    for cset, cls in zip(decomposition.sets, classifications):
        if cls.kind == "A":
            rows = _correlated_type_a_rows(game, cset.states, cls.sustain, eps,
                                           value=cset.value)
        else:
            rows = _correlated_type_b_rows(game, cset.states, cls.exit_plan, eps)
        for s, row in rows.items():
            table[s] = row
    return StationaryCorrelated(table)
