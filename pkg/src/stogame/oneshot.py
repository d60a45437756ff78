"""Auxiliary one-shot games at each state and their equilibrium sets.

The auxiliary game at state s pays each player the expected next-state
uniform min-max value.  Downstream structure analysis quantifies over an
enumerated, finite list of equilibria: all pure ones (exact scan), all
regular mixed ones for two players (support enumeration), and damped
best-response fixed points for three or more players (tagged approximate).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._util import VALUE_INEQ_TOL, json_ready
from .game import StochasticGame, mixes_to_correlated_row

EXACT_EQ_TOL = 1e-9
APPROX_EQ_TOL = 1e-6
BR_RESTARTS = 20
BR_STEPS = 600


@dataclass(frozen=True)
class AuxiliaryGame:
    """One-shot game at `state` with payoff table of shape (A, I)."""

    state: int
    table: np.ndarray
    action_counts: tuple

    def tensor(self) -> np.ndarray:
        """Payoffs reshaped to (A_1, ..., A_n, I)."""
        return self.table.reshape(self.action_counts + (self.table.shape[1],))


def build_auxiliary_game(game: StochasticGame, s: int, v1: np.ndarray) -> AuxiliaryGame:
    """v1 is the (S, I) matrix of uniform min-max values."""
    table = game.transitions[s] @ v1
    return AuxiliaryGame(s, table, game.action_counts)


def continuation_values(game: StochasticGame, v1: np.ndarray) -> np.ndarray:
    """Expected next-state value of every (state, profile) pair, (S, A, I).

    Entry [s, a] is the value vector a one-shot deviation is priced at:
    the auxiliary-game payoff table at s is exactly the slice [s]."""
    return np.einsum("sat,ti->sai", game.transitions, v1)


def profile_value(aux: AuxiliaryGame, mixes) -> np.ndarray:
    """Multilinear payoff vector of a per-player mixed profile."""
    row = mixes_to_correlated_row(mixes)
    return row @ aux.table


def _deviation_values(aux: AuxiliaryGame, mixes, i: int) -> np.ndarray:
    """Payoff of each pure action of player i against the others' mixes."""
    out = aux.tensor()[..., i]
    axes = [k for k in range(len(mixes)) if k != i]
    # Contract the other players' mixes; earlier contractions shift later axes.
    for pos, k in enumerate(axes):
        axis = k - sum(1 for j in axes[:pos] if j < k)
        out = np.moveaxis(out, axis, -1) @ mixes[k]
    return out


def regret(aux: AuxiliaryGame, mixes) -> float:
    """Worst unilateral improvement over the profile's own payoff."""
    base = profile_value(aux, mixes)
    worst = 0.0
    for i in range(len(mixes)):
        devs = _deviation_values(aux, mixes, i)
        worst = max(worst, float(devs.max() - base[i]))
    return worst


@dataclass(frozen=True)
class Equilibrium:
    mixes: tuple
    exact: bool
    regret: float

    def correlated_row(self) -> np.ndarray:
        return mixes_to_correlated_row(self.mixes)

    def supports(self) -> tuple:
        return tuple(tuple(np.nonzero(m > 1e-9)[0]) for m in self.mixes)


@dataclass
class EquilibriumSet:
    state: int
    items: list
    exact_tol: float = EXACT_EQ_TOL
    approx_tol: float = APPROX_EQ_TOL
    notes: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def to_dict(self) -> dict:
        return json_ready({
            "state": self.state,
            "equilibria": [
                {"mixes": [m for m in eq.mixes], "exact": eq.exact, "regret": eq.regret}
                for eq in self.items
            ],
            "notes": self.notes,
        })


def _pure_equilibria(aux: AuxiliaryGame, tol: float):
    counts = aux.action_counts
    tensor = aux.tensor()
    found = []
    for profile in itertools.product(*[range(k) for k in counts]):
        ok = True
        for i, count in enumerate(counts):
            line = tensor[profile[:i] + (slice(None),) + profile[i + 1:] + (i,)]
            if line.max() > line[profile[i]] + tol:
                ok = False
                break
        if ok:
            mixes = []
            for i, count in enumerate(counts):
                m = np.zeros(count)
                m[profile[i]] = 1.0
                mixes.append(m)
            found.append(tuple(mixes))
    return found


def _support_enumeration_2p(aux: AuxiliaryGame, tol: float):
    """All regular mixed equilibria of a two-player game, one representative
    per support pair (equal support sizes >= 2)."""
    m, n = aux.action_counts
    A = aux.tensor()[..., 0]   # row player payoffs, shape (m, n)
    B = aux.tensor()[..., 1]
    found = []
    for k in range(2, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                # Column mix y makes the row player indifferent on `rows`,
                # row mix x makes the column player indifferent on `cols`.
                try:
                    y = _indifference_solve(A, rows, cols)
                    x = _indifference_solve(B.T, cols, rows)
                except np.linalg.LinAlgError:
                    continue
                if x is None or y is None:
                    continue
                xm = np.zeros(m)
                ym = np.zeros(n)
                xm[list(rows)] = x
                ym[list(cols)] = y
                mixes = (xm, ym)
                if regret(aux, mixes) <= tol:
                    found.append(mixes)
    return found


def _indifference_solve(M, own_support, opp_support):
    """Solve for the opponent mix on opp_support equalizing M over own_support."""
    k = len(own_support)
    sub = M[np.ix_(own_support, opp_support)]
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = sub
    lhs[:k, k] = -1.0
    lhs[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.solve(lhs, rhs)
    w = sol[:k]
    if np.any(w < -1e-9):
        return None
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def _best_response_dynamics(aux: AuxiliaryGame, tol: float, rng):
    counts = aux.action_counts
    found = []
    for _ in range(BR_RESTARTS):
        mixes = [rng.dirichlet(np.ones(k)) for k in counts]
        for t in range(BR_STEPS):
            step = 2.0 / (t + 3.0)
            for i, k in enumerate(counts):
                devs = _deviation_values(aux, mixes, i)
                best = np.zeros(k)
                best[int(np.argmax(devs))] = 1.0
                mixes[i] = (1.0 - step) * mixes[i] + step * best
        r = regret(aux, mixes)
        if r <= tol:
            found.append((tuple(np.asarray(m) for m in mixes), r))
    return found


def _canonical_key(mixes) -> tuple:
    return tuple(tuple(round(float(v), 8) for v in m) for m in mixes)


def enumerate_equilibria(aux: AuxiliaryGame, exact_tol: float = EXACT_EQ_TOL,
                         approx_tol: float = APPROX_EQ_TOL, seed: int = 0
                         ) -> EquilibriumSet:
    """Enumerate a finite equilibrium list for the auxiliary game.

    Pure equilibria always come from an exact scan; for two players, regular
    mixed equilibria are added by support enumeration.  For three or more
    players (or as a two-player fallback) damped best-response dynamics from
    random restarts supply approximate equilibria.  An empty result is
    reported as such, never fabricated.
    """
    items = []
    notes = []
    n_players = len(aux.action_counts)
    for mixes in _pure_equilibria(aux, exact_tol):
        items.append(Equilibrium(tuple(mixes), True, regret(aux, mixes)))
    if n_players == 2:
        for mixes in _support_enumeration_2p(aux, exact_tol):
            items.append(Equilibrium(mixes, True, regret(aux, mixes)))
    if n_players >= 3 or not items:
        rng = np.random.default_rng(seed)
        approx = _best_response_dynamics(aux, approx_tol, rng)
        for mixes, r in approx:
            items.append(Equilibrium(mixes, False, r))
        if n_players >= 3 and not items:
            notes.append("no equilibrium found by pure scan or best-response restarts")

    seen = {}
    for eq in items:
        key = _canonical_key(eq.mixes)
        if key not in seen or (eq.exact and not seen[key].exact):
            seen[key] = eq
    ordered = [seen[k] for k in sorted(seen)]
    if not ordered:
        notes.append("equilibrium list is empty")
    return EquilibriumSet(aux.state, ordered, exact_tol, approx_tol, notes)


def enumerate_all_states(game: StochasticGame, v1: np.ndarray, **kw) -> list:
    """EquilibriumSet for every state, in state order."""
    return [
        enumerate_equilibria(build_auxiliary_game(game, s, v1), **kw)
        for s in range(game.n_states)
    ]


def check_value_inequality(aux: AuxiliaryGame, mixes, v1: np.ndarray,
                           tol: float = VALUE_INEQ_TOL):
    """Margins U_i(s; x) - v1_i(s) and whether any drops below -tol."""
    margins = profile_value(aux, mixes) - v1[aux.state]
    return bool(np.all(margins >= -tol)), margins
