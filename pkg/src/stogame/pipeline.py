"""End-to-end orchestration: solve, decompose, classify, build, verify."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import json_ready
from .builder import (
    Classification,
    assemble_profile,
    build_correlated_stationary,
    classify_set,
)
from .game import StochasticGame
from .minmax import MinMaxReport, default_schedule, solve_uniform_minmax
from .oneshot import continuation_values, enumerate_all_states
from .structure import Decomposition, decompose
from .verify import (
    DEFAULT_LAMBDA_GRID,
    automaton_size_audit,
    check_individual_rationality,
    check_minmax_acceptable,
    check_submartingale,
)


@dataclass
class PipelineResult:
    game: StochasticGame
    eps: float
    minmax: MinMaxReport
    v1: np.ndarray
    eq_sets: list
    decomposition: Decomposition
    classifications: list
    profile: object = None
    correlated: object = None
    acceptability: object = None
    correlated_acceptability: object = None
    ir_report: object = None
    submartingale: object = None
    size_audit: object = None
    correlated_size_audit: object = None
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        checks = [self.acceptability, self.correlated_acceptability,
                  self.submartingale, self.size_audit, self.correlated_size_audit]
        if self.errors:
            return False
        if any(c is None for c in checks):
            return False
        return all(c.ok for c in checks)

    def summary(self) -> dict:
        return json_ready({
            "game": self.game.name,
            "eps": self.eps,
            "uniform_values": self.v1,
            "adversary_mode": self.minmax.adversary_mode,
            "sets": [list(c.states) for c in self.decomposition.sets],
            "kinds": [c.kind for c in self.classifications],
            "transient": list(self.decomposition.transient),
            "profile_acceptable": None if self.acceptability is None else self.acceptability.ok,
            "correlated_acceptable": None if self.correlated_acceptability is None
            else self.correlated_acceptability.ok,
            "ir_worst_gain": None if self.ir_report is None else self.ir_report.worst_gain,
            "submartingale_min_drift": None if self.submartingale is None
            else self.submartingale.min_drift,
            "machine_sizes": None if self.size_audit is None else self.size_audit.sizes,
            "errors": self.errors,
            "ok": self.ok,
        })


def run_pipeline(game: StochasticGame, eps: float = 0.05, schedule=None,
                 tol_v: float = 1e-4, lam_grid=DEFAULT_LAMBDA_GRID,
                 with_correlated: bool = True, solver_tol: float = 1e-9,
                 eq_tol: float = 1e-9) -> PipelineResult:
    """Run the full chain on one game.

    Build or verification failures are collected in `errors` rather than
    raised, so callers can report partial results.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    schedule = default_schedule() if schedule is None else list(schedule)
    minmax = solve_uniform_minmax(game, schedule=schedule, tol=solver_tol)
    v1 = minmax.uniform_values
    eq_sets = enumerate_all_states(game, v1, exact_tol=eq_tol)
    decomposition = decompose(game, eq_sets, v1, tol_v=tol_v)
    u_star = continuation_values(game, v1)
    classifications = [
        classify_set(game, cset, v1, eps, u_star)
        for cset in decomposition.sets
    ]
    result = PipelineResult(game, eps, minmax, v1, eq_sets, decomposition,
                            classifications)
    try:
        result.profile = assemble_profile(game, decomposition, classifications, eps)
    except RuntimeError as exc:
        result.errors.append(f"profile build: {exc}")
        return result
    result.acceptability = check_minmax_acceptable(game, result.profile, v1, eps,
                                                   lam_grid=lam_grid)
    result.ir_report = check_individual_rationality(game, result.profile, v1, eps)
    result.submartingale = check_submartingale(game, result.profile, v1,
                                               decomposition, classifications)
    result.size_audit = automaton_size_audit(game, result.profile)
    if with_correlated:
        try:
            result.correlated = build_correlated_stationary(
                game, decomposition, classifications, eps)
            result.correlated_acceptability = check_minmax_acceptable(
                game, result.correlated, v1, eps, lam_grid=lam_grid)
            result.correlated_size_audit = automaton_size_audit(game, result.correlated)
        except RuntimeError as exc:
            result.errors.append(f"correlated build: {exc}")
    return result
