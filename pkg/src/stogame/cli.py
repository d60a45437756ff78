"""Command-line interface.

Exit codes: 0 success, 1 failed verdicts (validation violations, acceptability
failures, unclassifiable sets), 2 file or parse errors.  Every command writes
a deterministic JSON artifact into the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ._util import dump_json, json_ready
from .game import (
    GameFormatError,
    StationaryProfile,
    StochasticGame,
    load_game,
    validate_game,
)
from .generators import BUNDLED, bundled_game, sorin_game
from .minmax import default_schedule, solve_uniform_minmax
from .pipeline import run_pipeline
from .simulate import simulate
from .verify import DEFAULT_LAMBDA_GRID, check_minmax_acceptable


def _add_common(parser):
    parser.add_argument("--game", required=False,
                        help="path to a game JSON file, or builtin:<name> "
                             f"(builtins: {', '.join(sorted(BUNDLED))})")
    parser.add_argument("--epsilon", type=float, default=0.05,
                        help="acceptability slack (default 0.05)")
    parser.add_argument("--lambda-grid", default=None,
                        help="comma-separated verification discount grid")
    parser.add_argument("--schedule-depth", type=int, default=20,
                        help="discount schedule length for the uniform solve")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--tol-v", type=float, default=1e-4,
                        help="value-equality tolerance for communicating sets")
    parser.add_argument("--eq-tol", type=float, default=1e-9,
                        help="equilibrium regret tolerance (exact paths)")


def _load(args) -> StochasticGame:
    if not args.game:
        raise GameFormatError("no --game given")
    if args.game.startswith("builtin:"):
        try:
            return bundled_game(args.game.split(":", 1)[1])
        except KeyError as exc:
            raise GameFormatError(str(exc)) from exc
    return load_game(args.game)


def _grid(args):
    if args.lambda_grid is None:
        return DEFAULT_LAMBDA_GRID
    try:
        grid = tuple(float(x) for x in args.lambda_grid.split(","))
    except ValueError as exc:
        raise GameFormatError(f"bad --lambda-grid: {exc}") from exc
    if any(not 0.0 <= x < 1.0 for x in grid) or list(grid) != sorted(set(grid)):
        raise GameFormatError("--lambda-grid must be strictly increasing in [0, 1)")
    return grid


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _run(args, with_correlated=True):
    game = _load(args)
    if args.epsilon <= 0.0:
        raise GameFormatError(f"--epsilon must be positive, got {args.epsilon}")
    return game, run_pipeline(
        game,
        eps=args.epsilon,
        schedule=default_schedule(args.schedule_depth),
        tol_v=args.tol_v,
        lam_grid=_grid(args),
        with_correlated=with_correlated,
        eq_tol=args.eq_tol,
    )


def cmd_validate(args) -> int:
    game = _load(args)
    problems = validate_game(game)
    dump_json({"game": game.name, "violations": problems, "ok": not problems},
              os.path.join(_outdir(args), "validate.json"))
    for p in problems:
        print(f"violation: {p}")
    print(f"{game.name or 'game'}: {'ok' if not problems else f'{len(problems)} violations'}")
    return 0 if not problems else 1


def cmd_solve(args) -> int:
    game = _load(args)
    report = solve_uniform_minmax(game, schedule=default_schedule(args.schedule_depth))
    dump_json(report.to_dict(), os.path.join(_outdir(args), "solve.json"))
    print(f"adversary mode: {report.adversary_mode}")
    for curve in report.curves:
        vals = ", ".join(
            f"{name}={v:.6f}" for name, v in zip(game.state_names, curve.extrapolated))
        flag = "" if curve.converged else "  [non-convergence flagged]"
        print(f"player {curve.player}: {vals}{flag}")
    return 0


def cmd_decompose(args) -> int:
    game, res = _run(args, with_correlated=False)
    doc = {
        "uniform_values": json_ready(res.v1),
        "decomposition": res.decomposition.to_dict(),
        "classifications": [c.to_dict() for c in res.classifications],
    }
    dump_json(doc, os.path.join(_outdir(args), "decompose.json"))
    for cset, cls in zip(res.decomposition.sets, res.classifications):
        names = [game.state_names[s] for s in cset.states]
        print(f"set {names}: value {np.round(cset.value, 6).tolist()}, kind {cls.kind}")
    print(f"transient: {[game.state_names[s] for s in res.decomposition.transient]}")
    bad = [k for k, c in enumerate(res.classifications) if c.kind == "unclassifiable"]
    return 1 if bad else 0


def cmd_build(args) -> int:
    game, res = _run(args, with_correlated=False)
    out = _outdir(args)
    if res.profile is None:
        dump_json({"errors": res.errors}, os.path.join(out, "build.json"))
        print("build failed:", "; ".join(res.errors))
        return 1
    dump_json(res.profile.to_dict(), os.path.join(out, "automaton.json"))
    doc = {
        "summary": res.summary(),
        "acceptability": res.acceptability.to_dict(),
        "size_audit": res.size_audit.to_dict(),
    }
    dump_json(doc, os.path.join(out, "build.json"))
    print(f"machine size {res.profile.joint.size} "
          f"(bound {game.n_states * game.n_players}); "
          f"acceptable: {res.acceptability.ok}")
    return 0 if res.acceptability.ok else 1


def cmd_build_correlated(args) -> int:
    game, res = _run(args, with_correlated=True)
    out = _outdir(args)
    if res.correlated is None:
        dump_json({"errors": res.errors}, os.path.join(out, "correlated.json"))
        print("build failed:", "; ".join(res.errors))
        return 1
    doc = {
        "table": json_ready(res.correlated.table),
        "acceptability": res.correlated_acceptability.to_dict(),
        "size_audit": res.correlated_size_audit.to_dict(),
    }
    dump_json(doc, os.path.join(out, "correlated.json"))
    print(f"stationary correlated strategy over {game.n_states} states; "
          f"acceptable: {res.correlated_acceptability.ok}")
    return 0 if res.correlated_acceptability.ok else 1


def cmd_verify(args) -> int:
    game, res = _run(args, with_correlated=True)
    doc = {
        "summary": res.summary(),
        "minmax": res.minmax.to_dict(),
        "acceptability": None if res.acceptability is None else res.acceptability.to_dict(),
        "correlated_acceptability": None if res.correlated_acceptability is None
        else res.correlated_acceptability.to_dict(),
        "individual_rationality": None if res.ir_report is None else res.ir_report.to_dict(),
        "submartingale": None if res.submartingale is None else res.submartingale.to_dict(),
        "size_audit": None if res.size_audit is None else res.size_audit.to_dict(),
    }
    dump_json(doc, os.path.join(_outdir(args), "verify.json"))
    summ = res.summary()
    print(f"{game.name or 'game'}: ok={summ['ok']} kinds={summ['kinds']} "
          f"ir_worst_gain={summ['ir_worst_gain']} "
          f"min_drift={summ['submartingale_min_drift']}")
    if res.errors:
        print("errors:", "; ".join(res.errors))
    return 0 if res.ok else 1


def cmd_simulate(args) -> int:
    game, res = _run(args, with_correlated=False)
    if res.profile is None:
        print("build failed:", "; ".join(res.errors))
        return 1
    lam = 0.99 if args.lam is None else args.lam
    results = {}
    for s in range(game.n_states):
        sim = simulate(game, s, res.profile, lam, seed=args.seed,
                       replications=args.replications)
        results[game.state_names[s]] = sim.to_dict()
    dump_json({"lam": lam, "results": results},
              os.path.join(_outdir(args), "simulate.json"))
    for name, doc in results.items():
        print(f"{name}: mean {np.round(doc['mean'], 5).tolist()} "
              f"(se {np.round(doc['std_error'], 5).tolist()})")
    return 0


def cmd_demo_sorin(args) -> int:
    """Full pipeline on the bundled quitting game, reproducing its headline
    numbers: uniform values (2/3, 1/2), the failure of the fixed-discount
    equilibrium limit, and a passing synthesized profile."""
    game = sorin_game()
    res = run_pipeline(game, eps=args.epsilon,
                       schedule=default_schedule(args.schedule_depth),
                       lam_grid=_grid(args))
    v0 = res.v1[0]
    print(f"uniform min-max values at {game.state_names[0]}: "
          f"player 1 = {v0[0]:.6f} (exact 2/3), player 2 = {v0[1]:.6f} (exact 1/2)")

    fixed = StationaryProfile((
        np.tile([1.0, 0.0], (3, 1)),
        np.tile([2.0 / 3.0, 1.0 / 3.0], (3, 1)),
    ))
    fixed_report = check_minmax_acceptable(game, fixed, res.v1, args.epsilon,
                                           lam_grid=_grid(args))
    p2 = [e for e in fixed_report.entries if e.state == 0 and e.player == 1][0]
    print(f"fixed-discount equilibrium limit: player 2 gets {p2.limit_payoff:.6f} "
          f"(= 1/3) < {res.v1[0, 1]:.6f} - eps  ->  acceptable: {fixed_report.ok}")

    print(f"synthesized profile: acceptable at eps={args.epsilon}: "
          f"{res.acceptability.ok}; machine size {res.profile.joint.size} "
          f"(bound {game.n_states * game.n_players})")
    print(f"stationary correlated variant acceptable: "
          f"{res.correlated_acceptability.ok}; size {game.n_states}")

    dump_json({
        "uniform_values": json_ready(res.v1),
        "fixed_profile_acceptable": fixed_report.ok,
        "fixed_profile_player2_limit": p2.limit_payoff,
        "synthesized_acceptable": res.acceptability.ok,
        "correlated_acceptable": res.correlated_acceptability.ok,
        "summary": res.summary(),
    }, os.path.join(_outdir(args), "demo_sorin.json"))
    ok = (res.acceptability.ok and res.correlated_acceptability.ok
          and not fixed_report.ok)
    return 0 if ok else 1


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "decompose": cmd_decompose,
    "build": cmd_build,
    "build-correlated": cmd_build_correlated,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "demo-sorin": cmd_demo_sorin,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stogame",
        description="Solve, decompose, synthesize and verify acceptable "
                    "strategy profiles in finite stochastic games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        if name == "simulate":
            p.add_argument("--lam", type=float, default=None,
                           help="simulation discount factor (default 0.99)")
            p.add_argument("--replications", type=int, default=2000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except GameFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
