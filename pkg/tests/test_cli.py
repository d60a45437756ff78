import json

import numpy as np
import pytest

from stogame.cli import main
from stogame.game import game_to_dict, save_game
from stogame.generators import sorin_game


def run(argv):
    return main(argv)


def test_validate_builtin_ok(tmp_path):
    assert run(["validate", "--game", "builtin:sorin", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "validate.json").read_text())
    assert doc["ok"] is True


def test_validate_malformed_file_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(["validate", "--game", str(bad), "--out", str(tmp_path)]) == 2
    missing = tmp_path / "missing.json"
    assert run(["validate", "--game", str(missing), "--out", str(tmp_path)]) == 2


def test_validate_violations_exit_1(tmp_path):
    doc = game_to_dict(sorin_game())
    doc["transitions"]["s0"]["T/L"]["s0"] = 0.9
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(doc))
    assert run(["validate", "--game", str(broken), "--out", str(tmp_path)]) == 1


def test_solve_writes_values(tmp_path, capsys):
    assert run(["solve", "--game", "builtin:sorin", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "solve.json").read_text())
    v1 = doc["players"][0]["extrapolated"]
    assert v1[0] == pytest.approx(2 / 3, abs=1e-6)
    out = capsys.readouterr().out
    assert "adversary mode" in out


def test_decompose_and_build(tmp_path):
    assert run(["decompose", "--game", "builtin:sorin", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "decompose.json").read_text())
    assert [c["kind"] for c in doc["classifications"]] == ["B", "A", "A"]
    assert run(["build", "--game", "builtin:sorin", "--out", str(tmp_path)]) == 0
    build = json.loads((tmp_path / "build.json").read_text())
    assert build["acceptability"]["ok"] is True
    assert (tmp_path / "automaton.json").exists()


def test_build_correlated(tmp_path):
    assert run(["build-correlated", "--game", "builtin:sorin",
                "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "correlated.json").read_text())
    assert doc["acceptability"]["ok"] is True
    assert doc["size_audit"]["bound"] == 3


def test_verify_mdp3(tmp_path):
    assert run(["verify", "--game", "builtin:mdp3", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["summary"]["ok"] is True


def test_demo_sorin(tmp_path, capsys):
    assert run(["demo-sorin", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "player 1 = 0.666667" in out
    assert "acceptable: False" in out      # the fixed-discount equilibrium
    assert "acceptable at eps=0.05: True" in out
    doc = json.loads((tmp_path / "demo_sorin.json").read_text())
    assert doc["fixed_profile_player2_limit"] == pytest.approx(1 / 3, abs=1e-6)


def test_simulate_command(tmp_path):
    assert run(["simulate", "--game", "builtin:mdp3", "--out", str(tmp_path),
                "--replications", "200", "--lam", "0.9", "--seed", "4"]) == 0
    doc = json.loads((tmp_path / "simulate.json").read_text())
    assert doc["lam"] == 0.9
    assert set(doc["results"]) == {"low", "mid", "high"}


def test_artifacts_byte_identical_across_runs(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert run(["verify", "--game", "builtin:random2p_b",
                    "--out", str(out), "--seed", "0"]) == 0
    assert (out1 / "verify.json").read_bytes() == (out2 / "verify.json").read_bytes()


def test_lambda_grid_flag_validation(tmp_path):
    assert run(["solve", "--game", "builtin:sorin", "--out", str(tmp_path),
                "--lambda-grid", "0.9,0.5"]) in (0, 2)
    # strictly increasing grids parse; decreasing must be rejected by verify
    assert run(["verify", "--game", "builtin:mdp3", "--out", str(tmp_path),
                "--lambda-grid", "0.9,0.5"]) == 2
