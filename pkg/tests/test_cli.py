"""The command-line surface: happy paths, JSON outputs, failure modes."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from gamesem import agents as ag
from gamesem import proofs as pf
from gamesem.cli import main


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


def run_ok(runner, *args):
    result = runner.invoke(main, list(args))
    assert result.exit_code == 0, result.output + str(result.exception)
    return json.loads(result.stdout)


class TestParseEval:
    def test_parse_dumps_the_tree(self, runner):
        blob = run_ok(runner, "parse", "p -> q & r")
        assert blob["text"] == "p -> q & r"
        assert blob["formula"]["op"]

    def test_parse_reads_files(self, runner, tmp_path):
        path = tmp_path / "f.txt"
        path.write_text("chA x. P(x)")
        blob = run_ok(runner, "parse", str(path))
        assert blob["text"] == "chA x. P(x)"

    def test_parse_sequent(self, runner):
        blob = run_ok(runner, "parse", "--sequent", "~P , P")
        assert blob["text"] == "~P , P"
        assert len(blob["sequent"]) == 2

    def test_parse_error_is_json_on_stderr(self, runner):
        result = runner.invoke(main, ["parse", "((("])
        assert result.exit_code == 1
        blob = json.loads(result.stderr)
        assert blob["error"] == "ParseError"

    def test_eval_empty_run_on_won_atom(self, runner):
        blob = run_ok(runner, "eval", "T")
        assert blob == {"legal": True, "winner": "T"}

    def test_eval_flags_wrong_player_choice(self, runner):
        blob = run_ok(runner, "eval", "p | q", "--run", "<B:1>")
        assert blob["legal"] is False
        assert blob["winner"] == "T"


class TestExpandStatic:
    def test_expand_emits_a_finite_game(self, runner):
        blob = run_ok(runner, "expand", "p & q", "--domain", "2", "--seed", "1")
        assert blob["win"] in ("T", "B")
        assert set(blob["children"]) == {"B:1", "B:2"}

    def test_static_verdict_on_a_choice_game(self, runner):
        blob = run_ok(runner, "static", "p & q", "--domain", "2")
        assert blob == {"static": True, "witness": None}


class TestDelays:
    def test_two_move_run(self, runner):
        blob = run_ok(runner, "delays", "<T:a, B:b>", "--player", "T")
        assert blob["count"] == 2

    def test_order_within_one_player_is_kept(self, runner):
        blob = run_ok(runner, "delays", "<T:a, T:b>", "--player", "B")
        assert blob["count"] == 1


class TestProvers:
    def test_prove_cl2_positive(self, runner):
        blob = run_ok(runner, "prove-cl2", "P \\/ ~P")
        assert blob["provable"] is True
        assert blob["proof"]["steps"][-1]["rule"] == "C"

    def test_prove_cl2_negative(self, runner):
        blob = run_ok(runner, "prove-cl2", "P | ~P")
        assert blob == {"provable": False, "proof": None}

    def test_prove_cl4qf(self, runner):
        blob = run_ok(runner, "prove-cl4qf", "chA x. chE y. (P(x) -> P(y))")
        assert blob["provable"] is True

    def test_emitted_proof_checks_clean(self, runner, tmp_path):
        blob = run_ok(runner, "prove-cl2", "P /\\ P -> P")
        path = tmp_path / "proof.json"
        path.write_text(json.dumps(blob["proof"]))
        verdict = run_ok(runner, "check-cl4", str(path))
        assert verdict["verdict"] == "ok"

    def test_corrupted_proof_fails_nonzero(self, runner, tmp_path):
        blob = run_ok(runner, "prove-cl2", "P /\\ P -> P")
        proof = blob["proof"]
        proof["steps"][-1]["conclusion"] = "P -> P /\\ P"
        path = tmp_path / "proof.json"
        path.write_text(json.dumps(proof))
        result = runner.invoke(main, ["check-cl4", str(path)])
        assert result.exit_code == 1
        assert json.loads(result.stdout)["verdict"] == "error"


class TestSequentPipeline:
    def test_check_extract_verify_round(self, runner, tmp_path):
        corpus = dict(pf.al_corpus())
        path = tmp_path / "al.json"
        path.write_text(json.dumps(pf.proof_to_json(corpus["excluded_middle"])))
        verdict = run_ok(runner, "check-al", str(path))
        assert verdict["verdict"] == "ok"
        spec = run_ok(runner, "extract", str(path))
        assert spec["kind"]
        spec_path = tmp_path / "agent.json"
        spec_path.write_text(json.dumps(spec))
        report = run_ok(runner, "verify", str(spec_path), "~P \\/ P",
                        "--interps", "3", "--depth", "3")
        assert report["clean"] is True
        assert report["losses"] == 0

    def test_verify_reports_failure_nonzero(self, runner, tmp_path):
        spec_path = tmp_path / "agent.json"
        spec_path.write_text(json.dumps(ag.spec_to_json(ag.const_win())))
        result = runner.invoke(
            main, ["verify", str(spec_path), "P | ~P",
                   "--interps", "2", "--depth", "2"])
        assert result.exit_code == 1
        assert json.loads(result.stdout)["losses"] > 0


class TestPlay:
    def test_const_win_on_won_atom(self, runner, tmp_path):
        spec_path = tmp_path / "agent.json"
        spec_path.write_text(json.dumps(ag.spec_to_json(ag.const_win())))
        blob = run_ok(runner, "play", "T", "--agent", str(spec_path))
        assert blob["outcome"] == "T"
        assert blob["run"] == []

    def test_mirror_play_with_scripted_opponent(self, runner, tmp_path):
        spec_path = tmp_path / "agent.json"
        spec_path.write_text(json.dumps(ag.spec_to_json(ag.ccs())))
        blob = run_ok(runner, "play", "~(p & q) \\/ (p & q)",
                      "--agent", str(spec_path), "--script", "2.1",
                      "--domain", "2", "--seed", "0")
        assert blob["outcome"] == "T"
        assert blob["run"] == ["B 2.1", "T 1.1"]

    def test_inline_agent_json(self, runner):
        blob = run_ok(runner, "play", "T", "--agent",
                      json.dumps(ag.spec_to_json(ag.const_win())))
        assert blob["outcome"] == "T"


class TestServe:
    def test_help_lists_every_command(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for name in ("parse", "eval", "expand", "static", "delays",
                     "prove-cl2", "prove-cl4qf", "check-cl4", "check-al",
                     "extract", "verify", "play", "serve"):
            assert name in result.output

    def test_serve_options(self, runner):
        result = runner.invoke(main, ["serve", "--help"])
        assert result.exit_code == 0
        assert "--port" in result.output
