"""Command-line surface: parsing, evaluation, proving, checking,
extraction, verification, scripted play, and the session server.

Results go to stdout as JSON. Failures exit nonzero with a one-object
JSON diagnostic on stderr.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from . import agents as ag
from . import formulas as fm
from . import games as gm
from . import interps as itp
from . import proofs as pf
from . import runs as rn
from .errors import GamesemError


def _fail(exc: BaseException) -> None:
    blob = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(blob), err=True)
    sys.exit(1)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (GamesemError, OSError, KeyError, TypeError, ValueError) as exc:
            _fail(exc)

    return wrapper


def _emit(blob) -> None:
    click.echo(json.dumps(blob, indent=2, sort_keys=True))


def _load_text(arg: str) -> str:
    if os.path.exists(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read().strip()
    return arg


def _load_json(arg: str) -> dict:
    text = _load_text(arg)
    return json.loads(text)


def _interp_options(fn):
    fn = click.option("--interp", "interp_file", default=None,
                      help="Interpretation JSON (file or inline).")(fn)
    fn = click.option("--domain", default=3, show_default=True)(fn)
    fn = click.option("--seed", default=0, show_default=True)(fn)
    fn = click.option("--index", default=0, show_default=True,
                      help="Pick from the seeded interpretation family.")(fn)
    return fn


def _interp_for(f: fm.Formula, interp_file, domain: int, seed: int,
                index: int) -> itp.Interpretation:
    if interp_file is not None:
        interp = itp.interp_from_json(_load_json(interp_file))
    else:
        family = itp.enumerate_interps(f, domain=domain, seed=seed, count=10)
        if index >= len(family):
            raise ValueError(f"no admissible interpretation at index {index}")
        interp = family[index]
    report = itp.admissible_for(interp, f)
    if not report.admissible:
        raise ValueError("; ".join(report.problems))
    return interp


@click.group()
def main():
    """Game-semantics workbench."""


@main.command("parse")
@click.argument("expr")
@click.option("--sequent", is_flag=True, help="Read a comma-separated sequent.")
@_guarded
def parse_cmd(expr: str, sequent: bool):
    """Dump the syntax tree of a formula (or file containing one)."""
    text = _load_text(expr)
    if sequent:
        s = fm.parse_sequent(text)
        _emit({"sequent": [fm.formula_to_json(g) for g in s],
               "text": fm.sequent_text(s)})
    else:
        f = fm.parse(text)
        _emit({"formula": fm.formula_to_json(f), "text": fm.formula_text(f)})


@main.command("eval")
@click.argument("expr")
@click.option("--run", "run_text", default="<>", show_default=True,
              help="Run in ``<T:move, B:move>`` form.")
@_interp_options
@_guarded
def eval_cmd(expr: str, run_text: str, interp_file, domain, seed, index):
    """Judge legality and the winner of a run on an interpreted formula."""
    f = fm.parse(_load_text(expr))
    interp = _interp_for(f, interp_file, domain, seed, index)
    g = itp.apply_interp(interp, f)
    e = interp.valuation()
    run = rn.parse_run(run_text)
    _emit({
        "legal": gm.legal(g, e, run),
        "winner": gm.winner(g, e, run).token,
    })


@main.command("expand")
@click.argument("expr")
@click.option("--depth", default=3, show_default=True)
@click.option("--rec-bound", default=None, type=int)
@click.option("--max-nodes", default=50000, show_default=True)
@_interp_options
@_guarded
def expand_cmd(expr: str, depth, rec_bound, max_nodes,
               interp_file, domain, seed, index):
    """Materialize the position tree as a finite game, JSON encoded."""
    f = fm.parse(_load_text(expr))
    interp = _interp_for(f, interp_file, domain, seed, index)
    g = itp.apply_interp(interp, f)
    caps = gm.Caps(depth=depth, rec_bound=rec_bound, max_nodes=max_nodes)
    _emit(gm.fg_to_json(gm.expand(g, interp.valuation(), caps)))


@main.command("static")
@click.argument("expr")
@click.option("--depth", default=3, show_default=True)
@click.option("--rec-bound", default=None, type=int)
@_interp_options
@_guarded
def static_cmd(expr: str, depth, rec_bound, interp_file, domain, seed, index):
    """Check the expanded game for delay-independence of winners."""
    f = fm.parse(_load_text(expr))
    interp = _interp_for(f, interp_file, domain, seed, index)
    g = itp.apply_interp(interp, f)
    caps = gm.Caps(depth=depth, rec_bound=rec_bound)
    report = gm.is_static(gm.expand(g, interp.valuation(), caps))
    witness = None
    if report.witness is not None:
        before, after, player = report.witness
        witness = {
            "run": rn.format_run(before),
            "delay": rn.format_run(after),
            "player": player.token,
        }
    _emit({"static": report.static, "witness": witness})


@main.command("delays")
@click.argument("run_text")
@click.option("--player", type=click.Choice(["T", "B"]), default="T",
              show_default=True)
@click.option("--cap", default=rn.DELAY_LENGTH_CAP, show_default=True)
@_guarded
def delays_cmd(run_text: str, player: str, cap: int):
    """Enumerate every delay of a run for one player."""
    run = rn.parse_run(run_text)
    out = rn.enumerate_delays(run, rn.Player.from_token(player), cap=cap)
    _emit({"count": len(out),
           "delays": sorted(rn.format_run(d) for d in out)})


@main.command("prove-cl2")
@click.argument("expr")
@_guarded
def prove_cl2_cmd(expr: str):
    """Decide a propositional choice formula; proofs come out as JSON."""
    got, proof = pf.cl2_decide(fm.parse(_load_text(expr)))
    _emit({"provable": got,
           "proof": pf.proof_to_json(proof) if proof else None})


@main.command("prove-cl4qf")
@click.argument("expr")
@_guarded
def prove_cl4qf_cmd(expr: str):
    """Decide a choice-quantified formula without blind quantifiers."""
    got, proof = pf.cl4_prove_blindfree(fm.parse(_load_text(expr)))
    _emit({"provable": got,
           "proof": pf.proof_to_json(proof) if proof else None})


def _check_blob(result: pf.CheckResult) -> dict:
    return {
        "verdict": result.verdict,
        "error_step": result.error_step,
        "reason": result.reason,
        "pending": list(result.pending),
    }


@main.command("check-cl4")
@click.argument("proof")
@_guarded
def check_cl4_cmd(proof: str):
    """Check a formula derivation; exits 0 only on a clean verdict."""
    result = pf.cl4_check(pf.proof_from_json(_load_json(proof)))
    _emit(_check_blob(result))
    if not result.ok:
        sys.exit(1)


@main.command("check-al")
@click.argument("proof")
@_guarded
def check_al_cmd(proof: str):
    """Check a sequent derivation; exits 0 only on a clean verdict."""
    result = pf.al_check(pf.proof_from_json(_load_json(proof), sequents=True))
    _emit(_check_blob(result))
    if not result.ok:
        sys.exit(1)


@main.command("extract")
@click.argument("proof")
@_guarded
def extract_cmd(proof: str):
    """Turn a checked sequent derivation into an agent spec."""
    spec = pf.al_extract(pf.proof_from_json(_load_json(proof), sequents=True))
    _emit(ag.spec_to_json(spec))


@main.command("verify")
@click.argument("agent")
@click.argument("expr")
@click.option("--interps", "count", default=10, show_default=True)
@click.option("--depth", default=4, show_default=True)
@click.option("--rec-bound", default=2, show_default=True)
@click.option("--domain", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_guarded
def verify_cmd(agent: str, expr: str, count, depth, rec_bound, domain, seed):
    """Play an agent against exhaustive environments over a family of
    interpretations and report the tally."""
    spec = ag.spec_from_json(_load_json(agent))
    f = fm.parse(_load_text(expr))
    interps = itp.enumerate_interps(f, domain=domain, seed=seed, count=count)
    report = ag.verify_uniform(spec, f, interps, depth=depth,
                               rec_bound=rec_bound)
    _emit({
        "interps": len(interps),
        "plays": report.plays,
        "wins": report.wins,
        "losses": len(report.losses),
        "undecided": len(report.undecided),
        "clean": report.clean,
    })
    if not report.clean:
        sys.exit(1)


def _parse_script(text: str) -> ag.Script:
    entries: list[tuple[int, str]] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        waits, sep, move = chunk.partition("@")
        if sep:
            entries.append((int(waits), move.strip()))
        else:
            entries.append((0, chunk))
    return ag.Script(entries)


@main.command("play")
@click.argument("expr")
@click.option("--agent", "agent_arg", required=True,
              help="Agent spec JSON (file or inline).")
@click.option("--script", "script_text", default="", show_default=True,
              help="Environment moves, comma separated; ``2@move`` waits twice.")
@click.option("--budget", default=4000, show_default=True)
@_interp_options
@_guarded
def play_cmd(expr: str, agent_arg: str, script_text: str, budget: int,
             interp_file, domain, seed, index):
    """Run one scripted play and print the transcript."""
    f = fm.parse(_load_text(expr))
    interp = _interp_for(f, interp_file, domain, seed, index)
    g = itp.apply_interp(interp, f)
    spec = ag.spec_from_json(_load_json(agent_arg))
    t = ag.run_play(spec, _parse_script(script_text), g,
                    interp.valuation(), budget=budget)
    blob = ag.transcript_to_json(t)
    blob["note"] = t.note
    _emit(blob)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve_cmd(host: str, port: int):
    """Start the play-session HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
