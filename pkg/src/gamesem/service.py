"""Turn-based play sessions over HTTP.

A session pits a human, always playing Environment, against a packaged
machine strategy on an interpreted formula. The protocol is plain
request/response JSON (version tag "v": 1): the client drives the agent
with explicit step calls and polls state; nothing moves on its own.

Endpoints:
    POST /sessions                  create; body {"v", "formula", "agent",
                                    "interp"? | "domain"/"seed"/"index"}
    GET  /sessions/{id}             state view
    POST /sessions/{id}/move        body {"v", "move": "2.7"}
    POST /sessions/{id}/step        body {"v", "n": 1}
    GET  /sessions/{id}/legal       environment moves at the current position

A human move is accepted only while the agent has permission granted and
the move is legal at the current position; anything else is a 409 and the
state does not change. Unknown session ids are 404, malformed creation
requests are 400. The state view carries the full evolution list: the
game after each move of the run so far, newest last.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import agents as ag
from . import formulas as fm
from . import games as gm
from . import interps as itp
from .errors import BlowupGuard, BudgetExceeded, GamesemError, ShapeMismatch
from .runs import Labmove, Player, is_valid_move

MAX_STEPS_PER_CALL = 64


@dataclass
class Session:
    sid: str
    formula: fm.Formula
    formula_text: str
    interp: itp.Interpretation
    game: gm.GameExpr
    e: gm.Valuation
    agent: ag.AgentInstance
    run: list[Labmove] = field(default_factory=list)
    granted: bool = False
    permissions: int = 0
    steps: int = 0
    outcome: Optional[Player] = None
    note: str = ""


def _player_name(p: Optional[Player]) -> Optional[str]:
    if p is None:
        return None
    return "Machine" if p is Player.MACHINE else "Environment"


def _view(s: Session) -> dict:
    evolution = [
        gm.game_text(gm.prefixation(s.game, s.e, tuple(s.run[:i])))
        for i in range(len(s.run) + 1)
    ]
    if s.outcome is not None:
        status = "finished"
    elif s.granted:
        status = "awaiting_env"
    else:
        status = "agent_thinking"
    return {
        "v": 1,
        "id": s.sid,
        "formula": s.formula_text,
        "domain": s.interp.domain,
        "status": status,
        "outcome": _player_name(s.outcome),
        "run": [lam.text() for lam in s.run],
        "evolution": evolution,
        "permissions": s.permissions,
        "steps": s.steps,
        "note": s.note,
    }


def _settle(s: Session) -> None:
    """Score the play once neither side has a legal move left."""
    if s.outcome is not None:
        return
    try:
        pos = tuple(s.run)
        if gm.legal_moves(s.game, s.e, pos, Player.MACHINE):
            return
        if gm.legal_moves(s.game, s.e, pos, Player.ENVIRONMENT):
            return
    except BlowupGuard:
        return
    s.outcome = gm.winner(s.game, s.e, tuple(s.run))
    if not s.note:
        s.note = "no moves remain"


def _observe(s: Session, lam: Labmove) -> None:
    try:
        s.agent.observe(lam)
    except (BudgetExceeded, ShapeMismatch) as exc:
        s.note = f"agent gave up: {exc}"


def _preset_interp(f: fm.Formula, domain: int, seed: int, index: int) -> itp.Interpretation:
    family = itp.enumerate_interps(f, domain=domain, seed=seed, count=10)
    if index >= len(family):
        raise HTTPException(400, f"no admissible interpretation at index {index}")
    return family[index]


def make_app() -> FastAPI:
    app = FastAPI(title="gamesem sessions")
    # browser clients are served from a different origin than the API
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    counter = itertools.count(1)
    lock = threading.Lock()

    def get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return s

    @app.post("/sessions")
    def create(payload: dict = Body(...)):
        try:
            f = fm.parse(str(payload["formula"]))
            if "interp" in payload:
                interp = itp.interp_from_json(payload["interp"])
            else:
                interp = _preset_interp(
                    f,
                    int(payload.get("domain", 3)),
                    int(payload.get("seed", 0)),
                    int(payload.get("index", 0)),
                )
            report = itp.admissible_for(interp, f)
            if not report.admissible:
                raise HTTPException(400, "; ".join(report.problems))
            spec = ag.spec_from_json(payload["agent"])
            e = interp.valuation()
            agent = ag.instantiate(spec, e)
            game = itp.apply_interp(interp, f)
        except HTTPException:
            raise
        except (GamesemError, KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        with lock:
            sid = f"s{next(counter)}"
            s = Session(sid, f, payload["formula"], interp, game, e, agent)
            sessions[sid] = s
            return _view(s)

    @app.get("/sessions/{sid}")
    def state(sid: str):
        with lock:
            return _view(get_session(sid))

    @app.get("/sessions/{sid}/legal")
    def legal(sid: str):
        with lock:
            s = get_session(sid)
            if s.outcome is not None:
                moves: list[str] = []
            else:
                try:
                    moves = gm.legal_moves(
                        s.game, s.e, tuple(s.run), Player.ENVIRONMENT)
                except BlowupGuard as exc:
                    raise HTTPException(400, str(exc))
            return {"v": 1, "id": sid, "legal": moves}

    @app.post("/sessions/{sid}/move")
    def human_move(sid: str, payload: dict = Body(...)):
        with lock:
            s = get_session(sid)
            move = str(payload.get("move", ""))
            if s.outcome is not None:
                raise HTTPException(409, "the play is over")
            if not s.granted:
                raise HTTPException(
                    409, "the machine has not granted permission yet")
            if not is_valid_move(move):
                raise HTTPException(409, f"malformed move {move!r}")
            lam = Labmove(Player.ENVIRONMENT, move)
            candidate = tuple(s.run) + (lam,)
            if not gm.legal(s.game, s.e, candidate):
                raise HTTPException(
                    409, f"{move!r} is not legal at the current position")
            s.run.append(lam)
            s.granted = False
            _observe(s, lam)
            _settle(s)
            return _view(s)

    @app.post("/sessions/{sid}/step")
    def step_agent(sid: str, payload: dict = Body(...)):
        with lock:
            s = get_session(sid)
            if s.outcome is not None:
                raise HTTPException(409, "the play is over")
            n = max(1, min(int(payload.get("n", 1)), MAX_STEPS_PER_CALL))
            for _ in range(n):
                try:
                    action = s.agent.step()
                except (BudgetExceeded, ShapeMismatch) as exc:
                    s.note = f"agent gave up: {exc}"
                    s.outcome = gm.winner(s.game, s.e, tuple(s.run))
                    break
                s.steps += 1
                if isinstance(action, ag.MakeMove):
                    lam = Labmove(Player.MACHINE, action.move)
                    candidate = tuple(s.run) + (lam,)
                    if not gm.legal(s.game, s.e, candidate):
                        s.note = "machine played an illegal move"
                        s.outcome = gm.winner(s.game, s.e, candidate)
                        break
                    s.run.append(lam)
                    _observe(s, lam)
                    _settle(s)
                    if s.outcome is not None:
                        break
                else:
                    s.permissions += 1
                    s.granted = True
                    break
            return _view(s)

    return app


app = make_app()
