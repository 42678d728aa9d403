"""Machine strategies and the play harness.

An agent is an interactive state machine that alternates between granting
permission and making moves. ``run_play`` drives one agent against one
environment script over a game, scoring the final run; the exhaustive
driver replays the agent against every environment behavior to a depth.
Strategies are described declaratively by ``AgentSpec`` trees so they can
be serialized, inspected, and rebuilt inside proofs.
"""

from __future__ import annotations

import copy
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from . import games as gm
from .errors import BudgetExceeded, ShapeMismatch
from .runs import Labmove, Player, Run

# --- actions and specs ---


@dataclass(frozen=True)
class MakeMove:
    move: str


@dataclass(frozen=True)
class GrantPermission:
    pass


Action = Union[MakeMove, GrantPermission]


@dataclass(frozen=True)
class AgentSpec:
    """A declarative strategy description: a kind, JSON-able parameters,
    and sub-strategies for combinators."""

    kind: str
    params: tuple[tuple[str, object], ...] = ()
    children: tuple["AgentSpec", ...] = ()
    note: str = ""

    def param(self, name: str, default=None):
        for k, v in self.params:
            if k == name:
                return v
        return default


def _params(**kwargs) -> tuple[tuple[str, object], ...]:
    return tuple(sorted(kwargs.items()))


def ccs(note: str = "") -> AgentSpec:
    return AgentSpec("CCS", note=note)


def ccs_remap(pairs: Iterable[tuple[str, str]], note: str = "") -> AgentSpec:
    frozen = tuple((a, b) for a, b in pairs)
    return AgentSpec("CCS_remap", _params(pairs=frozen), note=note)


def const_win(note: str = "") -> AgentSpec:
    return AgentSpec("Const_win", note=note)


_LEMMA_KINDS = {
    "PL6A": (), "L6A": (), "PL4": (), "L4": (), "PL6C": (), "L6C": (),
    "PL5": (), "L5": (), "OCT5A": (), "OCT5C": (), "OCT99": (),
    "PL4A": ("n",), "L4A": ("n",), "OCT5B": ("term",),
}


def lemma_strategy(kind: str, note: str = "", **params) -> AgentSpec:
    if kind not in _LEMMA_KINDS:
        raise ShapeMismatch(f"unknown strategy {kind!r}")
    required = _LEMMA_KINDS[kind]
    if set(params) != set(required):
        raise ShapeMismatch(f"{kind} takes parameters {required}")
    return AgentSpec(kind, _params(**params), note=note)


_L8_SCHEMAS = "abcdefghijk"


def l8_agent(schema: str, shape: Sequence[int] = (), note: str = "") -> AgentSpec:
    if schema not in _L8_SCHEMAS:
        raise ShapeMismatch(f"unknown schema {schema!r}")
    _l8_board(schema, tuple(shape))
    return AgentSpec("L8", _params(schema=schema, shape=tuple(shape)), note=note)


def _combinator(op: str, children: Sequence[AgentSpec], note: str = "",
                **params) -> AgentSpec:
    return AgentSpec(
        "Composite", _params(op=op, **params), tuple(children), note=note
    )


def closure_prec(a: AgentSpec, bound: Optional[int] = None, note: str = "") -> AgentSpec:
    extra = {} if bound is None else {"bound": bound}
    return _combinator("closure_prec", (a,), note=note, **extra)


def closure_brec(a: AgentSpec, note: str = "") -> AgentSpec:
    return _combinator("closure_brec", (a,), note=note)


def closure_chall(a: AgentSpec, x: str, note: str = "") -> AgentSpec:
    return _combinator("closure_chall", (a,), note=note, var=x)


def compose_mp(a_premise: AgentSpec, a_imp: AgentSpec, note: str = "") -> AgentSpec:
    return _combinator("mp", (a_premise, a_imp), note=note)


def compose_gmp(premises: Sequence[AgentSpec], a_imp: AgentSpec,
                note: str = "") -> AgentSpec:
    if not premises:
        raise ShapeMismatch("gmp needs at least one premise agent")
    return _combinator("gmp", tuple(premises) + (a_imp,), note=note)


def compose_trans(a_first: AgentSpec, a_second: AgentSpec, note: str = "") -> AgentSpec:
    return _combinator("trans", (a_first, a_second), note=note)


def spec_to_json(spec: AgentSpec) -> dict:
    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    out: dict = {"kind": spec.kind}
    if spec.params:
        out["params"] = {k: plain(v) for k, v in spec.params}
    if spec.children:
        out["children"] = [spec_to_json(c) for c in spec.children]
    if spec.note:
        out["note"] = spec.note
    return out


def spec_from_json(data: dict) -> AgentSpec:
    def frozen(v):
        if isinstance(v, list):
            return tuple(frozen(x) for x in v)
        return v

    params = tuple(sorted((k, frozen(v)) for k, v in data.get("params", {}).items()))
    children = tuple(spec_from_json(c) for c in data.get("children", ()))
    return AgentSpec(data["kind"], params, children, data.get("note", ""))


# --- transcripts ---


@dataclass(frozen=True)
class Transcript:
    run: Run
    steps: int
    permissions: int
    outcome: Optional[Player]
    note: str = ""
    perm_marks: tuple[int, ...] = ()

    def won_by_machine(self) -> bool:
        return self.outcome is Player.MACHINE


def transcript_to_json(t: Transcript) -> dict:
    return {
        "run": [f"{lam.player.token} {lam.move}" for lam in t.run],
        "outcome": t.outcome.token if t.outcome is not None else "undecided",
        "permissions": t.permissions,
        "steps": t.steps,
    }


def transcript_from_json(data: dict) -> Transcript:
    run = []
    for entry in data["run"]:
        token, _, move = entry.partition(" ")
        run.append(Labmove(Player.from_token(token), move))
    outcome = None
    if data["outcome"] != "undecided":
        outcome = Player.from_token(data["outcome"])
    return Transcript(tuple(run), data["steps"], data["permissions"], outcome)


# --- environment scripts ---


class Script:
    """A deterministic environment: each entry optionally sits out some
    permissions, then delivers its move; after the last entry it is done."""

    def __init__(self, entries: Iterable[Union[str, tuple[int, str]]] = ()):
        normal = []
        for entry in entries:
            if isinstance(entry, str):
                normal.append((0, entry))
            else:
                waits, move = entry
                normal.append((int(waits), move))
        self.entries: tuple[tuple[int, str], ...] = tuple(normal)


class _ScriptCursor:
    def __init__(self, script: Script):
        self.pending = deque(script.entries)
        self.waited = 0

    def next_event(self):
        if not self.pending:
            return ("finish",)
        waits, move = self.pending[0]
        if self.waited < waits:
            self.waited += 1
            return ("wait",)
        self.pending.popleft()
        self.waited = 0
        return ("move", move)


# --- the play harness ---


def instantiate(spec: AgentSpec, e: gm.Valuation) -> "AgentInstance":
    agent = _build(spec)
    agent.start(e)
    return agent


def run_play(agent: Union[AgentSpec, "AgentInstance"], env: Script,
             g: gm.GameExpr, e: gm.Valuation, budget: int = 4000) -> Transcript:
    """One complete play. The agent loses immediately on an illegal move of
    its own; an illegal environment move ends the play in its disfavor;
    budget exhaustion is Undecided."""
    if isinstance(agent, AgentSpec):
        agent = instantiate(agent, e)
    cursor = _ScriptCursor(env)
    run: list[Labmove] = []
    steps = 0
    permissions = 0
    perm_marks: list[int] = []
    env_done = False
    note = ""
    outcome: Optional[Player] = None
    while True:
        if steps >= budget:
            note = "step budget exhausted"
            break
        try:
            action = agent.step()
        except (BudgetExceeded, ShapeMismatch) as exc:
            note = f"agent gave up: {exc}"
            break
        steps += 1
        if isinstance(action, MakeMove):
            lam = Labmove(Player.MACHINE, action.move)
            run.append(lam)
            if not gm.legal(g, e, tuple(run)):
                note = "machine played an illegal move"
                outcome = gm.winner(g, e, tuple(run))
                break
            _observe(agent, lam)
            continue
        permissions += 1
        perm_marks.append(len(run))
        if env_done:
            outcome = gm.winner(g, e, tuple(run))
            break
        event = cursor.next_event()
        if event[0] == "finish":
            env_done = True
            continue
        if event[0] == "wait":
            continue
        lam = Labmove(Player.ENVIRONMENT, event[1])
        run.append(lam)
        if not gm.legal(g, e, tuple(run)):
            note = "environment played an illegal move"
            outcome = gm.winner(g, e, tuple(run))
            break
        _observe(agent, lam)
    return Transcript(
        tuple(run), steps, permissions, outcome, note, tuple(perm_marks)
    )


def _observe(agent: "AgentInstance", lam: Labmove):
    try:
        agent.observe(lam)
    except (BudgetExceeded, ShapeMismatch):
        pass


# --- exhaustive environments ---


@dataclass(frozen=True)
class ExploreReport:
    transcripts: tuple[Transcript, ...]

    @property
    def plays(self) -> int:
        return len(self.transcripts)

    def losses(self) -> tuple[Transcript, ...]:
        return tuple(
            t for t in self.transcripts if t.outcome is Player.ENVIRONMENT
        )

    def undecided(self) -> tuple[Transcript, ...]:
        return tuple(t for t in self.transcripts if t.outcome is None)


def explore_exhaustive(spec: AgentSpec, g: gm.GameExpr, e: gm.Valuation,
                       depth: int = 4, rec_bound: Optional[int] = 2,
                       budget: int = 4000, move_cap: int = 64,
                       wait_credit: int = 0,
                       max_plays: int = 200000) -> ExploreReport:
    """Play the agent against every environment behavior of at most
    ``depth`` moves, enumerated by replay."""
    out: list[Transcript] = []
    stack: list[tuple[tuple[Optional[str], ...], int]] = [((), 0)]
    while stack:
        prefix, moves_used = stack.pop()
        script = Script()
        script.entries = _wait_entries(prefix)
        t = run_play(spec, script, g, e, budget)
        out.append(t)
        if len(out) >= max_plays:
            break
        if t.outcome is None or t.note:
            continue
        if moves_used >= depth:
            continue
        try:
            moves = gm.legal_moves(
                g, e, t.run, Player.ENVIRONMENT,
                cap=move_cap * 4, rec_bound=rec_bound,
            )
        except gm.BlowupGuard:
            continue
        for m in moves[:move_cap]:
            stack.append((prefix + (m,), moves_used + 1))
        if wait_credit and prefix.count(None) < wait_credit:
            stack.append((prefix + (None,), moves_used))
    return ExploreReport(tuple(out))


def _wait_entries(prefix: tuple[Optional[str], ...]) -> tuple[tuple[int, str], ...]:
    entries: list[tuple[int, str]] = []
    waits = 0
    for m in prefix:
        if m is None:
            waits += 1
        else:
            entries.append((waits, m))
            waits = 0
    return tuple(entries)


@dataclass(frozen=True)
class VerifyReport:
    plays: int
    wins: int
    losses: tuple[tuple[int, Transcript], ...]
    undecided: tuple[tuple[int, Transcript], ...]

    @property
    def clean(self) -> bool:
        return not self.losses and not self.undecided


def verify_uniform(spec: AgentSpec, f, interps, depth: int = 4,
                   rec_bound: Optional[int] = 2, budget: int = 4000,
                   move_cap: int = 64, max_plays: int = 200000) -> VerifyReport:
    """Play the agent on the interpreted formula for each interpretation,
    against exhaustive environments. Losses and undecided plays are listed
    with the index of the offending interpretation."""
    from .interps import apply_interp

    plays = wins = 0
    losses: list[tuple[int, Transcript]] = []
    undecided: list[tuple[int, Transcript]] = []
    for idx, interp in enumerate(interps):
        game = apply_interp(interp, f)
        e = interp.valuation()
        report = explore_exhaustive(
            spec, game, e, depth=depth, rec_bound=rec_bound,
            budget=budget, move_cap=move_cap, max_plays=max_plays,
        )
        plays += report.plays
        for t in report.transcripts:
            if t.outcome is Player.MACHINE:
                wins += 1
            elif t.outcome is Player.ENVIRONMENT:
                losses.append((idx, t))
            else:
                undecided.append((idx, t))
    return VerifyReport(plays, wins, tuple(losses), tuple(undecided))


# --- agent instances ---


class AgentInstance:
    """Base contract: observe labmoves, emit one action per step."""

    def start(self, e: gm.Valuation):
        self.e = e

    def observe(self, lam: Labmove):
        pass

    def step(self) -> Action:
        return GrantPermission()

    def clone(self) -> "AgentInstance":
        return copy.deepcopy(self)


Pattern = tuple[Optional[str], ...]
Rule = tuple[Pattern, tuple[Union[str, int], ...]]


def _pat_rewrite(move: str, src: Pattern, dst: tuple[Union[str, int], ...]) -> Optional[str]:
    toks = move.split(".")
    if len(toks) <= len(src):
        return None
    binds: list[str] = []
    for pat, tok in zip(src, toks):
        if pat is None:
            binds.append(tok)
        elif pat != tok:
            return None
    head = [binds[x] if isinstance(x, int) else x for x in dst]
    return ".".join(head + toks[len(src):])


def _prefix_rules(pairs: Iterable[tuple[str, str]]) -> tuple[Rule, ...]:
    rules: list[Rule] = []
    for a, b in pairs:
        ta = tuple(a.split("."))
        tb = tuple(b.split("."))
        rules.append((ta, tb))
        rules.append((tb, ta))
    return tuple(rules)


class Router(AgentInstance):
    """Copy-cat over prefix-rewrite rules, with optional opening moves.
    Unmatched environment moves are ignored."""

    def __init__(self, rules: tuple[Rule, ...] = (), openers: Iterable[str] = ()):
        self.rules = rules
        self.queue: deque[str] = deque(openers)

    def translate(self, move: str) -> Optional[list[str]]:
        return None

    def observe(self, lam: Labmove):
        if lam.player is Player.MACHINE:
            return
        special = self.translate(lam.move)
        if special is not None:
            self.queue.extend(special)
            return
        for src, dst in self.rules:
            got = _pat_rewrite(lam.move, src, dst)
            if got is not None:
                self.queue.append(got)
                return

    def step(self) -> Action:
        if self.queue:
            return MakeMove(self.queue.popleft())
        return GrantPermission()


class ConstWin(AgentInstance):
    pass


def _int_token(tok: str) -> Optional[int]:
    if re.fullmatch(r"[1-9][0-9]*", tok):
        return int(tok)
    return None


class PL6CAgent(Router):
    """Interleaves two streams of copies into odd and even indices."""

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if len(toks) >= 4 and toks[0] == "1" and toks[1] in ("1", "2"):
            i = _int_token(toks[2])
            if i is None:
                return None
            k = 2 * i - 1 if toks[1] == "1" else 2 * i
            return [".".join(["2", str(k)] + toks[3:])]
        if len(toks) >= 3 and toks[0] == "2":
            k = _int_token(toks[1])
            if k is None:
                return None
            if k % 2:
                return [".".join(["1", "1", str((k + 1) // 2)] + toks[2:])]
            return [".".join(["1", "2", str(k // 2)] + toks[2:])]
        return None


def pair_index(i: int, j: int) -> int:
    """The pairing 2^(i-1) * (2j-1), a bijection from index pairs."""
    return (1 << (i - 1)) * (2 * j - 1)


def unpair_index(k: int) -> tuple[int, int]:
    i = 1
    while k % 2 == 0:
        k //= 2
        i += 1
    return i, (k + 1) // 2


class PL5Agent(Router):
    """Collapses doubly indexed copies through the pairing function."""

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if len(toks) >= 4 and toks[0] == "1":
            i, j = _int_token(toks[1]), _int_token(toks[2])
            if i is None or j is None:
                return None
            return [".".join(["2", str(pair_index(i, j))] + toks[3:])]
        if len(toks) >= 3 and toks[0] == "2":
            k = _int_token(toks[1])
            if k is None:
                return None
            i, j = unpair_index(k)
            return [".".join(["1", str(i), str(j)] + toks[2:])]
        return None


_BITS_RE = re.compile(r"[01]*$")
_REPL_TOK = re.compile(r"([01]*):$")


class L4Agent(Router):
    """Distributes a branching recurrence over an implication: consequent
    replications are mirrored into both antecedent trees, then moves are
    copied per branch."""

    def __init__(self):
        super().__init__((
            (("2", "2", None), ("1", 0, "2")),
            (("1", None, "2"), ("2", "2", 0)),
            (("2", "1", None), ("1", 0, "1")),
            (("1", None, "1"), ("2", "1", 0)),
        ))
        self.mirrored: set[str] = set()

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if len(toks) == 3 and toks[0] == "2" and toks[1] == "2":
            m = _REPL_TOK.fullmatch(toks[2])
            if m is not None:
                w = m.group(1)
                if w in self.mirrored:
                    return []
                self.mirrored.add(w)
                return [f"1.{w}:", f"2.1.{w}:"]
        return None


class L4AAgent(Router):
    """Splays one branching recurrence of a disjunction into a disjunction
    of branching recurrences."""

    def __init__(self, n: int):
        super().__init__()
        self.n = n
        self.rules = (
            (("1", None, None), ("2", 1, 0)),
            (("2", None, None), ("1", 1, 0)),
        )

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if len(toks) == 2 and toks[0] == "1":
            m = _REPL_TOK.fullmatch(toks[1])
            if m is not None:
                w = m.group(1)
                return [f"2.{j}.{w}:" for j in range(1, self.n + 1)]
        return None


class L6CAgent(Router):
    """Contracts two branching corecurrences into one by replicating the
    consequent once and mapping its subtrees onto the disjuncts."""

    def __init__(self):
        super().__init__(openers=("2.:",))

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if len(toks) == 3 and toks[0] == "1" and toks[1] in ("1", "2"):
            m = _REPL_TOK.fullmatch(toks[2])
            if m is not None:
                bit = "0" if toks[1] == "1" else "1"
                return [f"2.{bit}{m.group(1)}:"]
        if len(toks) >= 3 and toks[0] == "1" and toks[1] in ("1", "2"):
            w = toks[2]
            if _BITS_RE.fullmatch(w):
                bit = "0" if toks[1] == "1" else "1"
                return [".".join(["2", bit + w] + toks[3:])]
        if len(toks) >= 3 and toks[0] == "2":
            v = toks[1]
            if _BITS_RE.fullmatch(v):
                if v == "":
                    tail = toks[2:]
                    return [
                        ".".join(["1", "1", ""] + tail),
                        ".".join(["1", "2", ""] + tail),
                    ]
                j = "1" if v[0] == "0" else "2"
                return [".".join(["1", j, v[1:]] + toks[2:])]
        return None


class L5Agent(AgentInstance):
    """Contracts two levels of branching corecurrence into one, keeping a
    colored bitstring tree whose blue and yellow projections address the
    premise and whose contents address the conclusion."""

    def __init__(self):
        self.members: set[tuple[tuple[str, str], ...]] = {()}
        self.queue: deque[str] = deque()

    def _leaves(self) -> list[tuple[tuple[str, str], ...]]:
        leaves = [
            v for v in self.members
            if not any(len(c) == len(v) + 1 and c[:len(v)] == v for c in self.members)
        ]
        return sorted(leaves)

    def observe(self, lam: Labmove):
        from .bittrees import cbt_projections

        if lam.player is Player.MACHINE:
            return
        toks = lam.move.split(".")
        if toks[0] == "1":
            if len(toks) == 2:
                m = _REPL_TOK.fullmatch(toks[1])
                if m is None:
                    return
                w = m.group(1)
                for v in self._leaves():
                    pr = cbt_projections(v)
                    if pr.blue == w:
                        self.queue.append(f"2.{pr.content}:")
                        self.members.add(v + (("0", "b"),))
                        self.members.add(v + (("1", "b"),))
                return
            if len(toks) == 3 and _REPL_TOK.fullmatch(toks[2]):
                w = toks[1]
                u = _REPL_TOK.fullmatch(toks[2]).group(1)
                if not _BITS_RE.fullmatch(w):
                    return
                for v in self._leaves():
                    pr = cbt_projections(v)
                    if pr.blue.startswith(w) and pr.yellow == u:
                        self.queue.append(f"2.{pr.content}:")
                        self.members.add(v + (("0", "y"),))
                        self.members.add(v + (("1", "y"),))
                return
            if len(toks) >= 4:
                w, u, tail = toks[1], toks[2], toks[3:]
                if not (_BITS_RE.fullmatch(w) and _BITS_RE.fullmatch(u)):
                    return
                for v in self._leaves():
                    pr = cbt_projections(v)
                    if pr.blue.startswith(w) and pr.yellow.startswith(u):
                        self.queue.append(".".join(["2", pr.content] + tail))
                return
            return
        if toks[0] == "2" and len(toks) >= 3:
            w, tail = toks[1], toks[2:]
            if not _BITS_RE.fullmatch(w):
                return
            for v in self._leaves():
                pr = cbt_projections(v)
                if pr.content.startswith(w):
                    self.queue.append(".".join(["1", pr.blue, pr.yellow] + tail))

    def step(self) -> Action:
        if self.queue:
            return MakeMove(self.queue.popleft())
        return GrantPermission()


class OCT5AAgent(Router):
    """Distributes a constant choice over an implication: echoes the
    environment's pick into both other choice points, then copies."""

    def __init__(self):
        super().__init__()
        self.armed = False

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if not self.armed and toks[:2] == ["2", "2"] and len(toks) == 3:
            c = toks[2]
            self.armed = True
            self.rules = _prefix_rules([("1.1", "2.1"), ("1.2", "2.2")])
            return [f"1.{c}", f"2.1.{c}"]
        return None


class OCT5BAgent(Router):
    """Resolves the conclusion's constant choice by evaluating a term,
    then copies."""

    def __init__(self, term):
        super().__init__(_prefix_rules([("1", "2")]))
        self.term = term

    def start(self, e: gm.Valuation):
        super().start(e)
        self.queue.appendleft(f"2.{e.value(self.term)}")


class OCT5CAgent(Router):
    """Buffers premise traffic until the environment resolves a vacuous
    constant choice, then replays and copies."""

    def __init__(self):
        super().__init__()
        self.buffer: list[str] = []
        self.armed = False

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        if not self.armed:
            if toks[0] == "2" and len(toks) == 2:
                self.armed = True
                self.rules = _prefix_rules([("1", "2")])
                replay = [".".join(["2"] + b.split(".")[1:]) for b in self.buffer]
                self.buffer = []
                return replay
            if toks[0] == "1":
                self.buffer.append(move)
            return []
        return None


class L8KAgent(Router):
    """Waits for the environment to pick a conjunct in the conclusion's
    choice, then routes that premise conjunct against the conclusion."""

    def __init__(self, q: int, n: int):
        super().__init__()
        self.q = q
        self.n = n
        self.buffer: list[Labmove] = []
        self.armed = False

    def translate(self, move: str) -> Optional[list[str]]:
        toks = move.split(".")
        choice_comp = str(self.q + 1) if self.q else None
        if not self.armed:
            trigger = (
                toks[0] == "2" and len(toks) == 3 and toks[1] == choice_comp
                if self.q
                else toks[0] == "2" and len(toks) == 2
            )
            if trigger:
                c = toks[-1]
                if _int_token(c) is None or not 1 <= int(c) <= self.n:
                    return []
                self.armed = True
                self.rules = _k_rules(self.q, self.n, int(c))
                replay = list(self.buffer)
                self.buffer = []
                out = []
                for lam in replay:
                    got = self.translate(lam.move)
                    if got:
                        out.extend(got)
                        continue
                    for src, dst in self.rules:
                        r = _pat_rewrite(lam.move, src, dst)
                        if r is not None:
                            out.append(r)
                            break
                return out
            self.buffer.append(Labmove(Player.ENVIRONMENT, move))
            return []
        return None


def _k_rules(q: int, n: int, c: int) -> tuple[Rule, ...]:
    prem = f"1.{c}" if n > 1 else "1"
    if q == 0:
        return _prefix_rules([(prem, "2")])
    pairs = [(f"{prem}.{j}", f"2.{j}") for j in range(1, q + 2)]
    return _prefix_rules(pairs)


# --- schema boards for the tautology agents ---


class _Leaf:
    def __init__(self, tag):
        self.tag = tag


class _Group:
    def __init__(self, children):
        self.children = children


def _leaf_paths(node, path=()) -> list[tuple[object, tuple[str, ...]]]:
    if isinstance(node, _Leaf):
        return [(node.tag, path)]
    kids = node.children
    out = []
    for i, kid in enumerate(kids):
        step = (str(i + 1),) if len(kids) > 1 else ()
        out.extend(_leaf_paths(kid, path + step))
    return out


def _group(items):
    return items[0] if len(items) == 1 else _Group(items)


def _l8_board(schema: str, shape: tuple[int, ...]) -> tuple[tuple[Rule, ...], dict]:
    """Returns routing rules plus schema metadata. Each schema instance is
    an implication; its two sides are component trees whose equally tagged
    leaves get copied into one another."""
    meta: dict = {}

    def build(premise, conclusion, extra_pairs=()):
        left = _leaf_paths(premise)
        right = _leaf_paths(conclusion)
        by_tag: dict = {}
        for tag, path in left:
            by_tag.setdefault(tag, []).append(("1",) + path)
        for tag, path in right:
            by_tag.setdefault(tag, []).append(("2",) + path)
        pairs = []
        for tag, spots in sorted(by_tag.items(), key=lambda kv: str(kv[0])):
            if len(spots) == 2:
                pairs.append((".".join(spots[0]), ".".join(spots[1])))
            elif len(spots) != 1:
                raise ShapeMismatch(f"tag {tag} appears {len(spots)} times")
        pairs.extend(extra_pairs)
        return _prefix_rules(pairs)

    if schema == "a":
        if shape:
            raise ShapeMismatch("schema a takes no shape")
        return _prefix_rules([("1", "2")]), meta
    if schema == "b":
        if shape:
            raise ShapeMismatch("schema b takes no shape")
        return build(
            _group([_Leaf("P"), _Leaf("Q")]), _group([_Leaf("Q"), _Leaf("P")])
        ), meta
    if schema == "c":
        if shape:
            raise ShapeMismatch("schema c takes no shape")
        rules = _prefix_rules(
            [("2.1", "1.1.1"), ("1.1.2", "1.2.1"), ("1.2.2", "2.2")]
        )
        return rules, meta
    if schema == "d":
        qs = shape
        n = len(qs)
        if n < 1:
            raise ShapeMismatch("schema d needs at least one conjunct")
        prem = _group([
            _group([_Leaf(("q", i, j)) for j in range(qs[i])] + [_Leaf(("p", i))])
            for i in range(n)
        ])
        concl_parts: list = []
        for i in range(n):
            for j in range(qs[i]):
                concl_parts.append(_Leaf(("q", i, j)))
        concl_parts.append(_group([_Leaf(("p", i)) for i in range(n)]))
        return build(prem, _group(concl_parts)), meta
    if schema == "e":
        if len(shape) != 3:
            raise ShapeMismatch("schema e takes (r, n, s)")
        r, n, s = shape
        if n < 1:
            raise ShapeMismatch("schema e needs n >= 1")
        ante = [_Leaf(("r", i)) for i in range(r)] + \
               [_Leaf(("p", k)) for k in range(n)] + \
               [_Leaf(("s", i)) for i in range(s)]
        cons = [_Leaf(("rr", i)) for i in range(r)] + \
               [_Leaf(("q", k)) for k in range(n)] + \
               [_Leaf(("ss", i)) for i in range(s)]
        extra = []
        a_paths = {tag: path for tag, path in _leaf_paths(_group(ante))}
        c_paths = {tag: path for tag, path in _leaf_paths(_group(cons))}
        for i in range(r):
            left = ".".join(("2", "1") + a_paths[("r", i)])
            right = ".".join(("2", "2") + c_paths[("rr", i)])
            extra.append((left, right))
        for i in range(s):
            left = ".".join(("2", "1") + a_paths[("s", i)])
            right = ".".join(("2", "2") + c_paths[("ss", i)])
            extra.append((left, right))
        pairs = []
        for k in range(n):
            pairs.append((
                ".".join(("1",) + (() if n == 1 else (str(k + 1),)) + ("1",)),
                ".".join(("2", "1") + a_paths[("p", k)]),
            ))
            pairs.append((
                ".".join(("1",) + (() if n == 1 else (str(k + 1),)) + ("2",)),
                ".".join(("2", "2") + c_paths[("q", k)]),
            ))
        return _prefix_rules(pairs + extra), meta
    if schema in ("f", "g"):
        if len(shape) != 3:
            raise ShapeMismatch(f"schema {schema} takes (q, r, s)")
        q, r, s = shape
        if r < 1:
            raise ShapeMismatch("the regrouped block needs r >= 1")
        flat_parts = [_Leaf(("q", i)) for i in range(q)] + \
                     [_Leaf(("r", i)) for i in range(r)] + \
                     [_Leaf(("s", i)) for i in range(s)]
        grouped_parts = [_Leaf(("q", i)) for i in range(q)] + \
                        [_group([_Leaf(("r", i)) for i in range(r)])] + \
                        [_Leaf(("s", i)) for i in range(s)]
        flat = _group(flat_parts)
        grouped = _group(grouped_parts)
        if schema == "f":
            return build(flat, grouped), meta
        return build(grouped, flat), meta
    if schema == "h":
        if len(shape) != 1 or shape[0] < 1:
            raise ShapeMismatch("schema h takes (n,) with n >= 1")
        n = shape[0]
        pairs = []
        for k in range(n):
            left = ("1", "1") + ((str(k + 1),) if n > 1 else ())
            right = ("2",) + ("2",) * k + ("1",)
            pairs.append((".".join(left), ".".join(right)))
        pairs.append((".".join(("1", "2")), ".".join(("2",) + ("2",) * (n - 1) + ("2",))))
        return _prefix_rules(pairs), meta
    if schema == "i":
        if len(shape) != 1 or shape[0] < 1:
            raise ShapeMismatch("schema i takes (q,) with q >= 1")
        q = shape[0]
        prem = _group([_Leaf(("q", i)) for i in range(q)])
        concl = _group([_Leaf(("q", i)) for i in range(q)] + [_Leaf("extra")])
        return build(prem, concl), meta
    if schema == "j":
        if len(shape) != 2:
            raise ShapeMismatch("schema j takes (n, i)")
        n, i = shape
        if not 1 <= i <= n:
            raise ShapeMismatch("schema j needs 1 <= i <= n")
        meta["opener"] = f"2.{i}"
        return _prefix_rules([("1", "2")]), meta
    if schema == "k":
        if len(shape) != 2:
            raise ShapeMismatch("schema k takes (q, n)")
        q, n = shape
        if n < 1:
            raise ShapeMismatch("schema k needs n >= 1")
        meta["k"] = (q, n)
        return (), meta
    raise ShapeMismatch(f"unknown schema {schema!r}")


# --- closures ---


class PrecClosure(AgentInstance):
    """One fresh instance of the base strategy per conjunct index."""

    def __init__(self, base: AgentSpec, bound: Optional[int] = None):
        self.base = base
        self.bound = bound
        self.copies: dict[int, AgentInstance] = {}
        self.queue: deque[str] = deque()

    def _copy(self, i: int) -> Optional[AgentInstance]:
        if self.bound is not None and i > self.bound:
            return None
        if i not in self.copies:
            self.copies[i] = instantiate(self.base, self.e)
        return self.copies[i]

    def observe(self, lam: Labmove):
        if lam.player is Player.MACHINE:
            return
        toks = lam.move.split(".")
        i = _int_token(toks[0]) if toks else None
        if i is None or len(toks) < 2:
            return
        agent = self._copy(i)
        if agent is None:
            return
        agent.observe(Labmove(Player.ENVIRONMENT, ".".join(toks[1:])))
        self._drain(i, agent)

    def _drain(self, i: int, agent: AgentInstance):
        while True:
            act = agent.step()
            if isinstance(act, MakeMove):
                self.queue.append(f"{i}.{act.move}")
            else:
                return

    def step(self) -> Action:
        if self.queue:
            return MakeMove(self.queue.popleft())
        return GrantPermission()


class BrecClosure(AgentInstance):
    """A leaf-indexed pool of instances over the evolving tree: forking a
    leaf snapshots its agent into both children."""

    def __init__(self, base: AgentSpec):
        self.base = base
        self.leaves: dict[str, AgentInstance] = {}
        self.queue: deque[str] = deque()

    def start(self, e: gm.Valuation):
        super().start(e)
        self.leaves = {"": instantiate(self.base, e)}

    def observe(self, lam: Labmove):
        if lam.player is Player.MACHINE:
            return
        move = lam.move
        m = _REPL_TOK.fullmatch(move)
        if m is not None:
            w = m.group(1)
            agent = self.leaves.pop(w, None)
            if agent is None:
                return
            self.leaves[w + "0"] = agent
            self.leaves[w + "1"] = agent.clone()
            return
        toks = move.split(".")
        if len(toks) < 2 or not _BITS_RE.fullmatch(toks[0]):
            return
        w = toks[0]
        inner = ".".join(toks[1:])
        for u in sorted(self.leaves):
            if u.startswith(w):
                agent = self.leaves[u]
                agent.observe(Labmove(Player.ENVIRONMENT, inner))
                self._drain(u, agent)

    def _drain(self, u: str, agent: AgentInstance):
        while True:
            act = agent.step()
            if isinstance(act, MakeMove):
                self.queue.append(f"{u}.{act.move}")
            else:
                return

    def step(self) -> Action:
        if self.queue:
            return MakeMove(self.queue.popleft())
        return GrantPermission()


class ChallClosure(AgentInstance):
    """Waits for the environment's constant, then runs the base strategy
    under the extended valuation."""

    def __init__(self, base: AgentSpec, var: str):
        self.base = base
        self.var = var
        self.inner: Optional[AgentInstance] = None
        self.queue: deque[str] = deque()

    def observe(self, lam: Labmove):
        if lam.player is Player.MACHINE:
            return
        if self.inner is None:
            c = _int_token(lam.move)
            if c is None:
                return
            self.inner = instantiate(self.base, self.e.bind(self.var, c))
            self._drain()
            return
        self.inner.observe(lam)
        self._drain()

    def _drain(self):
        assert self.inner is not None
        while True:
            act = self.inner.step()
            if isinstance(act, MakeMove):
                self.queue.append(act.move)
            else:
                return

    def step(self) -> Action:
        if self.queue:
            return MakeMove(self.queue.popleft())
        return GrantPermission()


# --- co-simulation ---

Wire = tuple[object, tuple[str, ...], object, tuple[str, ...]]


class Composite(AgentInstance):
    """Runs several agents against one another internally, exchanging
    moves over prefix-rewriting wires; traffic on external wires crosses
    the boundary of the composite."""

    def __init__(self, agents: list[AgentInstance], wires: list[Wire],
                 fuel: int = 60000):
        self.agents = agents
        self.wires = wires
        self.fuel = fuel
        self.out_queue: deque[str] = deque()
        self.in_queues: list[deque[Labmove]] = [deque() for _ in agents]

    def start(self, e: gm.Valuation):
        super().start(e)
        for agent in self.agents:
            agent.start(e)

    def _route(self, src, move: str):
        for wsrc, wpre, wdst, wrep in self.wires:
            if wsrc != src:
                continue
            if wpre:
                toks = move.split(".")
                if len(toks) <= len(wpre) or tuple(toks[:len(wpre)]) != wpre:
                    continue
                rebuilt = ".".join(wrep + tuple(toks[len(wpre):]))
            else:
                rebuilt = ".".join(wrep + (move,)) if wrep else move
            if wdst == "ext":
                self.out_queue.append(rebuilt)
            else:
                self.in_queues[wdst].append(Labmove(Player.ENVIRONMENT, rebuilt))
            return
        raise ShapeMismatch(f"move {move!r} from {src!r} matches no wire")

    def observe(self, lam: Labmove):
        if lam.player is Player.MACHINE:
            return
        self._route("ext", lam.move)

    def step(self) -> Action:
        while True:
            if self.out_queue:
                return MakeMove(self.out_queue.popleft())
            progressed = False
            for i, agent in enumerate(self.agents):
                while self.in_queues[i]:
                    agent.observe(self.in_queues[i].popleft())
                    progressed = True
                    self.fuel -= 1
                act = agent.step()
                self.fuel -= 1
                if isinstance(act, MakeMove):
                    self._route(i, act.move)
                    progressed = True
                if self.fuel <= 0:
                    raise BudgetExceeded("co-simulation budget exhausted")
            if not progressed and not self.out_queue:
                return GrantPermission()


def _tok(prefix: str) -> tuple[str, ...]:
    return tuple(prefix.split(".")) if prefix else ()


def _mp_wires(n: int) -> list[Wire]:
    """Premise agents 0..n-1 and the implication agent n; the outer board
    is the implication's consequent."""
    imp = n
    wires: list[Wire] = [
        ("ext", (), imp, _tok("2")),
        (imp, _tok("2"), "ext", ()),
    ]
    for i in range(n):
        if n == 1:
            ante = _tok("1")
        else:
            ante = _tok(f"1.{i + 1}")
        wires.append((imp, ante, i, ()))
        wires.append((i, (), imp, ante))
    return wires


def _trans_wires() -> list[Wire]:
    return [
        ("ext", _tok("1"), 0, _tok("1")),
        (0, _tok("1"), "ext", _tok("1")),
        (0, _tok("2"), 1, _tok("1")),
        (1, _tok("1"), 0, _tok("2")),
        (1, _tok("2"), "ext", _tok("2")),
        ("ext", _tok("2"), 1, _tok("2")),
    ]


# --- building instances from specs ---

_EXTRA_BUILDERS: dict = {}


def register_agent_kind(kind: str, builder) -> None:
    """Register a constructor for a custom AgentSpec kind. The builder is
    called with the spec and must return an AgentInstance."""
    _EXTRA_BUILDERS[kind] = builder


def _build(spec: AgentSpec) -> AgentInstance:
    kind = spec.kind
    if kind in _EXTRA_BUILDERS:
        return _EXTRA_BUILDERS[kind](spec)
    if kind == "CCS" or kind == "OCT99":
        return Router(_prefix_rules([("1", "2")]))
    if kind == "CCS_remap":
        return Router(_prefix_rules(spec.param("pairs", ())))
    if kind == "Const_win":
        return ConstWin()
    if kind == "PL6A":
        return Router(_prefix_rules([("1", "2.1")]))
    if kind == "L6A":
        return Router(_prefix_rules([("1", "2.")]))
    if kind == "PL4":
        return Router((
            (("1", None, "1"), ("2", "1", 0)),
            (("2", "1", None), ("1", 0, "1")),
            (("1", None, "2"), ("2", "2", 0)),
            (("2", "2", None), ("1", 0, "2")),
        ))
    if kind == "L4":
        return L4Agent()
    if kind == "PL4A":
        return Router((
            (("1", None, None), ("2", 1, 0)),
            (("2", None, None), ("1", 1, 0)),
        ))
    if kind == "L4A":
        return L4AAgent(int(spec.param("n")))
    if kind == "PL6C":
        return PL6CAgent()
    if kind == "L6C":
        return L6CAgent()
    if kind == "PL5":
        return PL5Agent()
    if kind == "L5":
        return L5Agent()
    if kind == "OCT5A":
        return OCT5AAgent()
    if kind == "OCT5B":
        return OCT5BAgent(spec.param("term"))
    if kind == "OCT5C":
        return OCT5CAgent()
    if kind == "L8":
        schema = spec.param("schema")
        shape = tuple(spec.param("shape", ()))
        rules, meta = _l8_board(schema, shape)
        if "k" in meta:
            q, n = meta["k"]
            return L8KAgent(q, n)
        openers = (meta["opener"],) if "opener" in meta else ()
        return Router(rules, openers)
    if kind == "Composite":
        op = spec.param("op")
        if op == "closure_prec":
            bound = spec.param("bound")
            return PrecClosure(spec.children[0], None if bound is None else int(bound))
        if op == "closure_brec":
            return BrecClosure(spec.children[0])
        if op == "closure_chall":
            return ChallClosure(spec.children[0], spec.param("var"))
        agents = [_build(c) for c in spec.children]
        if op == "mp":
            premise, imp = agents
            return Composite([premise, imp], _mp_wires(1))
        if op == "gmp":
            *premises, imp = agents
            return Composite(premises + [imp], _mp_wires(len(premises)))
        if op == "trans":
            return Composite(agents, _trans_wires())
        raise ShapeMismatch(f"unknown combinator {op!r}")
    raise ShapeMismatch(f"unknown agent kind {kind!r}")
