"""Game expressions and their evaluation.

A game expression is a tree built from finite game tables, elementary
predicates, and the operator roster: negation, parallel and choice
connectives, choice and blind quantifiers over a bounded constant domain,
and the four recurrence flavors (parallel and branching, each with bounded
forms). The functions here answer the basic questions about a game: is a
run legal, who has won it, what moves are available, what does the finite
expansion look like, and what game remains after a legal prefix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Union

from .bittrees import BT, ROOT_BT, tree_of
from .errors import (
    BlowupGuard,
    CapExceeded,
    IllegalStep,
    NotALeaf,
    NotANode,
    NotUnilegal,
    ParseError,
)
from .runs import (
    EMPTY_RUN,
    Labmove,
    Player,
    Run,
    bits_prefix,
    enumerate_delays,
    negate_run,
    project_bits,
    split_bits_move,
    split_replicative,
)

Term = Union[str, int]

_INDEX = re.compile(r"^([1-9][0-9]*)\.(.+)$", re.DOTALL)
_DECIMAL = re.compile(r"^[1-9][0-9]*$")


def split_indexed(move: str) -> Optional[tuple[int, str]]:
    m = _INDEX.match(move)
    if m is None:
        return None
    return int(m.group(1)), m.group(2)


def parse_decimal(move: str) -> Optional[int]:
    if _DECIMAL.match(move):
        return int(move)
    return None


# --- valuations ---


@dataclass(frozen=True)
class Valuation:
    """Assignment of constants to variables over the domain {1..domain}.

    Unassigned variables read as 1; constants read as themselves.
    """

    domain: int = 3
    items: tuple[tuple[str, int], ...] = ()

    def value(self, t: Term) -> int:
        if isinstance(t, int):
            return t
        for name, c in self.items:
            if name == t:
                return c
        return 1

    def bind(self, x: str, c: int) -> "Valuation":
        rest = tuple((n, v) for n, v in self.items if n != x)
        return Valuation(self.domain, tuple(sorted(rest + ((x, c),))))

    def with_domain(self, d: int) -> "Valuation":
        return Valuation(d, self.items)

    def constants(self) -> range:
        return range(1, self.domain + 1)


# --- elementary predicates ---


@dataclass(frozen=True)
class TruthTable:
    arity: int
    rows: frozenset[tuple[int, ...]]

    def holds(self, args: tuple[int, ...]) -> bool:
        return args in self.rows

    @staticmethod
    def from_fn(arity: int, domain: int, fn: Callable[..., bool]) -> "TruthTable":
        def tuples(n: int):
            if n == 0:
                yield ()
                return
            for rest in tuples(n - 1):
                for c in range(1, domain + 1):
                    yield rest + (c,)

        rows = frozenset(t for t in tuples(arity) if fn(*t))
        return TruthTable(arity, rows)


TT_TRUE = TruthTable(0, frozenset({()}))
TT_FALSE = TruthTable(0, frozenset())


# --- finite games ---


@dataclass(frozen=True)
class FiniteGame:
    win: Player
    children: tuple[tuple[Labmove, "FiniteGame"], ...] = ()

    def __post_init__(self):
        seen = set()
        for lm, _ in self.children:
            if lm in seen:
                raise ParseError(f"duplicate child labmove {lm.text()}")
            seen.add(lm)
        ordered = tuple(
            sorted(self.children, key=lambda kv: (kv[0].player.token, kv[0].move))
        )
        object.__setattr__(self, "children", ordered)

    def child(self, lm: Labmove) -> Optional["FiniteGame"]:
        for key, node in self.children:
            if key == lm:
                return node
        return None


def fg(win: Union[str, Player], children: Optional[dict] = None) -> FiniteGame:
    """Build a finite game from a ``{"T:move": subgame}`` mapping."""
    w = Player.from_token(win) if isinstance(win, str) else win
    kids = []
    for key, node in (children or {}).items():
        player, move = key.split(":", 1)
        kids.append((Labmove(Player.from_token(player), move), node))
    return FiniteGame(w, tuple(kids))


def fg_walk(game: FiniteGame, run: Run) -> tuple[FiniteGame, Optional[int]]:
    """Follow ``run`` from the root; report the first off-tree move index."""
    node = game
    for i, lm in enumerate(run):
        nxt = node.child(lm)
        if nxt is None:
            return node, i
        node = nxt
    return node, None


def fg_winner(game: FiniteGame, run: Run) -> Player:
    node, bad = fg_walk(game, run)
    if bad is not None:
        return run[bad].player.opponent
    return node.win


def fg_size(game: FiniteGame) -> int:
    return 1 + sum(fg_size(child) for _, child in game.children)


def fg_to_json(game: FiniteGame) -> dict:
    return {
        "win": game.win.token,
        "children": {lm.text(): fg_to_json(child) for lm, child in game.children},
    }


def fg_from_json(data: dict) -> FiniteGame:
    kids = []
    for key, sub in data["children"].items():
        player, move = key.split(":", 1)
        kids.append((Labmove(Player.from_token(player), move), fg_from_json(sub)))
    kids.sort(key=lambda pair: (pair[0].player.token, pair[0].move))
    return FiniteGame(Player.from_token(data["win"]), tuple(kids))


# --- expression nodes ---


class GameExpr:
    """Base marker for game expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Fin(GameExpr):
    game: FiniteGame


@dataclass(frozen=True)
class Elem(GameExpr):
    name: str
    args: tuple[Term, ...]
    table: TruthTable

    def __post_init__(self):
        if len(self.args) != self.table.arity:
            raise ParseError(f"{self.name}: arity mismatch")


@dataclass(frozen=True)
class Neg(GameExpr):
    body: GameExpr


@dataclass(frozen=True)
class Pand(GameExpr):
    items: tuple[GameExpr, ...]


@dataclass(frozen=True)
class Por(GameExpr):
    items: tuple[GameExpr, ...]


@dataclass(frozen=True)
class Imp(GameExpr):
    lhs: GameExpr
    rhs: GameExpr


@dataclass(frozen=True)
class Chand(GameExpr):
    items: tuple[GameExpr, ...]


@dataclass(frozen=True)
class Chor(GameExpr):
    items: tuple[GameExpr, ...]


@dataclass(frozen=True)
class ChAll(GameExpr):
    var: str
    body: GameExpr


@dataclass(frozen=True)
class ChEx(GameExpr):
    var: str
    body: GameExpr


@dataclass(frozen=True)
class PaAll(GameExpr):
    var: str
    body: GameExpr


@dataclass(frozen=True)
class PaEx(GameExpr):
    var: str
    body: GameExpr


@dataclass(frozen=True)
class Switch(GameExpr):
    """Finite game selected by the value of a variable.

    The one node kind whose move structure depends on the valuation; it
    exists to exercise the unistructurality and admissibility checks.
    """

    var: str
    cases: tuple[tuple[int, FiniteGame], ...]

    def case(self, c: int) -> FiniteGame:
        for k, game in self.cases:
            if k == c:
                return game
        raise ParseError(f"switch on {self.var!r} has no case for {c}")


@dataclass(frozen=True)
class BlAll(GameExpr):
    var: str
    body: GameExpr

    def __post_init__(self):
        if not syntactically_unistructural_in(self.body, self.var):
            raise ParseError(
                f"blind binder over {self.var!r} needs a body whose move "
                f"structure ignores {self.var!r}"
            )


@dataclass(frozen=True)
class BlEx(GameExpr):
    var: str
    body: GameExpr

    def __post_init__(self):
        if not syntactically_unistructural_in(self.body, self.var):
            raise ParseError(
                f"blind binder over {self.var!r} needs a body whose move "
                f"structure ignores {self.var!r}"
            )


@dataclass(frozen=True)
class PRec(GameExpr):
    body: GameExpr


@dataclass(frozen=True)
class PCor(GameExpr):
    body: GameExpr


@dataclass(frozen=True)
class PRecT(GameExpr):
    """Parallel recurrence mid-play: finitely many copies have evolved."""

    body: GameExpr
    touched: tuple[tuple[int, GameExpr], ...]

    def copy_game(self, i: int) -> GameExpr:
        for k, g in self.touched:
            if k == i:
                return g
        return self.body


@dataclass(frozen=True)
class PCorT(GameExpr):
    body: GameExpr
    touched: tuple[tuple[int, GameExpr], ...]

    def copy_game(self, i: int) -> GameExpr:
        for k, g in self.touched:
            if k == i:
                return g
        return self.body


@dataclass(frozen=True)
class DBT(GameExpr):
    """Bitstring tree whose leaves carry games."""

    tree: BT
    decoration: tuple[tuple[str, GameExpr], ...]

    def __post_init__(self):
        keys = sorted(w for w, _ in self.decoration)
        if keys != self.tree.leaves():
            raise ParseError("decoration keys must be exactly the leaves")

    def game_at(self, leaf: str) -> GameExpr:
        for w, g in self.decoration:
            if w == leaf:
                return g
        raise NotALeaf(f"{leaf!r} is not a decorated leaf")

    @staticmethod
    def singleton(g: GameExpr) -> "DBT":
        return DBT(ROOT_BT, (("", g),))


@dataclass(frozen=True)
class BRec(GameExpr):
    body: GameExpr


@dataclass(frozen=True)
class BCor(GameExpr):
    body: GameExpr


@dataclass(frozen=True)
class BRecB(GameExpr):
    bound: int
    body: GameExpr

    def __post_init__(self):
        if self.bound < 1:
            raise ParseError("bound must be at least 1")


@dataclass(frozen=True)
class BCorB(GameExpr):
    bound: int
    body: GameExpr

    def __post_init__(self):
        if self.bound < 1:
            raise ParseError("bound must be at least 1")


@dataclass(frozen=True)
class BRecDbt(GameExpr):
    """Branching recurrence mid-play: the replication tree so far."""

    dbt: DBT
    reps_left: Optional[int]


@dataclass(frozen=True)
class BCorDbt(GameExpr):
    dbt: DBT
    reps_left: Optional[int]


_BREC_KINDS = (BRec, BRecB, BRecDbt)
_BCOR_KINDS = (BCor, BCorB, BCorDbt)


def elem_top(name: str = "T") -> Elem:
    return Elem(name, (), TT_TRUE)


def elem_bot(name: str = "F") -> Elem:
    return Elem(name, (), TT_FALSE)


def pred(name: str, args: tuple[Term, ...], domain: int,
         fn: Callable[..., bool]) -> Elem:
    return Elem(name, args, TruthTable.from_fn(len(args), domain, fn))


def pand(*items: GameExpr) -> Pand:
    return Pand(tuple(items))


def por(*items: GameExpr) -> Por:
    return Por(tuple(items))


def chand(*items: GameExpr) -> Chand:
    return Chand(tuple(items))


def chor(*items: GameExpr) -> Chor:
    return Chor(tuple(items))


def _brec_normal(g: GameExpr) -> tuple[DBT, Optional[int], bool]:
    """Normalize any branching-recurrence node to (dbt, budget, corec)."""
    if isinstance(g, BRec):
        return DBT.singleton(g.body), None, False
    if isinstance(g, BCor):
        return DBT.singleton(g.body), None, True
    if isinstance(g, BRecB):
        return DBT.singleton(g.body), g.bound - 1, False
    if isinstance(g, BCorB):
        return DBT.singleton(g.body), g.bound - 1, True
    if isinstance(g, BRecDbt):
        return g.dbt, g.reps_left, False
    if isinstance(g, BCorDbt):
        return g.dbt, g.reps_left, True
    raise ParseError(f"not a branching recurrence: {type(g).__name__}")


def _brec_node(corec: bool, dbt: DBT, reps_left: Optional[int]) -> GameExpr:
    return BCorDbt(dbt, reps_left) if corec else BRecDbt(dbt, reps_left)


# --- free variables and substitution ---


_BINDERS = (ChAll, ChEx, PaAll, PaEx, BlAll, BlEx)


def free_vars(g: GameExpr) -> frozenset[str]:
    if isinstance(g, Elem):
        return frozenset(a for a in g.args if isinstance(a, str))
    if isinstance(g, Switch):
        return frozenset({g.var})
    if isinstance(g, _BINDERS):
        return free_vars(g.body) - {g.var}
    return frozenset().union(*(free_vars(c) for c in _subexprs(g)), frozenset())


def _subexprs(g: GameExpr) -> tuple[GameExpr, ...]:
    if isinstance(g, Neg):
        return (g.body,)
    if isinstance(g, (Pand, Por, Chand, Chor)):
        return g.items
    if isinstance(g, Imp):
        return (g.lhs, g.rhs)
    if isinstance(g, _BINDERS):
        return (g.body,)
    if isinstance(g, (PRec, PCor, BRec, BCor)):
        return (g.body,)
    if isinstance(g, (BRecB, BCorB)):
        return (g.body,)
    if isinstance(g, (PRecT, PCorT)):
        return (g.body,) + tuple(x for _, x in g.touched)
    if isinstance(g, DBT):
        return tuple(x for _, x in g.decoration)
    if isinstance(g, (BRecDbt, BCorDbt)):
        return (g.dbt,)
    return ()


def _fresh_var(base: str, avoid: frozenset[str]) -> str:
    name = base
    while name in avoid:
        name += "'"
    return name


def substitute(g: GameExpr, mapping: dict[str, Term]) -> GameExpr:
    """Simultaneous capture-avoiding substitution of terms for variables."""
    live = {k: v for k, v in mapping.items() if v != k}
    if not live:
        return g
    if isinstance(g, Elem):
        args = tuple(live.get(a, a) if isinstance(a, str) else a for a in g.args)
        return Elem(g.name, args, g.table)
    if isinstance(g, Switch):
        t = live.get(g.var)
        if t is None:
            return g
        if isinstance(t, int):
            return Fin(g.case(t))
        return Switch(t, g.cases)
    if isinstance(g, _BINDERS):
        inner = {k: v for k, v in live.items() if k != g.var}
        if not inner:
            return g
        clash = {v for v in inner.values() if isinstance(v, str)}
        var, body = g.var, g.body
        if var in clash:
            fresh = _fresh_var(var, clash | free_vars(body) | set(inner))
            body = substitute(body, {var: fresh})
            var = fresh
        return type(g)(var, substitute(body, inner))
    if isinstance(g, (Fin, Elem)):
        return g
    if isinstance(g, Neg):
        return Neg(substitute(g.body, live))
    if isinstance(g, (Pand, Por, Chand, Chor)):
        return type(g)(tuple(substitute(c, live) for c in g.items))
    if isinstance(g, Imp):
        return Imp(substitute(g.lhs, live), substitute(g.rhs, live))
    if isinstance(g, (PRec, PCor, BRec, BCor)):
        return type(g)(substitute(g.body, live))
    if isinstance(g, (BRecB, BCorB)):
        return type(g)(g.bound, substitute(g.body, live))
    if isinstance(g, (PRecT, PCorT)):
        touched = tuple((i, substitute(x, live)) for i, x in g.touched)
        return type(g)(substitute(g.body, live), touched)
    if isinstance(g, DBT):
        return DBT(g.tree, tuple((w, substitute(x, live)) for w, x in g.decoration))
    if isinstance(g, (BRecDbt, BCorDbt)):
        return type(g)(substitute(g.dbt, live), g.reps_left)
    return g


def syntactically_unistructural_in(g: GameExpr, x: str) -> bool:
    """Move structure cannot depend on x: no switch on x outside a binder
    that shadows x. Every other node kind is structure-blind to valuations."""
    if isinstance(g, Switch):
        return g.var != x
    if isinstance(g, _BINDERS) and g.var == x:
        return True
    return all(syntactically_unistructural_in(c, x) for c in _subexprs(g))


# --- single-move prefixation steps ---


def _step(g: GameExpr, lam: Labmove, domain: int) -> GameExpr:
    """The game left after one legal initial labmove; structural, so the
    result is correct under every valuation of the bounded domain."""
    p, move = lam.player, lam.move
    if isinstance(g, Fin):
        child = g.game.child(lam)
        if child is None:
            raise NotUnilegal(f"{lam.text()} is not an initial move here")
        return Fin(child)
    if isinstance(g, Switch):
        stepped = []
        for c, game in g.cases:
            child = game.child(lam)
            if child is None:
                raise NotUnilegal(f"{lam.text()} is illegal for {g.var}={c}")
            stepped.append((c, child))
        return Switch(g.var, tuple(stepped))
    if isinstance(g, Elem):
        raise NotUnilegal("elementary games admit no moves")
    if isinstance(g, Neg):
        return Neg(_step(g.body, lam.negate(), domain))
    if isinstance(g, (Pand, Por)):
        parts = split_indexed(move)
        if parts is None or parts[0] > len(g.items):
            raise NotUnilegal(f"{lam.text()} addresses no component")
        i, rest = parts
        items = list(g.items)
        items[i - 1] = _step(items[i - 1], Labmove(p, rest), domain)
        return type(g)(tuple(items))
    if isinstance(g, Imp):
        parts = split_indexed(move)
        if parts is None or parts[0] > 2:
            raise NotUnilegal(f"{lam.text()} addresses no component")
        i, rest = parts
        if i == 1:
            return Imp(_step(g.lhs, Labmove(p.opponent, rest), domain), g.rhs)
        return Imp(g.lhs, _step(g.rhs, Labmove(p, rest), domain))
    if isinstance(g, (Chand, Chor)):
        chooser = Player.ENVIRONMENT if isinstance(g, Chand) else Player.MACHINE
        i = parse_decimal(move)
        if p is not chooser or i is None or i > len(g.items):
            raise NotUnilegal(f"{lam.text()} is not a valid choice")
        return g.items[i - 1]
    if isinstance(g, (ChAll, ChEx)):
        chooser = Player.ENVIRONMENT if isinstance(g, ChAll) else Player.MACHINE
        c = parse_decimal(move)
        if p is not chooser or c is None or c > domain:
            raise NotUnilegal(f"{lam.text()} is not a valid constant choice")
        return substitute(g.body, {g.var: c})
    if isinstance(g, (PaAll, PaEx)):
        parts = split_indexed(move)
        if parts is None or parts[0] > domain:
            raise NotUnilegal(f"{lam.text()} addresses no copy")
        c, rest = parts
        items = [substitute(g.body, {g.var: k}) for k in range(1, domain + 1)]
        items[c - 1] = _step(items[c - 1], Labmove(p, rest), domain)
        cls = Pand if isinstance(g, PaAll) else Por
        return cls(tuple(items))
    if isinstance(g, (BlAll, BlEx)):
        return type(g)(g.var, _step(g.body, lam, domain))
    if isinstance(g, (PRec, PCor)):
        parts = split_indexed(move)
        if parts is None:
            raise NotUnilegal(f"{lam.text()} addresses no copy")
        i, rest = parts
        stepped = _step(g.body, Labmove(p, rest), domain)
        cls = PRecT if isinstance(g, PRec) else PCorT
        return cls(g.body, ((i, stepped),))
    if isinstance(g, (PRecT, PCorT)):
        parts = split_indexed(move)
        if parts is None:
            raise NotUnilegal(f"{lam.text()} addresses no copy")
        i, rest = parts
        stepped = _step(g.copy_game(i), Labmove(p, rest), domain)
        touched = tuple((k, x) for k, x in g.touched if k != i) + ((i, stepped),)
        return type(g)(g.body, tuple(sorted(touched, key=lambda kv: kv[0])))
    if isinstance(g, _BREC_KINDS + _BCOR_KINDS):
        return unilegal_step_brec(g, lam, domain)
    raise ParseError(f"cannot step {type(g).__name__}")


def prefixation(g: GameExpr, e: Valuation, phi: Run) -> GameExpr:
    """The game remaining after the unilegal position ``phi``."""
    out = g
    for lm in phi:
        out = _step(out, lm, e.domain)
    return out


# --- branching recurrence evolution ---


def dbt_rep(t: DBT, w: str) -> DBT:
    """Replicate leaf ``w``: both children inherit its game."""
    game = t.game_at(w)
    deco = tuple((u, x) for u, x in t.decoration if u != w)
    deco += ((w + "0", game), (w + "1", game))
    return DBT(t.tree.split(w), tuple(sorted(deco)))


def dbt_nonrep(t: DBT, w: str, lam: Labmove, domain: int) -> DBT:
    """Play ``lam`` at node ``w``: every leaf at or below ``w`` advances."""
    if w not in t.tree:
        raise NotANode(f"{w!r} is not in the tree")
    deco = []
    for u, game in t.decoration:
        if bits_prefix(w, u):
            deco.append((u, _step(game, lam, domain)))
        else:
            deco.append((u, game))
    return DBT(t.tree, tuple(deco))


def unilegal_step_brec(g: GameExpr, lam: Labmove, domain: int = 3) -> GameExpr:
    """One labmove against a branching recurrence, as a game transform."""
    dbt, budget, corec = _brec_normal(g)
    rep_player = Player.MACHINE if corec else Player.ENVIRONMENT
    w = split_replicative(lam.move)
    if w is not None:
        if lam.player is not rep_player:
            raise IllegalStep(f"{lam.text()}: only {rep_player.token} replicates here")
        if budget is not None and budget < 1:
            raise IllegalStep("replication budget exhausted")
        if not dbt.tree.is_leaf(w):
            raise NotALeaf(f"{w!r} is not a leaf")
        return _brec_node(corec, dbt_rep(dbt, w),
                          None if budget is None else budget - 1)
    parts = split_bits_move(lam.move)
    if parts is None:
        raise IllegalStep(f"{lam.text()} fits neither move form")
    node, rest = parts
    if node not in dbt.tree:
        raise IllegalStep(f"{node!r} is not in the tree")
    try:
        stepped = dbt_nonrep(dbt, node, Labmove(lam.player, rest), domain)
    except NotUnilegal as exc:
        raise IllegalStep(str(exc)) from exc
    return _brec_node(corec, stepped, budget)


# --- legality ---


def _bucket_indexed(run: Run, limit: Optional[int]) -> Optional[dict[int, list[Labmove]]]:
    """Group component-addressed moves; None when some move has no index."""
    buckets: dict[int, list[Labmove]] = {}
    for lm in run:
        parts = split_indexed(lm.move)
        if parts is None:
            return None
        i, rest = parts
        if limit is not None and i > limit:
            return None
        buckets.setdefault(i, []).append(Labmove(lm.player, rest))
    return buckets


def _legal_brec(g: GameExpr, e: Valuation, run: Run) -> bool:
    dbt, budget, corec = _brec_normal(g)
    mode = "bcor" if corec else "brec"
    report = tree_of(dbt.tree, run, mode)
    if not report.prelegal:
        return False
    reps = len(report.tree.leaves()) - len(dbt.tree.leaves())
    if budget is not None and reps > budget:
        return False
    base_leaves = dbt.tree.leaves()
    for u in report.tree.leaves():
        w = next(b for b in base_leaves if bits_prefix(b, u))
        if not legal(dbt.game_at(w), e, project_bits(run, u)):
            return False
    return True


def legal(g: GameExpr, e: Valuation, run: Run) -> bool:
    """Is ``run`` a legal run of ``g`` under ``e``?"""
    if isinstance(g, Fin):
        return fg_walk(g.game, run)[1] is None
    if isinstance(g, Switch):
        return fg_walk(g.case(e.value(g.var)), run)[1] is None
    if isinstance(g, Elem):
        return run == EMPTY_RUN
    if isinstance(g, Neg):
        return legal(g.body, e, negate_run(run))
    if isinstance(g, (Pand, Por)):
        buckets = _bucket_indexed(run, len(g.items))
        if buckets is None:
            return False
        return all(legal(g.items[i - 1], e, tuple(sub)) for i, sub in buckets.items())
    if isinstance(g, Imp):
        buckets = _bucket_indexed(run, 2)
        if buckets is None:
            return False
        comps = (Neg(g.lhs), g.rhs)
        return all(legal(comps[i - 1], e, tuple(sub)) for i, sub in buckets.items())
    if isinstance(g, (Chand, Chor)):
        if run == EMPTY_RUN:
            return True
        chooser = Player.ENVIRONMENT if isinstance(g, Chand) else Player.MACHINE
        i = parse_decimal(run[0].move)
        if run[0].player is not chooser or i is None or i > len(g.items):
            return False
        return legal(g.items[i - 1], e, run[1:])
    if isinstance(g, (ChAll, ChEx)):
        if run == EMPTY_RUN:
            return True
        chooser = Player.ENVIRONMENT if isinstance(g, ChAll) else Player.MACHINE
        c = parse_decimal(run[0].move)
        if run[0].player is not chooser or c is None or c > e.domain:
            return False
        return legal(g.body, e.bind(g.var, c), run[1:])
    if isinstance(g, (PaAll, PaEx)):
        buckets = _bucket_indexed(run, e.domain)
        if buckets is None:
            return False
        return all(
            legal(g.body, e.bind(g.var, c), tuple(sub)) for c, sub in buckets.items()
        )
    if isinstance(g, (BlAll, BlEx)):
        return legal(g.body, e, run)
    if isinstance(g, (PRec, PCor)):
        buckets = _bucket_indexed(run, None)
        if buckets is None:
            return False
        return all(legal(g.body, e, tuple(sub)) for sub in buckets.values())
    if isinstance(g, (PRecT, PCorT)):
        buckets = _bucket_indexed(run, None)
        if buckets is None:
            return False
        return all(
            legal(g.copy_game(i), e, tuple(sub)) for i, sub in buckets.items()
        )
    if isinstance(g, _BREC_KINDS + _BCOR_KINDS):
        return _legal_brec(g, e, run)
    raise ParseError(f"cannot evaluate {type(g).__name__}")


# --- winners ---


def _winner_legal(g: GameExpr, e: Valuation, run: Run) -> Player:
    if isinstance(g, Fin):
        return fg_walk(g.game, run)[0].win
    if isinstance(g, Switch):
        return fg_walk(g.case(e.value(g.var)), run)[0].win
    if isinstance(g, Elem):
        vals = tuple(e.value(a) for a in g.args)
        return Player.MACHINE if g.table.holds(vals) else Player.ENVIRONMENT
    if isinstance(g, Neg):
        return _winner_legal(g.body, e, negate_run(run)).opponent
    if isinstance(g, (Pand, Por, Imp)):
        if isinstance(g, Imp):
            comps: tuple[GameExpr, ...] = (Neg(g.lhs), g.rhs)
        else:
            comps = g.items
        buckets = _bucket_indexed(run, len(comps)) or {}
        outcomes = [
            _winner_legal(comp, e, tuple(buckets.get(i + 1, ())))
            for i, comp in enumerate(comps)
        ]
        if isinstance(g, Pand):
            won = all(o is Player.MACHINE for o in outcomes)
        else:
            won = any(o is Player.MACHINE for o in outcomes)
        return Player.MACHINE if won else Player.ENVIRONMENT
    if isinstance(g, (Chand, Chor)):
        if run == EMPTY_RUN:
            return Player.MACHINE if isinstance(g, Chand) else Player.ENVIRONMENT
        i = parse_decimal(run[0].move)
        return _winner_legal(g.items[i - 1], e, run[1:])
    if isinstance(g, (ChAll, ChEx)):
        if run == EMPTY_RUN:
            return Player.MACHINE if isinstance(g, ChAll) else Player.ENVIRONMENT
        c = parse_decimal(run[0].move)
        return _winner_legal(g.body, e.bind(g.var, c), run[1:])
    if isinstance(g, (PaAll, PaEx)):
        buckets = _bucket_indexed(run, e.domain) or {}
        outcomes = [
            _winner_legal(g.body, e.bind(g.var, c), tuple(buckets.get(c, ())))
            for c in e.constants()
        ]
        if isinstance(g, PaAll):
            won = all(o is Player.MACHINE for o in outcomes)
        else:
            won = any(o is Player.MACHINE for o in outcomes)
        return Player.MACHINE if won else Player.ENVIRONMENT
    if isinstance(g, (BlAll, BlEx)):
        outcomes = [
            _winner_legal(g.body, e.bind(g.var, c), run) for c in e.constants()
        ]
        if isinstance(g, BlAll):
            won = all(o is Player.MACHINE for o in outcomes)
        else:
            won = any(o is Player.MACHINE for o in outcomes)
        return Player.MACHINE if won else Player.ENVIRONMENT
    if isinstance(g, (PRec, PCor, PRecT, PCorT)):
        if isinstance(g, (PRec, PCor)):
            base, touched = g.body, ()
        else:
            base, touched = g.body, g.touched
        buckets = _bucket_indexed(run, None) or {}
        indices = set(buckets) | {i for i, _ in touched}
        games = {i: g.copy_game(i) if isinstance(g, (PRecT, PCorT)) else base
                 for i in indices}
        outcomes = [
            _winner_legal(games[i], e, tuple(buckets.get(i, ())))
            for i in sorted(indices)
        ]
        untouched = _winner_legal(base, e, EMPTY_RUN)
        if isinstance(g, (PRec, PRecT)):
            won = untouched is Player.MACHINE and all(
                o is Player.MACHINE for o in outcomes
            )
        else:
            won = untouched is Player.MACHINE or any(
                o is Player.MACHINE for o in outcomes
            )
        return Player.MACHINE if won else Player.ENVIRONMENT
    if isinstance(g, _BREC_KINDS + _BCOR_KINDS):
        dbt, _, corec = _brec_normal(g)
        report = tree_of(dbt.tree, run, "bcor" if corec else "brec")
        base_leaves = dbt.tree.leaves()
        outcomes = []
        for u in report.tree.leaves():
            w = next(b for b in base_leaves if bits_prefix(b, u))
            outcomes.append(
                _winner_legal(dbt.game_at(w), e, project_bits(run, u))
            )
        if corec:
            won = any(o is Player.MACHINE for o in outcomes)
        else:
            won = all(o is Player.MACHINE for o in outcomes)
        return Player.MACHINE if won else Player.ENVIRONMENT
    raise ParseError(f"cannot evaluate {type(g).__name__}")


def winner(g: GameExpr, e: Valuation, run: Run) -> Player:
    """Who wins ``run``? The author of the first illegal move loses; a legal
    run is scored by the game itself."""
    for k in range(1, len(run) + 1):
        if not legal(g, e, run[:k]):
            return run[k - 1].player.opponent
    return _winner_legal(g, e, run)


# --- available moves ---


def _prefix_moves(prefix: str, moves: Iterable[str]) -> set[str]:
    return {prefix + m for m in moves}


def _moves(g: GameExpr, e: Valuation, pos: Run, p: Player,
           rec_bound: Optional[int]) -> set[str]:
    if isinstance(g, Fin) or isinstance(g, Switch):
        game = g.game if isinstance(g, Fin) else g.case(e.value(g.var))
        node, bad = fg_walk(game, pos)
        if bad is not None:
            return set()
        return {lm.move for lm, _ in node.children if lm.player is p}
    if isinstance(g, Elem):
        return set()
    if isinstance(g, Neg):
        return _moves(g.body, e, negate_run(pos), p.opponent, rec_bound)
    if isinstance(g, (Pand, Por, Imp)):
        if isinstance(g, Imp):
            comps: tuple[GameExpr, ...] = (Neg(g.lhs), g.rhs)
        else:
            comps = g.items
        buckets = _bucket_indexed(pos, len(comps)) or {}
        out: set[str] = set()
        for i, comp in enumerate(comps, start=1):
            sub = tuple(buckets.get(i, ()))
            out |= _prefix_moves(f"{i}.", _moves(comp, e, sub, p, rec_bound))
        return out
    if isinstance(g, (Chand, Chor)):
        chooser = Player.ENVIRONMENT if isinstance(g, Chand) else Player.MACHINE
        if pos == EMPTY_RUN:
            return {str(i) for i in range(1, len(g.items) + 1)} if p is chooser else set()
        i = parse_decimal(pos[0].move)
        return _moves(g.items[i - 1], e, pos[1:], p, rec_bound)
    if isinstance(g, (ChAll, ChEx)):
        chooser = Player.ENVIRONMENT if isinstance(g, ChAll) else Player.MACHINE
        if pos == EMPTY_RUN:
            return {str(c) for c in e.constants()} if p is chooser else set()
        c = parse_decimal(pos[0].move)
        return _moves(g.body, e.bind(g.var, c), pos[1:], p, rec_bound)
    if isinstance(g, (PaAll, PaEx)):
        buckets = _bucket_indexed(pos, e.domain) or {}
        out = set()
        for c in e.constants():
            sub = tuple(buckets.get(c, ()))
            out |= _prefix_moves(
                f"{c}.", _moves(g.body, e.bind(g.var, c), sub, p, rec_bound)
            )
        return out
    if isinstance(g, (BlAll, BlEx)):
        return _moves(g.body, e, pos, p, rec_bound)
    if isinstance(g, (PRec, PCor, PRecT, PCorT)):
        buckets = _bucket_indexed(pos, None) or {}
        touched = g.touched if isinstance(g, (PRecT, PCorT)) else ()
        hi = max([*buckets, *(i for i, _ in touched), 0]) + 1
        if rec_bound is not None:
            hi = min(hi, rec_bound)
        out = set()
        for i in range(1, hi + 1):
            game_i = g.copy_game(i) if isinstance(g, (PRecT, PCorT)) else g.body
            sub = tuple(buckets.get(i, ()))
            out |= _prefix_moves(f"{i}.", _moves(game_i, e, sub, p, rec_bound))
        return out
    if isinstance(g, _BREC_KINDS + _BCOR_KINDS):
        dbt, budget, corec = _brec_normal(g)
        report = tree_of(dbt.tree, pos, "bcor" if corec else "brec")
        tree = report.tree
        reps_done = len(tree.leaves()) - len(dbt.tree.leaves())
        out = set()
        rep_player = Player.MACHINE if corec else Player.ENVIRONMENT
        rep_ok = budget is None or reps_done < budget
        if rec_bound is not None:
            rep_ok = rep_ok and reps_done < rec_bound
        if p is rep_player and rep_ok:
            out |= {u + ":" for u in tree.leaves()}
        base_leaves = dbt.tree.leaves()
        leaf_moves = {}
        for u in tree.leaves():
            w = next(b for b in base_leaves if bits_prefix(b, u))
            leaf_moves[u] = _moves(
                dbt.game_at(w), e, project_bits(pos, u), p, rec_bound
            )
        for node in tree.nodes():
            below = [u for u in tree.leaves() if bits_prefix(node, u)]
            common = set.intersection(*(leaf_moves[u] for u in below))
            out |= _prefix_moves(node + ".", common)
        return out
    raise ParseError(f"cannot evaluate {type(g).__name__}")


def legal_moves(g: GameExpr, e: Valuation, pos: Run, p: Player,
                cap: Optional[int] = 10000,
                rec_bound: Optional[int] = None) -> list[str]:
    """All moves ``p`` could legally add after ``pos``, sorted.

    Unbounded parallel recurrences contribute the touched copies plus one
    fresh copy; further fresh copies would be interchangeable with it.
    """
    moves = _moves(g, e, pos, p, rec_bound)
    if cap is not None and len(moves) > cap:
        raise BlowupGuard(f"{len(moves)} moves exceeds the cap {cap}")
    return sorted(moves)


# --- finite expansion ---


@dataclass(frozen=True)
class Caps:
    depth: int = 3
    domain: Optional[int] = None
    rec_bound: Optional[int] = None
    max_nodes: int = 50000


def _has_unbounded_rec(g: GameExpr) -> bool:
    if isinstance(g, (PRec, PCor, PRecT, PCorT)):
        return True
    if isinstance(g, (BRecDbt, BCorDbt)) and g.reps_left is None:
        return True
    if isinstance(g, (BRec, BCor)):
        return True
    return any(_has_unbounded_rec(c) for c in _subexprs(g))


def expand(g: GameExpr, e: Valuation, caps: Caps = Caps()) -> FiniteGame:
    """Materialize the legal-position tree to ``caps.depth`` as a finite
    game whose node winners score the positions."""
    if caps.domain is not None:
        e = e.with_domain(caps.domain)
    if caps.rec_bound is None and _has_unbounded_rec(g):
        raise CapExceeded("an unbounded recurrence needs caps.rec_bound")
    budget = [caps.max_nodes]

    def node(pos: Run, depth: int) -> FiniteGame:
        budget[0] -= 1
        if budget[0] < 0:
            raise CapExceeded(f"expansion exceeds {caps.max_nodes} nodes")
        kids = []
        if depth > 0:
            for p in (Player.MACHINE, Player.ENVIRONMENT):
                for m in legal_moves(g, e, pos, p, rec_bound=caps.rec_bound):
                    lm = Labmove(p, m)
                    kids.append((lm, node(pos + (lm,), depth - 1)))
        return FiniteGame(_winner_legal(g, e, pos), tuple(kids))

    return node(EMPTY_RUN, caps.depth)


# --- unistructurality ---


def is_unistructural_in(g: GameExpr, x: str, e: Valuation,
                        depth: int = 3, max_positions: int = 4000) -> bool:
    """Compare move structure across all values of ``x``, to ``depth``."""
    values = list(e.constants())
    budget = [max_positions]

    def same(e1: Valuation, e2: Valuation, pos: Run, depth_left: int) -> bool:
        budget[0] -= 1
        if budget[0] < 0:
            raise CapExceeded(f"more than {max_positions} positions compared")
        for p in (Player.MACHINE, Player.ENVIRONMENT):
            s1 = _moves(g, e1, pos, p, rec_bound=2)
            s2 = _moves(g, e2, pos, p, rec_bound=2)
            if s1 != s2:
                return False
            if depth_left > 0:
                for m in sorted(s1):
                    lm = Labmove(p, m)
                    if not same(e1, e2, pos + (lm,), depth_left - 1):
                        return False
        return True

    for i, c1 in enumerate(values):
        for c2 in values[i + 1:]:
            if not same(e.bind(x, c1), e.bind(x, c2), EMPTY_RUN, depth):
                return False
    return True


def is_unistructural(g: GameExpr, e: Valuation, depth: int = 3) -> bool:
    return all(is_unistructural_in(g, x, e, depth) for x in sorted(free_vars(g)))


# --- the static property, on finite games ---


class StaticReport(NamedTuple):
    static: bool
    witness: Optional[tuple[Run, Run, Player]]


def _fg_alphabet(game: FiniteGame) -> list[Labmove]:
    seen = set()

    def walk(node: FiniteGame):
        for lm, child in node.children:
            seen.add(lm)
            walk(child)

    walk(game)
    return sorted(seen, key=lambda lm: (lm.player is not Player.MACHINE, lm.move))


def _fg_depth(game: FiniteGame) -> int:
    if not game.children:
        return 0
    return 1 + max(_fg_depth(child) for _, child in game.children)


def _run_sort_key(run: Run):
    return (len(run), tuple((lm.player is not Player.MACHINE, lm.move) for lm in run))


def _fg_paths(game: FiniteGame) -> list[Run]:
    out = [EMPTY_RUN]

    def walk(node: FiniteGame, path: Run):
        for lm, child in node.children:
            out.append(path + (lm,))
            walk(child, path + (lm,))

    walk(game, EMPTY_RUN)
    return out


def is_static(game: FiniteGame, max_len: Optional[int] = None,
              budget: int = 120000) -> StaticReport:
    """Search for a winner flip under a delay.

    Small alphabets are searched exhaustively over all runs up to the length
    cap; otherwise candidate runs are permutations of each path's labmove
    pool extended by one extra labmove (a delay never changes the multiset
    of moves, so any violating pair shares one pool).
    """
    alphabet = _fg_alphabet(game)
    if max_len is None:
        max_len = min(_fg_depth(game) + 1, 6)

    def check(run: Run) -> Optional[tuple[Run, Run, Player]]:
        p = fg_winner(game, run)
        for delta in sorted(enumerate_delays(run, p), key=_run_sort_key):
            if fg_winner(game, delta) is not p:
                return run, delta, p
        return None

    total = sum(len(alphabet) ** k for k in range(max_len + 1))
    if total <= budget:
        level: list[Run] = [EMPTY_RUN]
        for _ in range(max_len):
            level = [r + (lm,) for r in level for lm in alphabet]
            for run in sorted(level, key=_run_sort_key):
                hit = check(run)
                if hit:
                    return StaticReport(False, hit)
        return StaticReport(True, None)

    from itertools import permutations

    pools = set()
    for path in _fg_paths(game):
        if len(path) + 1 > max_len:
            continue
        for extra in alphabet:
            pool = tuple(sorted(path + (extra,), key=lambda lm: (lm.player.token, lm.move)))
            pools.add(pool)
    candidates = set()
    for pool in pools:
        candidates.update(permutations(pool))
        if len(candidates) > budget:
            break
    for run in sorted(candidates, key=_run_sort_key):
        hit = check(run)
        if hit:
            return StaticReport(False, hit)
    return StaticReport(True, None)


# --- serialization ---


def term_to_json(t: Term):
    return t


def term_from_json(v) -> Term:
    if isinstance(v, (int, str)):
        return v
    raise ParseError(f"bad term {v!r}")


def game_to_json(g: GameExpr) -> dict:
    if isinstance(g, Fin):
        return {"op": "Finite", "game": fg_to_json(g.game)}
    if isinstance(g, Elem):
        return {
            "op": "Elementary",
            "name": g.name,
            "args": [term_to_json(a) for a in g.args],
            "table": {
                "arity": g.table.arity,
                "rows": sorted(list(r) for r in g.table.rows),
            },
        }
    if isinstance(g, Neg):
        return {"op": "Neg", "body": game_to_json(g.body)}
    if isinstance(g, (Pand, Por, Chand, Chor)):
        return {"op": type(g).__name__, "items": [game_to_json(c) for c in g.items]}
    if isinstance(g, Imp):
        return {"op": "Imp", "lhs": game_to_json(g.lhs), "rhs": game_to_json(g.rhs)}
    if isinstance(g, (ChAll, ChEx, PaAll, PaEx, BlAll, BlEx)):
        return {"op": type(g).__name__, "var": g.var, "body": game_to_json(g.body)}
    if isinstance(g, (PRec, PCor, BRec, BCor)):
        return {"op": type(g).__name__, "body": game_to_json(g.body)}
    if isinstance(g, (BRecB, BCorB)):
        return {"op": type(g).__name__, "bound": g.bound, "body": game_to_json(g.body)}
    if isinstance(g, (PRecT, PCorT)):
        return {
            "op": type(g).__name__,
            "body": game_to_json(g.body),
            "touched": {str(i): game_to_json(x) for i, x in g.touched},
        }
    if isinstance(g, (BRecDbt, BCorDbt)):
        return {
            "op": type(g).__name__,
            "tree": g.dbt.tree.nodes(),
            "decoration": {w: game_to_json(x) for w, x in g.dbt.decoration},
            "reps_left": g.reps_left,
        }
    if isinstance(g, Switch):
        return {
            "op": "Switch",
            "var": g.var,
            "cases": {str(c): fg_to_json(game) for c, game in g.cases},
        }
    raise ParseError(f"cannot serialize {type(g).__name__}")


_NARY = {"Pand": Pand, "Por": Por, "Chand": Chand, "Chor": Chor}
_BOUND = {
    "ChAll": ChAll, "ChEx": ChEx, "PaAll": PaAll, "PaEx": PaEx,
    "BlAll": BlAll, "BlEx": BlEx,
}
_UNARY = {"PRec": PRec, "PCor": PCor, "BRec": BRec, "BCor": BCor}


def game_from_json(data: dict) -> GameExpr:
    op = data["op"]
    if op == "Finite":
        return Fin(fg_from_json(data["game"]))
    if op == "Elementary":
        rows = frozenset(tuple(r) for r in data["table"]["rows"])
        table = TruthTable(data["table"]["arity"], rows)
        return Elem(data["name"], tuple(term_from_json(a) for a in data["args"]), table)
    if op == "Neg":
        return Neg(game_from_json(data["body"]))
    if op in _NARY:
        return _NARY[op](tuple(game_from_json(c) for c in data["items"]))
    if op == "Imp":
        return Imp(game_from_json(data["lhs"]), game_from_json(data["rhs"]))
    if op in _BOUND:
        return _BOUND[op](data["var"], game_from_json(data["body"]))
    if op in _UNARY:
        return _UNARY[op](game_from_json(data["body"]))
    if op in ("BRecB", "BCorB"):
        cls = BRecB if op == "BRecB" else BCorB
        return cls(data["bound"], game_from_json(data["body"]))
    if op in ("PRecT", "PCorT"):
        cls = PRecT if op == "PRecT" else PCorT
        touched = tuple(
            sorted((int(i), game_from_json(x)) for i, x in data["touched"].items())
        )
        return cls(game_from_json(data["body"]), touched)
    if op in ("BRecDbt", "BCorDbt"):
        cls = BRecDbt if op == "BRecDbt" else BCorDbt
        tree = BT(frozenset(data["tree"]))
        deco = tuple(
            sorted((w, game_from_json(x)) for w, x in data["decoration"].items())
        )
        return cls(DBT(tree, deco), data["reps_left"])
    if op == "Switch":
        cases = tuple(
            sorted((int(c), fg_from_json(game)) for c, game in data["cases"].items())
        )
        return Switch(data["var"], cases)
    raise ParseError(f"unknown op {op!r}")


# --- display ---


def term_text(t: Term) -> str:
    return str(t)


def game_text(g: GameExpr) -> str:
    """Human-readable rendering; display only, not parseable."""
    def wrap(s: str, cond: bool) -> str:
        return f"({s})" if cond else s

    if isinstance(g, Fin):
        return "#finite"
    if isinstance(g, Switch):
        return f"#switch({g.var})"
    if isinstance(g, Elem):
        if not g.args:
            return g.name
        return f"{g.name}({','.join(term_text(a) for a in g.args)})"
    if isinstance(g, Neg):
        return f"~{wrap(game_text(g.body), not isinstance(g.body, (Elem, Fin, Switch, Neg)))}"
    if isinstance(g, (Pand, Chand, Por, Chor)):
        sep = {Pand: " /\\ ", Chand: " & ", Por: " \\/ ", Chor: " | "}[type(g)]
        parts = [
            wrap(game_text(c), not isinstance(c, (Elem, Fin, Switch, Neg)))
            for c in g.items
        ]
        return sep.join(parts)
    if isinstance(g, Imp):
        return (
            wrap(game_text(g.lhs), not isinstance(g.lhs, (Elem, Fin, Switch, Neg)))
            + " -> " + game_text(g.rhs)
        )
    if isinstance(g, (ChAll, ChEx, PaAll, PaEx, BlAll, BlEx)):
        tag = {
            ChAll: "chA", ChEx: "chE", PaAll: "paA",
            PaEx: "paE", BlAll: "blA", BlEx: "blE",
        }[type(g)]
        return f"{tag} {g.var}. {game_text(g.body)}"
    if isinstance(g, (PRec, PCor, BRec, BCor)):
        tag = {PRec: "prec", PCor: "pcor", BRec: "brec", BCor: "bcor"}[type(g)]
        return f"{tag} {wrap(game_text(g.body), not isinstance(g.body, (Elem, Fin, Switch)))}"
    if isinstance(g, (BRecB, BCorB)):
        tag = "brec" if isinstance(g, BRecB) else "bcor"
        return f"{tag}[{g.bound}] {wrap(game_text(g.body), not isinstance(g.body, (Elem, Fin, Switch)))}"
    if isinstance(g, (PRecT, PCorT)):
        tag = "prec" if isinstance(g, PRecT) else "pcor"
        inner = ", ".join(f"{i}:{game_text(x)}" for i, x in g.touched)
        return f"{tag}[{inner}] {game_text(g.body)}"
    if isinstance(g, (BRecDbt, BCorDbt)):
        tag = "brec" if isinstance(g, BRecDbt) else "bcor"

        def node(w: str) -> str:
            if g.dbt.tree.is_leaf(w):
                return game_text(g.dbt.game_at(w))
            return f"({node(w + '0')} o {node(w + '1')})"

        return f"{tag} {node('')}"
    raise ParseError(f"cannot render {type(g).__name__}")
