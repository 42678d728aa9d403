"""Formula syntax: parsing, printing, and the classical-logic helpers.

Formulas are the proof-system view of games. Lowercase letters name
elementary atoms, uppercase letters name general atoms, and the reserved
letters T and F are the always-won and always-lost elementary atoms. The
connective spellings are ``~`` ``/\\`` ``\\/`` ``->`` ``&`` ``|``, the
binders ``chA x.`` ``chE x.`` ``blA x.`` ``blE x.`` ``paA x.`` ``paE x.``
extend maximally to the right, and ``prec pcor brec bcor`` prefix the four
recurrences. ``parse`` and ``formula_text`` are mutually inverse on
canonical text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterator, NamedTuple, Optional, Union

from .errors import ParseError

Term = Union[str, int]


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class TopAtom(Formula):
    pass


@dataclass(frozen=True)
class BotAtom(Formula):
    pass


@dataclass(frozen=True)
class ElemAtom(Formula):
    letter: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class GenAtom(Formula):
    letter: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Neg(Formula):
    body: Formula


@dataclass(frozen=True)
class Pand(Formula):
    items: tuple[Formula, ...]


@dataclass(frozen=True)
class Por(Formula):
    items: tuple[Formula, ...]


@dataclass(frozen=True)
class Imp(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Chand(Formula):
    items: tuple[Formula, ...]


@dataclass(frozen=True)
class Chor(Formula):
    items: tuple[Formula, ...]


@dataclass(frozen=True)
class ChAll(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ChEx(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class PaAll(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class PaEx(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class BlAll(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class BlEx(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class PRec(Formula):
    body: Formula


@dataclass(frozen=True)
class PCor(Formula):
    body: Formula


@dataclass(frozen=True)
class BRec(Formula):
    body: Formula


@dataclass(frozen=True)
class BCor(Formula):
    body: Formula


Sequent = tuple[Formula, ...]

_BINDER_CLASSES = {
    "chA": ChAll, "chE": ChEx, "blA": BlAll,
    "blE": BlEx, "paA": PaAll, "paE": PaEx,
}
_REC_CLASSES = {"prec": PRec, "pcor": PCor, "brec": BRec, "bcor": BCor}
_KEYWORDS = frozenset(_BINDER_CLASSES) | frozenset(_REC_CLASSES)

_NARY = (Pand, Por, Chand, Chor)
_BINDERS = (ChAll, ChEx, PaAll, PaEx, BlAll, BlEx)
_RECS = (PRec, PCor, BRec, BCor)
_CHOICE = (Chand, Chor, ChEx, ChAll)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Neg):
        return (f.body,)
    if isinstance(f, _NARY):
        return f.items
    if isinstance(f, Imp):
        return (f.lhs, f.rhs)
    if isinstance(f, _BINDERS + _RECS):
        return (f.body,)
    return ()


def rebuild(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    if isinstance(f, Neg):
        return Neg(kids[0])
    if isinstance(f, _NARY):
        return type(f)(kids)
    if isinstance(f, Imp):
        return Imp(kids[0], kids[1])
    if isinstance(f, _BINDERS):
        return type(f)(f.var, kids[0])
    if isinstance(f, _RECS):
        return type(f)(kids[0])
    return f


# --- tokenizer and parser ---


class _Token(NamedTuple):
    kind: str
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"(/\\)|(\\/)|(->)|([&|~(),.])|([A-Za-z][A-Za-z0-9_']*)|([0-9]+)|(\S)"
)


def _tokenize(text: str) -> list[_Token]:
    out = []
    for m in _TOKEN_RE.finditer(text):
        pos = m.start()
        if m.group(1):
            out.append(_Token("op", "/\\", pos))
        elif m.group(2):
            out.append(_Token("op", "\\/", pos))
        elif m.group(3):
            out.append(_Token("op", "->", pos))
        elif m.group(4):
            out.append(_Token("op", m.group(4), pos))
        elif m.group(5):
            word = m.group(5)
            kind = "kw" if word in _KEYWORDS else "name"
            out.append(_Token(kind, word, pos))
        elif m.group(6):
            out.append(_Token("int", m.group(6), pos))
        else:
            raise ParseError(f"stray character {m.group(7)!r}", pos)
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.text))
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.pos)
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def formula(self) -> Formula:
        lhs = self.chain(("\\/", "|"), ("Por", "Chor"), self.conj)
        if self.at("->"):
            self.next()
            return Imp(lhs, self.formula())
        return lhs

    def conj(self) -> Formula:
        return self.chain(("/\\", "&"), ("Pand", "Chand"), self.unary)

    def chain(self, ops, tags, sub) -> Formula:
        first = sub()
        tok = self.peek()
        if tok is None or tok.text not in ops:
            return first
        op = tok.text
        items = [first]
        while self.at(op):
            self.next()
            items.append(sub())
        other = ops[0] if op == ops[1] else ops[1]
        tok = self.peek()
        if tok is not None and tok.text == other:
            raise ParseError(
                f"cannot mix {op!r} and {other!r} without parentheses", tok.pos
            )
        cls = {"\\/": Por, "|": Chor, "/\\": Pand, "&": Chand}[op]
        return cls(tuple(items))

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.text))
        if tok.kind == "kw" and tok.text in _REC_CLASSES:
            self.next()
            return _REC_CLASSES[tok.text](self.unary())
        return self.neg()

    def neg(self) -> Formula:
        if self.at("~"):
            self.next()
            return Neg(self.neg())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.next()
        if tok.text == "(":
            inner = self.formula()
            self.expect(")")
            return inner
        if tok.kind == "kw" and tok.text in _BINDER_CLASSES:
            var = self.next()
            if var.kind != "name" or not var.text[0].islower():
                raise ParseError(f"expected a variable, found {var.text!r}", var.pos)
            self.expect(".")
            return _BINDER_CLASSES[tok.text](var.text, self.formula())
        if tok.kind == "name":
            return self.atom(tok)
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)

    def atom(self, tok: _Token) -> Formula:
        args: tuple[Term, ...] = ()
        if self.at("("):
            self.next()
            parts = [self.term()]
            while self.at(","):
                self.next()
                parts.append(self.term())
            self.expect(")")
            args = tuple(parts)
        if tok.text == "T":
            if args:
                raise ParseError("T takes no arguments", tok.pos)
            return TopAtom()
        if tok.text == "F":
            if args:
                raise ParseError("F takes no arguments", tok.pos)
            return BotAtom()
        if tok.text[0].isupper():
            return GenAtom(tok.text, args)
        return ElemAtom(tok.text, args)

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "int":
            return int(tok.text)
        if tok.kind == "name" and tok.text[0].islower():
            return tok.text
        raise ParseError(f"expected a term, found {tok.text!r}", tok.pos)

    def sequent(self) -> Sequent:
        items = [self.formula()]
        while self.at(","):
            self.next()
            items.append(self.formula())
        return tuple(items)

    def finish(self):
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input at {tok.text!r}", tok.pos)


def parse(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    p.finish()
    return f


def parse_sequent(text: str) -> Sequent:
    p = _Parser(text)
    s = p.sequent()
    p.finish()
    return s


# --- printing ---

# context levels: 0 tail, 1 disjunct, 2 conjunct, 3 recurrence operand,
# 4 negation operand
_LEVEL = {Imp: 0, Por: 1, Chor: 1, Pand: 2, Chand: 2,
          PRec: 3, PCor: 3, BRec: 3, BCor: 3, Neg: 4}


def term_text(t: Term) -> str:
    return str(t)


def formula_text(f: Formula) -> str:
    return _fmt(f, 0)


def sequent_text(s: Sequent) -> str:
    return " , ".join(formula_text(f) for f in s)


def _fmt(f: Formula, ctx: int) -> str:
    if isinstance(f, TopAtom):
        return "T"
    if isinstance(f, BotAtom):
        return "F"
    if isinstance(f, (ElemAtom, GenAtom)):
        if not f.args:
            return f.letter
        return f"{f.letter}({','.join(term_text(a) for a in f.args)})"
    if isinstance(f, _BINDERS):
        tag = {ChAll: "chA", ChEx: "chE", BlAll: "blA",
               BlEx: "blE", PaAll: "paA", PaEx: "paE"}[type(f)]
        text = f"{tag} {f.var}. {_fmt(f.body, 0)}"
        return f"({text})" if ctx > 0 else text
    if isinstance(f, Imp):
        text = f"{_fmt(f.lhs, 1)} -> {_fmt(f.rhs, 0)}"
        return f"({text})" if ctx > 0 else text
    if isinstance(f, (Por, Chor)):
        op = " \\/ " if isinstance(f, Por) else " | "
        text = op.join(_fmt(c, 2) for c in f.items)
        return f"({text})" if ctx > 1 else text
    if isinstance(f, (Pand, Chand)):
        op = " /\\ " if isinstance(f, Pand) else " & "
        text = op.join(_fmt(c, 3) for c in f.items)
        return f"({text})" if ctx > 2 else text
    if isinstance(f, _RECS):
        tag = {PRec: "prec", PCor: "pcor", BRec: "brec", BCor: "bcor"}[type(f)]
        text = f"{tag} {_fmt(f.body, 3)}"
        return f"({text})" if ctx > 3 else text
    if isinstance(f, Neg):
        return f"~{_fmt(f.body, 4)}"
    raise ParseError(f"cannot print {type(f).__name__}")


# --- variables and substitution ---


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, (ElemAtom, GenAtom)):
        return frozenset(a for a in f.args if isinstance(a, str))
    if isinstance(f, _BINDERS):
        return free_vars(f.body) - {f.var}
    out: frozenset[str] = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def bound_vars(f: Formula) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    if isinstance(f, _BINDERS):
        out |= {f.var}
    for c in children(f):
        out |= bound_vars(c)
    return out


def blindly_bound(f: Formula) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    if isinstance(f, (BlAll, BlEx)):
        out |= {f.var}
    for c in children(f):
        out |= blindly_bound(c)
    return out


def all_variables(f: Formula) -> frozenset[str]:
    return free_vars(f) | bound_vars(f)


def constants_of(f: Formula) -> frozenset[int]:
    if isinstance(f, (ElemAtom, GenAtom)):
        return frozenset(a for a in f.args if isinstance(a, int))
    out: frozenset[int] = frozenset()
    for c in children(f):
        out |= constants_of(c)
    return out


def fresh_variable(avoid: frozenset[str], base: str = "y") -> str:
    if base not in avoid:
        return base
    k = 0
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


def apply_substitution(f: Formula, mapping: dict[str, Term]) -> Formula:
    """Simultaneous capture-avoiding substitution."""
    live = {k: v for k, v in mapping.items() if v != k}
    if not live:
        return f
    if isinstance(f, (ElemAtom, GenAtom)):
        args = tuple(live.get(a, a) if isinstance(a, str) else a for a in f.args)
        return type(f)(f.letter, args)
    if isinstance(f, _BINDERS):
        inner = {k: v for k, v in live.items() if k != f.var}
        if not inner:
            return f
        clash = {v for v in inner.values() if isinstance(v, str)}
        var, body = f.var, f.body
        if var in clash:
            avoid = clash | all_variables(body) | set(inner)
            var = fresh_variable(avoid, f.var)
            body = apply_substitution(body, {f.var: var})
        return type(f)(var, apply_substitution(body, inner))
    return rebuild(f, tuple(apply_substitution(c, live) for c in children(f)))


def free_for(t: Term, x: str, f: Formula) -> bool:
    """May ``t`` replace free occurrences of ``x`` in ``f`` without any of
    them landing inside a binder over ``t``?"""
    if isinstance(t, int):
        return True

    def walk(g: Formula, captured: bool) -> bool:
        if isinstance(g, (ElemAtom, GenAtom)):
            return not (captured and x in g.args)
        if isinstance(g, _BINDERS):
            if g.var == x:
                return True
            return walk(g.body, captured or g.var == t)
        return all(walk(c, captured) for c in children(g))

    return walk(f, False)


# --- occurrence scanning ---


class Occurrence(NamedTuple):
    path: tuple[int, ...]
    sub: Formula
    polarity: int
    surface: bool
    kind: str


def occurrence_scan(f: Formula) -> list[Occurrence]:
    """Every subformula occurrence with its path, polarity (an implication
    antecedent counts as negated), and whether it sits outside every choice
    operator."""
    out: list[Occurrence] = []

    def walk(g: Formula, path: tuple[int, ...], pol: int, surface: bool):
        out.append(Occurrence(path, g, pol, surface, type(g).__name__))
        inner_surface = surface and not isinstance(g, _CHOICE)
        if isinstance(g, Neg):
            walk(g.body, path + (0,), -pol, inner_surface)
        elif isinstance(g, Imp):
            walk(g.lhs, path + (0,), -pol, inner_surface)
            walk(g.rhs, path + (1,), pol, inner_surface)
        else:
            for i, c in enumerate(children(g)):
                walk(c, path + (i,), pol, inner_surface)

    walk(f, (), 1, True)
    return out


def subformula_at(f: Formula, path: tuple[int, ...]) -> Formula:
    g = f
    for i in path:
        if isinstance(g, Imp):
            g = (g.lhs, g.rhs)[i]
        else:
            g = children(g)[i]
    return g


def replace_at(f: Formula, path: tuple[int, ...], new: Formula) -> Formula:
    if not path:
        return new
    i = path[0]
    kids = list(children(f))
    kids[i] = replace_at(kids[i], path[1:], new)
    return rebuild(f, tuple(kids))


# --- syntax discipline checks ---


def cl4_syntax_errors(f: Formula) -> list[str]:
    """The quantifier-aware proof systems want no variable both free and
    bound, no recurrences, and no repeated nesting of one bound variable."""
    problems = []
    overlap = free_vars(f) & bound_vars(f)
    if overlap:
        problems.append(f"variables both free and bound: {sorted(overlap)}")

    def nested(g: Formula, seen: frozenset[str]):
        if isinstance(g, _BINDERS):
            if g.var in seen:
                problems.append(f"variable {g.var!r} bound twice along a path")
            seen = seen | {g.var}
        for c in children(g):
            nested(c, seen)

    nested(f, frozenset())
    for occ in occurrence_scan(f):
        if isinstance(occ.sub, _RECS):
            problems.append(f"recurrence {occ.kind} is out of scope here")
    return problems


def is_al_formula(f: Formula) -> bool:
    """Negation-normal, general atoms only, and no blind or parallel
    quantifiers or implication."""
    if isinstance(f, (TopAtom, BotAtom, GenAtom)):
        return True
    if isinstance(f, ElemAtom):
        return False
    if isinstance(f, Neg):
        return isinstance(f.body, GenAtom)
    if isinstance(f, (Imp, BlAll, BlEx, PaAll, PaEx)):
        return False
    return all(is_al_formula(c) for c in children(f))


# --- negation normal form ---


def nnf(f: Formula) -> Formula:
    """Push negation to atoms; implication unfolds into its disjunction."""
    if isinstance(f, Imp):
        return Por((nnf(Neg(f.lhs)), nnf(f.rhs)))
    if not isinstance(f, Neg):
        return rebuild(f, tuple(nnf(c) for c in children(f)))
    g = f.body
    if isinstance(g, Neg):
        return nnf(g.body)
    if isinstance(g, TopAtom):
        return BotAtom()
    if isinstance(g, BotAtom):
        return TopAtom()
    if isinstance(g, (ElemAtom, GenAtom)):
        return Neg(g)
    if isinstance(g, Imp):
        return Pand((nnf(g.lhs), nnf(Neg(g.rhs))))
    duals = {Pand: Por, Por: Pand, Chand: Chor, Chor: Chand,
             ChAll: ChEx, ChEx: ChAll, PaAll: PaEx, PaEx: PaAll,
             BlAll: BlEx, BlEx: BlAll, PRec: PCor, PCor: PRec,
             BRec: BCor, BCor: BRec}
    cls = duals[type(g)]
    if isinstance(g, _NARY):
        return cls(tuple(nnf(Neg(c)) for c in g.items))
    if isinstance(g, _BINDERS):
        return cls(g.var, nnf(Neg(g.body)))
    return cls(nnf(Neg(g.body)))


nnf_al = nnf


# --- elementarization and stability ---


def elementarize(f: Formula, positive: bool = True) -> Formula:
    """The elementary skeleton: an untouched choice subformula is lost by
    whoever owns it, so it collapses to a constant outright; an untouched
    general atom is resolved against the machine, so its replacement turns
    on the sign of the position it sits in."""
    if isinstance(f, (Chand, ChAll)):
        return TopAtom()
    if isinstance(f, (Chor, ChEx)):
        return BotAtom()
    if isinstance(f, GenAtom):
        return BotAtom() if positive else TopAtom()
    if isinstance(f, (TopAtom, BotAtom, ElemAtom)):
        return f
    if isinstance(f, Neg):
        return Neg(elementarize(f.body, not positive))
    if isinstance(f, Imp):
        return Imp(elementarize(f.lhs, not positive), elementarize(f.rhs, positive))
    if isinstance(f, (Pand, Por)):
        return type(f)(tuple(elementarize(c, positive) for c in f.items))
    if isinstance(f, (BlAll, BlEx)):
        return type(f)(f.var, elementarize(f.body, positive))
    if isinstance(f, (PaAll, PaEx)) or isinstance(f, _RECS):
        raise ParseError(f"{type(f).__name__} has no elementary skeleton here")
    raise ParseError(f"cannot elementarize {type(f).__name__}")


def _is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (BlAll, BlEx)):
        return False
    return all(_is_quantifier_free(c) for c in children(f))


def _prop_eval(f: Formula, assignment: dict) -> bool:
    if isinstance(f, TopAtom):
        return True
    if isinstance(f, BotAtom):
        return False
    if isinstance(f, ElemAtom):
        return assignment[(f.letter, f.args)]
    if isinstance(f, Neg):
        return not _prop_eval(f.body, assignment)
    if isinstance(f, Imp):
        return (not _prop_eval(f.lhs, assignment)) or _prop_eval(f.rhs, assignment)
    if isinstance(f, Pand):
        return all(_prop_eval(c, assignment) for c in f.items)
    if isinstance(f, Por):
        return any(_prop_eval(c, assignment) for c in f.items)
    raise ParseError(f"not propositional: {type(f).__name__}")


def _atom_instances(f: Formula) -> list[tuple]:
    seen: list[tuple] = []

    def walk(g: Formula):
        if isinstance(g, ElemAtom):
            key = (g.letter, g.args)
            if key not in seen:
                seen.append(key)
        if isinstance(g, Imp):
            walk(g.lhs)
            walk(g.rhs)
        for c in children(g):
            walk(c)

    walk(f)
    return seen


def prop_valid(f: Formula) -> bool:
    """Complete validity check for quantifier-free elementary formulas:
    distinct atom instances vary independently."""
    atoms = _atom_instances(f)
    if len(atoms) > 20:
        raise ParseError("too many atom instances for brute force")
    for bits in product((False, True), repeat=len(atoms)):
        if not _prop_eval(f, dict(zip(atoms, bits))):
            return False
    return True


# first-order validity, bounded effort


def _literal_key(f: Formula):
    if isinstance(f, ElemAtom):
        return (True, f.letter, f.args)
    if isinstance(f, Neg) and isinstance(f.body, ElemAtom):
        return (False, f.body.letter, f.body.args)
    return None


def _literal_formulas(literals: set) -> Iterator[Formula]:
    for sign, letter, args in literals:
        atom = ElemAtom(letter, args)
        yield atom if sign else Neg(atom)


def _tableau_closed(branch: list[Formula], consts: list[Term],
                    gamma_bound: int, fuel: list[int]) -> bool:
    """Does every extension of this branch close? The branch holds formulas
    in negation normal form and is tested for unsatisfiability, with at most
    ``gamma_bound`` rounds of universal instantiation."""
    fuel[0] -= 1
    if fuel[0] < 0:
        return False
    literals: set = set()
    gammas: list[BlAll] = []
    consts = list(consts)
    todo = list(branch)
    while todo:
        g = todo.pop()
        if isinstance(g, BotAtom):
            return True
        if isinstance(g, TopAtom):
            continue
        key = _literal_key(g)
        if key is not None:
            if ((not key[0],) + key[1:]) in literals:
                return True
            literals.add(key)
            continue
        if isinstance(g, Pand):
            todo.extend(g.items)
            continue
        if isinstance(g, BlEx):
            c = f"@{len(consts)}"
            consts.append(c)
            todo.append(apply_substitution(g.body, {g.var: c}))
            continue
        if isinstance(g, BlAll):
            if g not in gammas:
                gammas.append(g)
            continue
        if isinstance(g, Por):
            rest = todo + gammas + list(_literal_formulas(literals))
            return all(
                _tableau_closed(rest + [item], consts, gamma_bound, fuel)
                for item in g.items
            )
        raise ParseError(f"tableau cannot handle {type(g).__name__}")
    if not gammas or gamma_bound <= 0:
        return False
    if not consts:
        consts.append("@0")
    expansions = [
        apply_substitution(g.body, {g.var: c}) for g in gammas for c in consts
    ]
    regrown = list(_literal_formulas(literals)) + expansions + gammas
    if set(regrown) <= set(branch):
        return False
    return _tableau_closed(regrown, consts, gamma_bound - 1, fuel)


def _small_countermodel(f: Formula, max_domain: int = 3) -> bool:
    """Search for a falsifying interpretation over a small domain. Distinct
    integer constants keep distinct denotations, so a hit is sound."""
    letters = sorted({(a.letter, len(a.args)) for a in _elem_atoms(f)})
    fvars = sorted(free_vars(f))
    ints = sorted(constants_of(f))
    for size in range(max(1, len(ints)), max_domain + 1):
        domain = list(range(1, size + 1))
        const_map = {c: domain[i] for i, c in enumerate(ints)}
        tables = []
        for letter, arity in letters:
            keys = list(product(domain, repeat=arity))
            if len(keys) > 9:
                return False
            options = [
                (letter, arity, dict(zip(keys, bits)))
                for bits in product((False, True), repeat=len(keys))
            ]
            tables.append(options)
        total = 1
        for t in tables:
            total *= len(t)
        if total > 65536:
            return False
        for combo in product(*tables):
            interp = {(letter, arity): table for letter, arity, table in combo}
            for assign in product(domain, repeat=len(fvars)):
                env = dict(zip(fvars, assign))
                if not _fo_eval(f, interp, env, domain, const_map):
                    return True
    return False


def _elem_atoms(f: Formula) -> list[ElemAtom]:
    out = []

    def walk(g):
        if isinstance(g, ElemAtom):
            out.append(g)
        if isinstance(g, Imp):
            walk(g.lhs)
            walk(g.rhs)
        for c in children(g):
            walk(c)

    walk(f)
    return out


def _fo_eval(f: Formula, interp, env, domain, const_map) -> bool:
    if isinstance(f, TopAtom):
        return True
    if isinstance(f, BotAtom):
        return False
    if isinstance(f, ElemAtom):
        vals = tuple(
            env[a] if isinstance(a, str) else const_map.get(a, domain[0])
            for a in f.args
        )
        return interp[(f.letter, len(f.args))][vals]
    if isinstance(f, Neg):
        return not _fo_eval(f.body, interp, env, domain, const_map)
    if isinstance(f, Imp):
        return (not _fo_eval(f.lhs, interp, env, domain, const_map)) or _fo_eval(
            f.rhs, interp, env, domain, const_map
        )
    if isinstance(f, Pand):
        return all(_fo_eval(c, interp, env, domain, const_map) for c in f.items)
    if isinstance(f, Por):
        return any(_fo_eval(c, interp, env, domain, const_map) for c in f.items)
    if isinstance(f, BlAll):
        return all(
            _fo_eval(f.body, interp, {**env, f.var: d}, domain, const_map)
            for d in domain
        )
    if isinstance(f, BlEx):
        return any(
            _fo_eval(f.body, interp, {**env, f.var: d}, domain, const_map)
            for d in domain
        )
    raise ParseError(f"not elementary: {type(f).__name__}")


def elementary_valid(f: Formula) -> str:
    """Classical validity of an elementary formula: ``yes``/``no`` are
    definitive, quantified formulas may come back ``unknown``."""
    if _is_quantifier_free(f):
        return "yes" if prop_valid(f) else "no"
    if _small_countermodel(f):
        return "no"
    refute = nnf(Neg(f))
    base_consts: list[Term] = sorted(free_vars(f)) + sorted(constants_of(f))
    for bound in range(1, 5):
        fuel = [4000]
        if _tableau_closed([refute], list(base_consts), bound, fuel):
            return "yes"
    return "unknown"


def is_stable(f: Formula) -> str:
    """Is the elementary skeleton classically valid?"""
    return elementary_valid(elementarize(f))


# --- serialization ---


def formula_to_json(f: Formula) -> dict:
    if isinstance(f, TopAtom):
        return {"op": "TopAtom"}
    if isinstance(f, BotAtom):
        return {"op": "BotAtom"}
    if isinstance(f, (ElemAtom, GenAtom)):
        return {"op": type(f).__name__, "letter": f.letter, "args": list(f.args)}
    if isinstance(f, Neg):
        return {"op": "Neg", "body": formula_to_json(f.body)}
    if isinstance(f, _NARY):
        return {"op": type(f).__name__, "items": [formula_to_json(c) for c in f.items]}
    if isinstance(f, Imp):
        return {"op": "Imp", "lhs": formula_to_json(f.lhs), "rhs": formula_to_json(f.rhs)}
    if isinstance(f, _BINDERS):
        return {"op": type(f).__name__, "var": f.var, "body": formula_to_json(f.body)}
    if isinstance(f, _RECS):
        return {"op": type(f).__name__, "body": formula_to_json(f.body)}
    raise ParseError(f"cannot serialize {type(f).__name__}")


_CLASSES = {
    "Pand": Pand, "Por": Por, "Chand": Chand, "Chor": Chor,
    "ChAll": ChAll, "ChEx": ChEx, "PaAll": PaAll, "PaEx": PaEx,
    "BlAll": BlAll, "BlEx": BlEx, "PRec": PRec, "PCor": PCor,
    "BRec": BRec, "BCor": BCor,
}


def formula_from_json(data: dict) -> Formula:
    op = data["op"]
    if op == "TopAtom":
        return TopAtom()
    if op == "BotAtom":
        return BotAtom()
    if op in ("ElemAtom", "GenAtom"):
        cls = ElemAtom if op == "ElemAtom" else GenAtom
        args = tuple(a if isinstance(a, int) else str(a) for a in data["args"])
        return cls(data["letter"], args)
    if op == "Neg":
        return Neg(formula_from_json(data["body"]))
    if op == "Imp":
        return Imp(formula_from_json(data["lhs"]), formula_from_json(data["rhs"]))
    cls = _CLASSES.get(op)
    if cls is None:
        raise ParseError(f"unknown op {op!r}")
    if op in ("Pand", "Por", "Chand", "Chor"):
        return cls(tuple(formula_from_json(c) for c in data["items"]))
    if "var" in data:
        return cls(data["var"], formula_from_json(data["body"]))
    return cls(formula_from_json(data["body"]))


def sequent_formula(s: Sequent) -> Formula:
    """Read a sequent as one formula: its disjunction, kept flat."""
    if len(s) == 1:
        return s[0]
    return Por(tuple(s))
