"""Interpretations: turning formulas into games.

An interpretation fixes a finite domain and assigns every atom letter a
game template over a tuple of placeholder variables. Elementary letters
get predicates, general letters get arbitrary templates; applying an
interpretation substitutes actual atom arguments for the placeholders and
maps the connectives homomorphically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from typing import Iterable, NamedTuple, Optional

from . import formulas as fm
from . import games as gm
from .errors import NotAdmissible, ParseError


@dataclass(frozen=True)
class LetterInterp:
    tuple_vars: tuple[str, ...]
    template: gm.GameExpr

    def __post_init__(self):
        if len(set(self.tuple_vars)) != len(self.tuple_vars):
            raise ParseError("placeholder variables must be distinct")


@dataclass(frozen=True)
class Interpretation:
    """A finite domain plus one template per letter, keyed ``letter/arity``."""

    domain: int = 3
    letters: tuple[tuple[str, LetterInterp], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "letters", tuple(sorted(self.letters, key=lambda kv: kv[0]))
        )
        for key, li in self.letters:
            letter, _, arity = key.partition("/")
            if not letter or not arity.isdigit():
                raise ParseError(f"bad letter key {key!r}")
            if len(li.tuple_vars) != int(arity):
                raise ParseError(f"{key}: placeholder tuple has wrong length")

    def lookup(self, letter: str, arity: int) -> Optional[LetterInterp]:
        key = f"{letter}/{arity}"
        for k, li in self.letters:
            if k == key:
                return li
        return None

    def valuation(self) -> gm.Valuation:
        return gm.Valuation(domain=self.domain)


def interp_of(domain: int, mapping: dict[str, tuple[Iterable[str], gm.GameExpr]]) -> Interpretation:
    letters = tuple(
        (key, LetterInterp(tuple(vars_), template))
        for key, (vars_, template) in mapping.items()
    )
    return Interpretation(domain, letters)


def _atoms_of(f: fm.Formula) -> list[tuple[str, int, bool]]:
    out: list[tuple[str, int, bool]] = []

    def walk(g: fm.Formula):
        if isinstance(g, (fm.ElemAtom, fm.GenAtom)):
            entry = (g.letter, len(g.args), isinstance(g, fm.GenAtom))
            if entry not in out:
                out.append(entry)
        if isinstance(g, fm.Imp):
            walk(g.lhs)
            walk(g.rhs)
        for c in fm.children(g):
            walk(c)

    walk(f)
    return out


def apply_interp(interp: Interpretation, f: fm.Formula) -> gm.GameExpr:
    """Map a formula to its game under the interpretation."""
    if isinstance(f, fm.TopAtom):
        return gm.elem_top()
    if isinstance(f, fm.BotAtom):
        return gm.elem_bot()
    if isinstance(f, (fm.ElemAtom, fm.GenAtom)):
        li = interp.lookup(f.letter, len(f.args))
        if li is None:
            raise NotAdmissible(f"no template for {f.letter}/{len(f.args)}")
        mapping = dict(zip(li.tuple_vars, f.args))
        return gm.substitute(li.template, mapping)
    if isinstance(f, fm.Neg):
        return gm.Neg(apply_interp(interp, f.body))
    if isinstance(f, fm.Imp):
        return gm.Imp(apply_interp(interp, f.lhs), apply_interp(interp, f.rhs))
    if isinstance(f, (fm.Pand, fm.Por, fm.Chand, fm.Chor)):
        cls = {fm.Pand: gm.Pand, fm.Por: gm.Por,
               fm.Chand: gm.Chand, fm.Chor: gm.Chor}[type(f)]
        return cls(tuple(apply_interp(interp, c) for c in f.items))
    binders = {fm.ChAll: gm.ChAll, fm.ChEx: gm.ChEx, fm.PaAll: gm.PaAll,
               fm.PaEx: gm.PaEx, fm.BlAll: gm.BlAll, fm.BlEx: gm.BlEx}
    if type(f) in binders:
        return binders[type(f)](f.var, apply_interp(interp, f.body))
    recs = {fm.PRec: gm.PRec, fm.PCor: gm.PCor,
            fm.BRec: gm.BRec, fm.BCor: gm.BCor}
    if type(f) in recs:
        return recs[type(f)](apply_interp(interp, f.body))
    raise ParseError(f"cannot interpret {type(f).__name__}")


def is_elementary_expr(g: gm.GameExpr) -> bool:
    """No move is ever available, under any valuation."""
    if isinstance(g, gm.Elem):
        return True
    if isinstance(g, gm.Fin):
        return not g.game.children
    if isinstance(g, gm.Neg):
        return is_elementary_expr(g.body)
    if isinstance(g, (gm.Pand, gm.Por)):
        return all(is_elementary_expr(c) for c in g.items)
    if isinstance(g, gm.Imp):
        return is_elementary_expr(g.lhs) and is_elementary_expr(g.rhs)
    if isinstance(g, (gm.BlAll, gm.BlEx)):
        return is_elementary_expr(g.body)
    return False


class AdmissibilityReport(NamedTuple):
    admissible: bool
    problems: tuple[str, ...]


def admissible_for(interp: Interpretation, f: fm.Formula,
                   depth: int = 2) -> AdmissibilityReport:
    """Check that every letter has a suitable template and that each
    blindly quantified variable acts on a game whose structure ignores it."""
    problems: list[str] = []
    for letter, arity, general in _atoms_of(f):
        li = interp.lookup(letter, arity)
        if li is None:
            problems.append(f"no template for {letter}/{arity}")
            continue
        extra = gm.free_vars(li.template) - set(li.tuple_vars)
        if extra:
            problems.append(
                f"{letter}/{arity}: template depends on {sorted(extra)}"
            )
        if not general and not is_elementary_expr(li.template):
            problems.append(f"{letter}/{arity}: elementary letter, non-elementary template")
    if problems:
        return AdmissibilityReport(False, tuple(problems))

    e = interp.valuation()
    for occ in fm.occurrence_scan(f):
        if not isinstance(occ.sub, (fm.BlAll, fm.BlEx)):
            continue
        var = occ.sub.var
        try:
            body = apply_interp(interp, occ.sub.body)
        except ParseError as exc:
            problems.append(f"under a blind binder on {var!r}: {exc}")
            continue
        try:
            if not gm.is_unistructural_in(body, var, e, depth=depth):
                problems.append(
                    f"interpreted scope of blind {var!r} is not unistructural in it"
                )
        except gm.CapExceeded:
            problems.append(
                f"could not bound the unistructurality check for blind {var!r}"
            )
    return AdmissibilityReport(not problems, tuple(problems))


# --- deterministic families of interpretations ---


def _random_table(rng: random.Random, arity: int, domain: int) -> gm.TruthTable:
    rows = []
    for row in product(range(1, domain + 1), repeat=arity):
        if rng.random() < 0.5:
            rows.append(row)
    return gm.TruthTable(arity, frozenset(rows))


def _all_tables(arity: int, domain: int) -> list[gm.TruthTable]:
    keys = list(product(range(1, domain + 1), repeat=arity))
    out = []
    for bits in product((False, True), repeat=len(keys)):
        rows = frozenset(k for k, b in zip(keys, bits) if b)
        out.append(gm.TruthTable(arity, rows))
    return out


def _atom_expr(rng: random.Random, name: str, tuple_vars: tuple[str, ...],
               domain: int) -> gm.GameExpr:
    arity = len(tuple_vars)
    return gm.Elem(name, tuple_vars, _random_table(rng, arity, domain))


def _template(rng: random.Random, letter: str, tuple_vars: tuple[str, ...],
              domain: int, depth: int) -> gm.GameExpr:
    base = lambda k: _atom_expr(rng, f"{letter.lower()}_{k}", tuple_vars, domain)
    if depth == 0 or rng.random() < 0.3:
        return base(rng.randrange(4))
    kind = rng.choice(("neg", "chand", "chor", "pand", "por", "chall", "chex"))
    sub = lambda: _template(rng, letter, tuple_vars, domain, depth - 1)
    if kind == "neg":
        return gm.Neg(sub())
    if kind in ("chand", "chor", "pand", "por"):
        cls = {"chand": gm.Chand, "chor": gm.Chor,
               "pand": gm.Pand, "por": gm.Por}[kind]
        return cls((sub(), sub()))
    u = f"u{depth}"
    body = gm.Elem(
        f"{letter.lower()}_q{depth}",
        tuple_vars + (u,),
        _random_table(rng, len(tuple_vars) + 1, domain),
    )
    return (gm.ChAll if kind == "chall" else gm.ChEx)(u, body)


def enumerate_interps(f: fm.Formula, domain: int = 3, seed: int = 0,
                      count: int = 10, depth: int = 2) -> list[Interpretation]:
    """A deterministic family of admissible interpretations for the letters
    of ``f``: exhaustive truth tables where that is cheap, seeded template
    compositions for general letters."""
    rng = random.Random(seed)
    specs = _atoms_of(f)
    options: list[list[LetterInterp]] = []
    for letter, arity, general in specs:
        tuple_vars = tuple(f"z{i+1}" for i in range(arity))
        choices: list[LetterInterp] = []
        if general:
            for _ in range(count):
                choices.append(
                    LetterInterp(tuple_vars, _template(rng, letter, tuple_vars, domain, depth))
                )
        elif arity <= 1 and domain <= 3:
            for table in _all_tables(arity, domain):
                choices.append(
                    LetterInterp(tuple_vars, gm.Elem(letter, tuple_vars, table))
                )
        else:
            for _ in range(count):
                choices.append(
                    LetterInterp(
                        tuple_vars, gm.Elem(letter, tuple_vars, _random_table(rng, arity, domain))
                    )
                )
        options.append(choices)

    out: list[Interpretation] = []
    seen = set()
    budget = count * 20
    while len(out) < count and budget > 0:
        budget -= 1
        picks = tuple(rng.randrange(len(opt)) for opt in options)
        if picks in seen:
            continue
        seen.add(picks)
        letters = tuple(
            (f"{letter}/{arity}", options[i][picks[i]])
            for i, (letter, arity, _) in enumerate(specs)
        )
        interp = Interpretation(domain, letters)
        if admissible_for(interp, f).admissible:
            out.append(interp)
    return out


# --- serialization ---


def interp_to_json(interp: Interpretation) -> dict:
    return {
        "domain": interp.domain,
        "letters": {
            key: {"tuple": list(li.tuple_vars), "template": gm.game_to_json(li.template)}
            for key, li in interp.letters
        },
    }


def interp_from_json(data: dict) -> Interpretation:
    letters = tuple(
        (key, LetterInterp(tuple(item["tuple"]), gm.game_from_json(item["template"])))
        for key, item in data["letters"].items()
    )
    return Interpretation(int(data["domain"]), letters)
