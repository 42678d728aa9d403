"""Proof objects, checkers, deciders, and strategy extraction.

Three calculi share one step format. ``cl4_check`` verifies derivations in
the quantifier-level choice calculus rule by rule, ``cl2_decide`` settles
its propositional fragment outright, and ``cl4_prove_blindfree`` settles
the fragment without blind quantifiers. ``al_check`` verifies sequent
derivations in the resource-conscious calculus, and ``al_extract`` compiles
every checked sequent derivation into an agent that wins the concluding
disjunction under any admissible interpretation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

from . import agents as ag
from . import formulas as fm
from .errors import ProofError

Conclusion = Union[fm.Formula, fm.Sequent]
Path = tuple[int, ...]

_BINDER_TYPES = (fm.ChAll, fm.ChEx, fm.BlAll, fm.BlEx, fm.PaAll, fm.PaEx)


# --- proof objects ---


@dataclass(frozen=True)
class ProofStep:
    id: str
    rule: str
    conclusion: Conclusion
    premises: tuple[str, ...] = ()
    params: tuple[tuple[str, object], ...] = ()

    def param(self, name: str, default=None):
        for key, value in self.params:
            if key == name:
                return value
        return default


@dataclass(frozen=True)
class Proof:
    steps: tuple[ProofStep, ...]

    def step(self, sid: str) -> ProofStep:
        for st in self.steps:
            if st.id == sid:
                return st
        raise ProofError(f"no step named {sid!r}")

    def final(self) -> ProofStep:
        return self.steps[-1]


def _kv(**params) -> tuple[tuple[str, object], ...]:
    return tuple(sorted(params.items()))


def step(sid: str, rule: str, conclusion: Conclusion,
         premises: Sequence[str] = (), **params) -> ProofStep:
    return ProofStep(sid, rule, conclusion, tuple(premises), _kv(**params))


@dataclass(frozen=True)
class CheckResult:
    verdict: str                     # "ok" | "error" | "unverified_stability"
    error_step: str = ""
    reason: str = ""
    pending: tuple[str, ...] = ()    # steps whose stability went unverified

    @property
    def ok(self) -> bool:
        return self.verdict == "ok"


def _err(sid: str, reason: str) -> CheckResult:
    return CheckResult("error", error_step=sid, reason=reason)


def _structure_error(proof: Proof) -> Optional[CheckResult]:
    if not proof.steps:
        return _err("", "a proof needs at least one step")
    seen: set[str] = set()
    for st in proof.steps:
        if st.id in seen:
            return _err(st.id, "duplicate step id")
        for pid in st.premises:
            if pid not in seen:
                return _err(st.id, f"premise {pid!r} does not come earlier")
        seen.add(st.id)
    return None


# --- serialization ---


def proof_to_json(p: Proof) -> dict:
    steps = []
    for st in p.steps:
        if isinstance(st.conclusion, tuple):
            text = fm.sequent_text(st.conclusion)
        else:
            text = fm.formula_text(st.conclusion)
        params = {
            k: (list(v) if isinstance(v, tuple) else v) for k, v in st.params
        }
        steps.append({
            "id": st.id,
            "rule": st.rule,
            "premises": list(st.premises),
            "conclusion": text,
            "params": params,
        })
    return {"steps": steps}


def proof_from_json(data: dict, sequents: bool = False) -> Proof:
    steps = []
    for d in data["steps"]:
        if sequents:
            concl: Conclusion = fm.parse_sequent(d["conclusion"])
        else:
            concl = fm.parse(d["conclusion"])
        params = tuple(sorted(
            (k, tuple(v) if isinstance(v, list) else v)
            for k, v in d.get("params", {}).items()
        ))
        steps.append(ProofStep(
            d["id"], d["rule"], concl, tuple(d.get("premises", ())), params,
        ))
    return Proof(tuple(steps))


# --- occurrence helpers ---


def _surface_choices(e: fm.Formula) -> list[fm.Occurrence]:
    return [
        occ for occ in fm.occurrence_scan(e)
        if occ.surface and isinstance(occ.sub, (fm.Chand, fm.Chor, fm.ChAll, fm.ChEx))
    ]


def _surface_generals(e: fm.Formula) -> list[fm.Occurrence]:
    return [
        occ for occ in fm.occurrence_scan(e)
        if occ.surface and isinstance(occ.sub, fm.GenAtom)
    ]


def _occurrence_at(e: fm.Formula, path: Path) -> Optional[fm.Occurrence]:
    for occ in fm.occurrence_scan(e):
        if occ.path == path:
            return occ
    return None


def _binders_along(e: fm.Formula, path: Path) -> set[str]:
    out: set[str] = set()
    g = e
    for i in path:
        if isinstance(g, _BINDER_TYPES):
            out.add(g.var)
        g = fm.subformula_at(g, (i,))
    return out


def _infer_replacement(e: fm.Formula, path: Path,
                       premise: fm.Formula) -> Optional[fm.Formula]:
    """If the premise equals ``e`` everywhere except at ``path``, return the
    subformula standing there."""
    try:
        h = fm.subformula_at(premise, path)
    except Exception:
        return None
    if fm.replace_at(e, path, h) == premise:
        return h
    return None


def _match_subst(g: fm.Formula, x: str,
                 h: fm.Formula) -> tuple[bool, Optional[fm.Term]]:
    """Does ``h`` arise from ``g`` by writing one term for every free ``x``?
    Returns the term, or None for it when ``x`` has no free occurrence."""
    found: list[fm.Term] = []

    def walk(a: fm.Formula, b: fm.Formula, shadowed: bool) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, (fm.ElemAtom, fm.GenAtom)):
            if a.letter != b.letter or len(a.args) != len(b.args):
                return False
            for u, v in zip(a.args, b.args):
                if u == x and not shadowed:
                    found.append(v)
                elif u != v:
                    return False
            return True
        if isinstance(a, _BINDER_TYPES):
            if a.var != b.var:
                return False
            return walk(a.body, b.body, shadowed or a.var == x)
        ka, kb = fm.children(a), fm.children(b)
        if len(ka) != len(kb):
            return False
        return all(walk(u, v, shadowed) for u, v in zip(ka, kb))

    if not walk(g, h, False):
        return False, None
    terms = set(found)
    if not terms:
        return True, None
    if len(terms) > 1:
        return False, None
    return True, terms.pop()


def _path_param(st: ProofStep, name: str) -> Optional[Path]:
    raw = st.param(name)
    if raw is None:
        return None
    return tuple(int(i) for i in raw)


# --- the quantifier-level choice calculus ---


def cl4_language_errors(f: fm.Formula) -> list[str]:
    problems = list(fm.cl4_syntax_errors(f))
    for occ in fm.occurrence_scan(f):
        if isinstance(occ.sub, (fm.PaAll, fm.PaEx)):
            problems.append("parallel quantifiers are out of scope here")
    return problems


def _rule_a_requirements(e: fm.Formula):
    """Forced premises per choice occurrence: every item of each positive
    conjunctive (negative disjunctive) choice, and a freshly named instance
    of each positive universal (negative existential) choice."""
    must: list[fm.Formula] = []
    patterns: list[tuple[Path, str, fm.Formula]] = []
    for occ in _surface_choices(e):
        sub, pol = occ.sub, occ.polarity
        branching = (isinstance(sub, fm.Chand) and pol > 0) or \
                    (isinstance(sub, fm.Chor) and pol < 0)
        quantified = (isinstance(sub, fm.ChAll) and pol > 0) or \
                     (isinstance(sub, fm.ChEx) and pol < 0)
        if branching:
            for item in sub.items:
                must.append(fm.replace_at(e, occ.path, item))
        elif quantified:
            patterns.append((occ.path, sub.var, sub.body))
    return must, patterns


def _check_rule_a(st: ProofStep, e: fm.Formula,
                  prems: list[fm.Formula]) -> Optional[CheckResult]:
    must, patterns = _rule_a_requirements(e)
    must_set = list(dict.fromkeys(must))
    e_vars = fm.all_variables(e)
    for f in must_set:
        if f not in prems:
            return _err(st.id, f"missing premise {fm.formula_text(f)}")

    def fits(pattern, p) -> bool:
        path, var, body = pattern
        h = _infer_replacement(e, path, p)
        if h is None:
            return False
        okay, t = _match_subst(body, var, h)
        if not okay:
            return False
        return t is None or (isinstance(t, str) and t not in e_vars)

    for pattern in patterns:
        if not any(fits(pattern, p) for p in prems):
            return _err(st.id, "no premise instantiates the choice at "
                               f"path {list(pattern[0])}")
    for p in prems:
        if p in must_set:
            continue
        if not any(fits(pattern, p) for pattern in patterns):
            return _err(st.id, f"stray premise {fm.formula_text(p)}")
    return None


def _check_rule_b1(st: ProofStep, e: fm.Formula,
                   prems: list[fm.Formula]) -> Optional[CheckResult]:
    path = _path_param(st, "path")
    i = st.param("i")
    if path is None or i is None:
        return _err(st.id, "B1 takes params path and i")
    if len(prems) != 1:
        return _err(st.id, "B1 takes one premise")
    occ = _occurrence_at(e, path)
    if occ is None or not occ.surface:
        return _err(st.id, "path does not name a surface occurrence")
    sub, pol = occ.sub, occ.polarity
    demoted = (isinstance(sub, fm.Chand) and pol < 0) or \
              (isinstance(sub, fm.Chor) and pol > 0)
    if not demoted:
        return _err(st.id, "B1 wants a negative conjunctive or positive "
                           "disjunctive choice")
    if not 1 <= i <= len(sub.items):
        return _err(st.id, f"index {i} out of range")
    if prems[0] != fm.replace_at(e, path, sub.items[i - 1]):
        return _err(st.id, "premise is not the indicated replacement")
    return None


def _check_rule_b2(st: ProofStep, e: fm.Formula,
                   prems: list[fm.Formula]) -> Optional[CheckResult]:
    path = _path_param(st, "path")
    t = st.param("t")
    if path is None or t is None:
        return _err(st.id, "B2 takes params path and t")
    if len(prems) != 1:
        return _err(st.id, "B2 takes one premise")
    occ = _occurrence_at(e, path)
    if occ is None or not occ.surface:
        return _err(st.id, "path does not name a surface occurrence")
    sub, pol = occ.sub, occ.polarity
    demoted = (isinstance(sub, fm.ChAll) and pol < 0) or \
              (isinstance(sub, fm.ChEx) and pol > 0)
    if not demoted:
        return _err(st.id, "B2 wants a negative universal or positive "
                           "existential choice")
    if isinstance(t, str):
        if t in _binders_along(e, path):
            return _err(st.id, f"the occurrence sits under a binder on {t!r}")
        if not fm.free_for(t, sub.var, sub.body):
            return _err(st.id, f"{t!r} is not free for {sub.var!r} there")
    body = fm.apply_substitution(sub.body, {sub.var: t})
    if prems[0] != fm.replace_at(e, path, body):
        return _err(st.id, "premise is not the indicated instance")
    return None


def _check_rule_c(st: ProofStep, e: fm.Formula,
                  prems: list[fm.Formula]) -> Optional[CheckResult]:
    pos = _path_param(st, "pos")
    neg = _path_param(st, "neg")
    if pos is None or neg is None:
        return _err(st.id, "C takes params pos and neg")
    if len(prems) != 1:
        return _err(st.id, "C takes one premise")
    if pos == neg:
        return _err(st.id, "the two occurrences must be distinct")
    opos = _occurrence_at(e, pos)
    oneg = _occurrence_at(e, neg)
    for occ, want in ((opos, 1), (oneg, -1)):
        if occ is None or not occ.surface or not isinstance(occ.sub, fm.GenAtom):
            return _err(st.id, "paths must name surface general atoms")
        if occ.polarity != want:
            return _err(st.id, "need one positive and one negative occurrence")
    if opos.sub.letter != oneg.sub.letter:
        return _err(st.id, "the two occurrences name different letters")
    try:
        hp = fm.subformula_at(prems[0], pos)
    except Exception:
        return _err(st.id, "premise does not match at the positive path")
    if not isinstance(hp, fm.ElemAtom):
        return _err(st.id, "replacement must be an elementary atom")
    letter = hp.letter
    used = {occ.sub.letter for occ in fm.occurrence_scan(e)
            if isinstance(occ.sub, fm.ElemAtom)}
    if letter in used:
        return _err(st.id, f"letter {letter!r} already occurs")
    want = fm.replace_at(e, pos, fm.ElemAtom(letter, opos.sub.args))
    want = fm.replace_at(want, neg, fm.ElemAtom(letter, oneg.sub.args))
    if prems[0] != want:
        return _err(st.id, "premise is not the indicated relettering")
    return None


def cl4_check(proof: Proof) -> CheckResult:
    bad = _structure_error(proof)
    if bad:
        return bad
    pending: list[str] = []
    for st in proof.steps:
        e = st.conclusion
        if not isinstance(e, fm.Formula):
            return _err(st.id, "conclusion must be a single formula")
        problems = cl4_language_errors(e)
        if problems:
            return _err(st.id, problems[0])
        prems = [proof.step(pid).conclusion for pid in st.premises]
        if any(not isinstance(p, fm.Formula) for p in prems):
            return _err(st.id, "premises must be single formulas")
        if st.rule == "A":
            verdict = fm.is_stable(e)
            if verdict == "no":
                return _err(st.id, "conclusion is not stable")
            if verdict == "unknown":
                pending.append(st.id)
            bad = _check_rule_a(st, e, prems)
        elif st.rule == "B1":
            bad = _check_rule_b1(st, e, prems)
        elif st.rule == "B2":
            bad = _check_rule_b2(st, e, prems)
        elif st.rule == "C":
            bad = _check_rule_c(st, e, prems)
        else:
            bad = _err(st.id, f"unknown rule {st.rule!r}")
        if bad:
            return bad
    if pending:
        return CheckResult("unverified_stability", pending=tuple(pending))
    return CheckResult("ok")


# --- backward proof search ---


def _elem_letters(e: fm.Formula) -> set[str]:
    return {occ.sub.letter for occ in fm.occurrence_scan(e)
            if isinstance(occ.sub, fm.ElemAtom)}


def _fresh_elem_letter(e: fm.Formula) -> str:
    used = _elem_letters(e)
    if "w" not in used:
        return "w"
    k = 0
    while f"w{k}" in used:
        k += 1
    return f"w{k}"


def _backward_moves(e: fm.Formula, blind: bool) -> Iterator[
        tuple[str, dict, tuple[fm.Formula, ...]]]:
    """Candidate rule applications, most committal first: reletterings,
    then the environment-owned choice resolutions, then the stability move."""
    generals = _surface_generals(e)
    for opos in generals:
        if opos.polarity <= 0:
            continue
        for oneg in generals:
            if oneg.polarity >= 0 or oneg.sub.letter != opos.sub.letter:
                continue
            letter = _fresh_elem_letter(e)
            p = fm.replace_at(e, opos.path, fm.ElemAtom(letter, opos.sub.args))
            p = fm.replace_at(p, oneg.path, fm.ElemAtom(letter, oneg.sub.args))
            yield "C", {"pos": opos.path, "neg": oneg.path}, (p,)

    choices = _surface_choices(e)
    for occ in choices:
        sub, pol = occ.sub, occ.polarity
        if (isinstance(sub, fm.Chand) and pol < 0) or \
                (isinstance(sub, fm.Chor) and pol > 0):
            for i, item in enumerate(sub.items, start=1):
                yield "B1", {"path": occ.path, "i": i}, \
                    (fm.replace_at(e, occ.path, item),)

    if blind:
        for occ in choices:
            sub, pol = occ.sub, occ.polarity
            if (isinstance(sub, fm.ChAll) and pol < 0) or \
                    (isinstance(sub, fm.ChEx) and pol > 0):
                above = _binders_along(e, occ.path)
                fresh = fm.fresh_variable(fm.all_variables(e), "v")
                terms: list[fm.Term] = list(sorted(fm.constants_of(e)))
                terms += sorted(fm.free_vars(e)) + [fresh]
                for t in terms:
                    if isinstance(t, str):
                        if t in above or not fm.free_for(t, sub.var, sub.body):
                            continue
                    body = fm.apply_substitution(sub.body, {sub.var: t})
                    yield "B2", {"path": occ.path, "t": t}, \
                        (fm.replace_at(e, occ.path, body),)

    if fm.is_stable(e) == "yes":
        must, patterns = _rule_a_requirements(e)
        prems = list(dict.fromkeys(must))
        if patterns and not blind:
            return
        for path, var, body in patterns:
            y = fm.fresh_variable(fm.all_variables(e), "v")
            inst = fm.apply_substitution(body, {var: y})
            prems.append(fm.replace_at(e, path, inst))
        yield "A", {}, tuple(prems)


def _canonical_key(f: fm.Formula) -> str:
    """Print the formula with letters and variables renamed in first-use
    order, so provability-equivalent variants share one memo slot."""
    emap: dict[str, str] = {}
    gmap: dict[str, str] = {}
    vmap: dict[str, str] = {}

    def term(t: fm.Term) -> fm.Term:
        if isinstance(t, int):
            return t
        return vmap.setdefault(t, f"x{len(vmap)}")

    def walk(g: fm.Formula) -> fm.Formula:
        if isinstance(g, fm.ElemAtom):
            letter = emap.setdefault(g.letter, f"e{len(emap)}")
            return fm.ElemAtom(letter, tuple(term(a) for a in g.args))
        if isinstance(g, fm.GenAtom):
            letter = gmap.setdefault(g.letter, f"G{len(gmap)}")
            return fm.GenAtom(letter, tuple(term(a) for a in g.args))
        if isinstance(g, _BINDER_TYPES):
            var = vmap.setdefault(g.var, f"x{len(vmap)}")
            return type(g)(var, walk(g.body))
        return fm.rebuild(g, tuple(walk(c) for c in fm.children(g)))

    return fm.formula_text(walk(f))


def _provable(e: fm.Formula, memo: dict[str, bool], blind: bool) -> bool:
    key = _canonical_key(e)
    if key in memo:
        return memo[key]
    result = False
    for _rule, _params, prems in _backward_moves(e, blind):
        if all(_provable(p, memo, blind) for p in prems):
            result = True
            break
    memo[key] = result
    return result


def _emit(e: fm.Formula, memo: dict[str, bool], blind: bool,
          steps: list[ProofStep], index: dict[fm.Formula, str]) -> str:
    if e in index:
        return index[e]
    for rule, params, prems in _backward_moves(e, blind):
        if all(_provable(p, memo, blind) for p in prems):
            pids = tuple(_emit(p, memo, blind, steps, index) for p in prems)
            sid = f"s{len(steps) + 1}"
            steps.append(ProofStep(sid, rule, e, pids, _kv(**params)))
            index[e] = sid
            return sid
    raise ProofError("emission disagrees with the search")


def _decide(f: fm.Formula, blind: bool) -> tuple[bool, Optional[Proof]]:
    memo: dict[str, bool] = {}
    if not _provable(f, memo, blind):
        return False, None
    steps: list[ProofStep] = []
    _emit(f, memo, blind, steps, {})
    return True, Proof(tuple(steps))


def cl2_language_errors(f: fm.Formula) -> list[str]:
    problems = []
    for occ in fm.occurrence_scan(f):
        sub = occ.sub
        if isinstance(sub, (fm.ElemAtom, fm.GenAtom)) and sub.args:
            problems.append("atoms must be propositional letters")
        if isinstance(sub, _BINDER_TYPES):
            problems.append("quantifiers are out of scope here")
        if isinstance(sub, (fm.PRec, fm.PCor, fm.BRec, fm.BCor)):
            problems.append("recurrences are out of scope here")
    return problems


def cl2_decide(f: fm.Formula) -> tuple[bool, Optional[Proof]]:
    """Settle a propositional choice formula; a win comes with a proof."""
    problems = cl2_language_errors(f)
    if problems:
        raise ProofError(problems[0])
    return _decide(f, blind=False)


def cl4_prove_blindfree(f: fm.Formula) -> tuple[bool, Optional[Proof]]:
    """Settle a quantified choice formula without blind quantifiers."""
    problems = cl4_language_errors(f)
    if problems:
        raise ProofError(problems[0])
    for occ in fm.occurrence_scan(f):
        if isinstance(occ.sub, (fm.BlAll, fm.BlEx)):
            raise ProofError("blind quantifiers are out of scope here")
    return _decide(f, blind=True)


# --- the sequent calculus ---


AL_RULES = (
    "Identity", "Top", "Exchange", "Weakening",
    "pcor-Contraction", "bcor-Contraction",
    "chor-Intro", "chand-Intro", "por-Intro", "pand-Intro",
    "pcor-Intro", "bcor-Intro", "prec-Intro", "brec-Intro",
    "chE-Intro", "chA-Intro",
)


def al_negate(f: fm.Formula) -> fm.Formula:
    return fm.nnf(fm.Neg(f))


def _al_sequent_error(s) -> Optional[str]:
    if not isinstance(s, tuple) or not s:
        return "conclusion must be a nonempty sequent"
    for g in s:
        if not isinstance(g, fm.Formula) or not fm.is_al_formula(g):
            return "sequents take negation-normal general-atom formulas"
    return None


def _check_al_step(st: ProofStep, prems: list[fm.Sequent]) -> Optional[CheckResult]:
    c = st.conclusion
    rule = st.rule

    def arity(n: int) -> Optional[CheckResult]:
        if len(prems) != n:
            return _err(st.id, f"{rule} takes {n} premise(s)")
        return None

    if rule == "Identity":
        if bad := arity(0):
            return bad
        if len(c) != 2 or c[0] != al_negate(c[1]):
            return _err(st.id, "conclusion must pair a formula with its negation")
        return None
    if rule == "Top":
        if bad := arity(0):
            return bad
        if c != (fm.TopAtom(),):
            return _err(st.id, "conclusion must be the single won atom")
        return None
    if rule == "Exchange":
        if bad := arity(1):
            return bad
        i = st.param("i")
        if i is None or not 1 <= i <= len(c) - 1:
            return _err(st.id, "param i must point at the swapped pair")
        s = prems[0]
        want = s[:i - 1] + (s[i], s[i - 1]) + s[i + 1:]
        if len(s) != len(c) or want != c:
            return _err(st.id, "conclusion is not the indicated swap")
        return None
    if rule == "Weakening":
        if bad := arity(1):
            return bad
        if len(c) < 2 or c[:-1] != prems[0]:
            return _err(st.id, "conclusion must extend the premise by one formula")
        return None
    if rule in ("pcor-Contraction", "bcor-Contraction"):
        if bad := arity(1):
            return bad
        cls = fm.PCor if rule.startswith("pcor") else fm.BCor
        if not isinstance(c[-1], cls):
            return _err(st.id, f"last formula must be a {cls.__name__}")
        if prems[0] != c + (c[-1],):
            return _err(st.id, "premise must repeat the contracted formula")
        return None
    if rule == "chor-Intro":
        if bad := arity(1):
            return bad
        i = st.param("i")
        if not isinstance(c[-1], fm.Chor) or len(c[-1].items) < 2:
            return _err(st.id, "last formula must be a disjunctive choice")
        if i is None or not 1 <= i <= len(c[-1].items):
            return _err(st.id, "param i must pick an item")
        if prems[0] != c[:-1] + (c[-1].items[i - 1],):
            return _err(st.id, "premise is not the indicated item")
        return None
    if rule == "chand-Intro":
        if not isinstance(c[-1], fm.Chand) or len(c[-1].items) < 2:
            return _err(st.id, "last formula must be a conjunctive choice")
        items = c[-1].items
        if bad := arity(len(items)):
            return bad
        for j, item in enumerate(items):
            if prems[j] != c[:-1] + (item,):
                return _err(st.id, f"premise {j + 1} is not item {j + 1}")
        return None
    if rule == "por-Intro":
        if bad := arity(1):
            return bad
        if not isinstance(c[-1], fm.Por) or len(c[-1].items) < 2:
            return _err(st.id, "last formula must be a parallel disjunction")
        if prems[0] != c[:-1] + c[-1].items:
            return _err(st.id, "premise must list the disjuncts")
        return None
    if rule == "pand-Intro":
        if not isinstance(c[-1], fm.Pand) or len(c[-1].items) < 2:
            return _err(st.id, "last formula must be a parallel conjunction")
        items = c[-1].items
        if bad := arity(len(items)):
            return bad
        contexts = []
        for j, item in enumerate(items):
            p = prems[j]
            if not p or p[-1] != item:
                return _err(st.id, f"premise {j + 1} must end in item {j + 1}")
            contexts.extend(p[:-1])
        if tuple(contexts) != c[:-1]:
            return _err(st.id, "contexts must concatenate in order")
        return None
    if rule in ("pcor-Intro", "bcor-Intro"):
        if bad := arity(1):
            return bad
        cls = fm.PCor if rule.startswith("pcor") else fm.BCor
        if not isinstance(c[-1], cls):
            return _err(st.id, f"last formula must be a {cls.__name__}")
        if prems[0] != c[:-1] + (c[-1].body,):
            return _err(st.id, "premise must expose the body")
        return None
    if rule in ("prec-Intro", "brec-Intro"):
        if bad := arity(1):
            return bad
        prefixed = rule == "prec-Intro"
        cls = fm.PRec if prefixed else fm.BRec
        ctx_cls = fm.PCor if prefixed else fm.BCor
        if not isinstance(c[-1], cls):
            return _err(st.id, f"last formula must be a {cls.__name__}")
        if any(not isinstance(g, ctx_cls) for g in c[:-1]):
            return _err(st.id, f"context must be {ctx_cls.__name__}-prefixed")
        if prems[0] != c[:-1] + (c[-1].body,):
            return _err(st.id, "premise must expose the body")
        return None
    if rule == "chE-Intro":
        if bad := arity(1):
            return bad
        t = st.param("t")
        if not isinstance(c[-1], fm.ChEx):
            return _err(st.id, "last formula must be an existential choice")
        if t is None:
            return _err(st.id, "param t names the witness")
        x, body = c[-1].var, c[-1].body
        if not fm.free_for(t, x, body):
            return _err(st.id, f"{t!r} is not free for {x!r} there")
        if prems[0] != c[:-1] + (fm.apply_substitution(body, {x: t}),):
            return _err(st.id, "premise is not the indicated instance")
        return None
    if rule == "chA-Intro":
        if bad := arity(1):
            return bad
        y = st.param("y")
        if not isinstance(c[-1], fm.ChAll):
            return _err(st.id, "last formula must be a universal choice")
        if not isinstance(y, str):
            return _err(st.id, "param y names the proxy variable")
        if any(y in fm.all_variables(g) for g in c):
            return _err(st.id, f"{y!r} already occurs in the conclusion")
        x, body = c[-1].var, c[-1].body
        if prems[0] != c[:-1] + (fm.apply_substitution(body, {x: y}),):
            return _err(st.id, "premise is not the proxy instance")
        return None
    return _err(st.id, f"unknown rule {rule!r}")


def al_check(proof: Proof) -> CheckResult:
    bad = _structure_error(proof)
    if bad:
        return bad
    for st in proof.steps:
        reason = _al_sequent_error(st.conclusion)
        if reason:
            return _err(st.id, reason)
        prems = [proof.step(pid).conclusion for pid in st.premises]
        bad = _check_al_step(st, prems)
        if bad:
            return bad
    return CheckResult("ok")


# --- strategy extraction ---


def _ctx_mp(ih: ag.AgentSpec, core: ag.AgentSpec, m: int, tag: str) -> ag.AgentSpec:
    """Rewrite the last sequent slot by a single-implication strategy."""
    if m == 0:
        return ag.compose_mp(ih, core, note=tag)
    bridge = ag.compose_mp(core, ag.l8_agent("e", (m, 1, 0)))
    return ag.compose_mp(ih, bridge, note=tag)


def _extract_step(st: ProofStep, inputs: list[ag.AgentSpec],
                  premise_lens: list[int]) -> ag.AgentSpec:
    c = st.conclusion
    rule = st.rule
    m = len(c) - 1
    tag = f"{st.id} {rule}"

    if rule == "Identity":
        return ag.l8_agent("a", note=tag)
    if rule == "Top":
        return ag.const_win(note=tag)
    if rule == "Exchange":
        i = st.param("i")
        if len(c) == 2:
            return ag.compose_mp(inputs[0], ag.l8_agent("b"), note=tag)
        g, h = i - 1, len(c) - i - 1
        a = ag.compose_mp(inputs[0], ag.l8_agent("f", (g, 2, h)))
        swap = ag.compose_mp(ag.l8_agent("b"), ag.l8_agent("e", (g, 1, h)))
        a = ag.compose_mp(a, swap)
        return ag.compose_mp(a, ag.l8_agent("g", (g, 2, h)), note=tag)
    if rule == "Weakening":
        return ag.compose_mp(inputs[0], ag.l8_agent("i", (m,)), note=tag)
    if rule in ("pcor-Contraction", "bcor-Contraction"):
        core = ag.lemma_strategy("PL6C" if rule.startswith("pcor") else "L6C")
        if m == 0:
            return ag.compose_mp(inputs[0], core, note=tag)
        a = ag.compose_mp(inputs[0], ag.l8_agent("f", (m, 2, 0)))
        bridge = ag.compose_mp(core, ag.l8_agent("e", (m, 1, 0)))
        return ag.compose_mp(a, bridge, note=tag)
    if rule == "chor-Intro":
        n = len(c[-1].items)
        core = ag.l8_agent("j", (n, st.param("i")))
        return _ctx_mp(inputs[0], core, m, tag)
    if rule == "chand-Intro":
        n = len(c[-1].items)
        return ag.compose_gmp(inputs, ag.l8_agent("k", (m, n)), note=tag)
    if rule == "por-Intro":
        if m == 0:
            return inputs[0]
        n = len(c[-1].items)
        return ag.compose_mp(inputs[0], ag.l8_agent("f", (m, n, 0)), note=tag)
    if rule == "pand-Intro":
        qs = tuple(k - 1 for k in premise_lens)
        return ag.compose_gmp(inputs, ag.l8_agent("d", qs), note=tag)
    if rule in ("pcor-Intro", "bcor-Intro"):
        core = ag.lemma_strategy("PL6A" if rule.startswith("pcor") else "L6A")
        return _ctx_mp(inputs[0], core, m, tag)
    if rule in ("prec-Intro", "brec-Intro"):
        branching = rule == "brec-Intro"

        def close(spec):
            return ag.closure_brec(spec) if branching else ag.closure_prec(spec)

        def lemma(kind, **kw):
            return ag.lemma_strategy(("L" if branching else "PL") + kind, **kw)

        if m == 0:
            spec = ag.closure_brec(inputs[0], note=tag) if branching \
                else ag.closure_prec(inputs[0], note=tag)
            return spec
        a = inputs[0] if m == 1 else \
            ag.compose_mp(inputs[0], ag.l8_agent("f", (0, m, 1)))
        a = ag.compose_mp(close(a), lemma("4"))
        if m >= 2:
            dist = ag.compose_mp(lemma("4A", n=m), ag.l8_agent("e", (0, 1, 1)))
            a = ag.compose_mp(a, dist)
            a = ag.compose_mp(a, ag.l8_agent("g", (0, m, 1)))
        for idx in range(1, m + 1):
            bridge = ag.compose_mp(lemma("5"),
                                   ag.l8_agent("e", (idx - 1, 1, m - idx + 1)))
            a = ag.compose_mp(a, bridge, note=tag if idx == m else "")
        return a
    if rule == "chE-Intro":
        core = ag.lemma_strategy("OCT5B", term=st.param("t"))
        return _ctx_mp(inputs[0], core, m, tag)
    if rule == "chA-Intro":
        y = st.param("y")
        if m == 0:
            a = ag.closure_chall(inputs[0], y)
            return ag.compose_mp(a, ag.lemma_strategy("OCT99"), note=tag)
        a = inputs[0] if m == 1 else \
            ag.compose_mp(inputs[0], ag.l8_agent("f", (0, m, 1)))
        a = ag.compose_mp(ag.closure_chall(a, y), ag.lemma_strategy("OCT5A"))
        a = ag.compose_trans(ag.lemma_strategy("OCT5C"), a)
        a = ag.compose_trans(a, ag.lemma_strategy("OCT99"), note=tag)
        if m == 1:
            return a
        return ag.compose_mp(a, ag.l8_agent("g", (0, m, 1)), note=tag)
    raise ProofError(f"no extraction for rule {rule!r}")


def al_extract(proof: Proof) -> ag.AgentSpec:
    """Compile a checked sequent derivation into a uniform winning agent
    for the concluding disjunction."""
    result = al_check(proof)
    if not result.ok:
        raise ProofError(f"step {result.error_step or '?'}: {result.reason}")
    built: dict[str, ag.AgentSpec] = {}
    for st in proof.steps:
        inputs = [built[pid] for pid in st.premises]
        lens = [len(proof.step(pid).conclusion) for pid in st.premises]
        built[st.id] = _extract_step(st, inputs, lens)
    return built[proof.steps[-1].id]


# --- worked sequent derivations ---


def _al(sid: str, rule: str, text: str, prems: Sequence[str] = (),
        **params) -> ProofStep:
    return step(sid, rule, fm.parse_sequent(text), prems, **params)


def al_corpus() -> tuple[tuple[str, Proof], ...]:
    """Checked derivations touching every rule at least once."""
    out = []

    out.append(("excluded_middle", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "por-Intro", "~P \\/ P", ["s1"]),
    ))))

    out.append(("won_atom", Proof((
        _al("s1", "Top", "T"),
    ))))

    out.append(("shuffle", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "Weakening", "~P , P , Q", ["s1"]),
        _al("s3", "Exchange", "~P , Q , P", ["s2"], i=2),
        _al("s4", "Exchange", "Q , ~P , P", ["s3"], i=1),
    ))))

    out.append(("pand_swap", Proof((
        _al("s1", "Identity", "~Q , Q"),
        _al("s2", "Identity", "~P , P"),
        _al("s3", "pand-Intro", "~Q , ~P , Q /\\ P", ["s1", "s2"]),
        _al("s4", "Exchange", "~P , ~Q , Q /\\ P", ["s3"], i=1),
        _al("s5", "por-Intro", "~P \\/ ~Q \\/ (Q /\\ P)", ["s4"]),
    ))))

    out.append(("chand_diagonal", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "chand-Intro", "~P , P & P", ["s1", "s1"]),
    ))))

    out.append(("chor_first", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "chor-Intro", "~P , P | Q", ["s1"], i=1),
    ))))

    out.append(("chor_second", Proof((
        _al("s1", "Identity", "~Q , Q"),
        _al("s2", "chor-Intro", "~Q , P | Q", ["s1"], i=2),
    ))))

    out.append(("pcor_merge", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "pcor-Intro", "~P , pcor P", ["s1"]),
        _al("s3", "Weakening", "~P , pcor P , pcor P", ["s2"]),
        _al("s4", "pcor-Contraction", "~P , pcor P", ["s3"]),
    ))))

    out.append(("bcor_merge", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "bcor-Intro", "~P , bcor P", ["s1"]),
        _al("s3", "Weakening", "~P , bcor P , bcor P", ["s2"]),
        _al("s4", "bcor-Contraction", "~P , bcor P", ["s3"]),
    ))))

    out.append(("prec_boxed", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "Exchange", "P , ~P", ["s1"], i=1),
        _al("s3", "pcor-Intro", "P , pcor ~P", ["s2"]),
        _al("s4", "Exchange", "pcor ~P , P", ["s3"], i=1),
        _al("s5", "prec-Intro", "pcor ~P , prec P", ["s4"]),
    ))))

    out.append(("brec_boxed", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "Exchange", "P , ~P", ["s1"], i=1),
        _al("s3", "bcor-Intro", "P , bcor ~P", ["s2"]),
        _al("s4", "Exchange", "bcor ~P , P", ["s3"], i=1),
        _al("s5", "brec-Intro", "bcor ~P , brec P", ["s4"]),
    ))))

    out.append(("prec_choice", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "Exchange", "P , ~P", ["s1"], i=1),
        _al("s3", "pcor-Intro", "P , pcor ~P", ["s2"]),
        _al("s4", "Exchange", "pcor ~P , P", ["s3"], i=1),
        _al("s5", "chand-Intro", "pcor ~P , P & P", ["s4", "s4"]),
        _al("s6", "prec-Intro", "pcor ~P , prec (P & P)", ["s5"]),
    ))))

    out.append(("prec_pair", Proof((
        _al("s1", "Identity", "~P , P"),
        _al("s2", "Identity", "~Q , Q"),
        _al("s3", "pand-Intro", "~P , ~Q , P /\\ Q", ["s1", "s2"]),
        _al("s4", "Exchange", "~P , P /\\ Q , ~Q", ["s3"], i=2),
        _al("s5", "pcor-Intro", "~P , P /\\ Q , pcor ~Q", ["s4"]),
        _al("s6", "Exchange", "~P , pcor ~Q , P /\\ Q", ["s5"], i=2),
        _al("s7", "Exchange", "pcor ~Q , ~P , P /\\ Q", ["s6"], i=1),
        _al("s8", "Exchange", "pcor ~Q , P /\\ Q , ~P", ["s7"], i=2),
        _al("s9", "pcor-Intro", "pcor ~Q , P /\\ Q , pcor ~P", ["s8"]),
        _al("s10", "Exchange", "pcor ~Q , pcor ~P , P /\\ Q", ["s9"], i=2),
        _al("s11", "prec-Intro", "pcor ~Q , pcor ~P , prec (P /\\ Q)", ["s10"]),
    ))))

    out.append(("witness_constant", Proof((
        _al("s1", "Identity", "~P(1) , P(1)"),
        _al("s2", "chE-Intro", "~P(1) , chE x. P(x)", ["s1"], t=1),
    ))))

    out.append(("covered_atom", Proof((
        _al("s1", "Top", "T"),
        _al("s2", "Weakening", "T , P(y)", ["s1"]),
        _al("s3", "chA-Intro", "T , chA x. P(x)", ["s2"], y="y"),
    ))))

    out.append(("pointwise_middle", Proof((
        _al("s1", "Identity", "~P(y) , P(y)"),
        _al("s2", "por-Intro", "~P(y) \\/ P(y)", ["s1"]),
        _al("s3", "chA-Intro", "chA x. (~P(x) \\/ P(x))", ["s2"], y="y"),
    ))))

    out.append(("mirror_choice", Proof((
        _al("s1", "Identity", "~P(y) , P(y)"),
        _al("s2", "chE-Intro", "~P(y) , chE x. P(x)", ["s1"], t="y"),
        _al("s3", "Exchange", "chE x. P(x) , ~P(y)", ["s2"], i=1),
        _al("s4", "chA-Intro", "chE x. P(x) , chA z. ~P(z)", ["s3"], y="y"),
        _al("s5", "Exchange", "chA z. ~P(z) , chE x. P(x)", ["s4"], i=1),
    ))))

    return tuple(out)
