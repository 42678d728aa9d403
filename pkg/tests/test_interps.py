import json

import pytest

from gamesem import games as gm
from gamesem.errors import NotAdmissible
from gamesem.formulas import parse
from gamesem.interps import (
    Interpretation,
    LetterInterp,
    admissible_for,
    apply_interp,
    enumerate_interps,
    interp_from_json,
    interp_of,
    interp_to_json,
    is_elementary_expr,
)


def sq_table(domain=9):
    rows = frozenset(
        (y, x) for x in range(1, domain + 1) for y in range(1, domain + 1)
        if y == x * x
    )
    return gm.TruthTable(2, rows)


def square_interp(domain=9):
    return interp_of(
        domain,
        {
            "P/1": (
                ("z1",),
                gm.ChEx("u", gm.Elem("sq", ("u", "z1"), sq_table(domain))),
            ),
            "p/2": (("z1", "z2"), gm.Elem("sq", ("z1", "z2"), sq_table(domain))),
        },
    )


class TestApply:
    def test_atoms_substitute_the_tuple(self):
        interp = square_interp()
        got = apply_interp(interp, parse("P(3)"))
        assert got == gm.ChEx("u", gm.Elem("sq", ("u", 3), sq_table()))
        got = apply_interp(interp, parse("p(y,x)"))
        assert got == gm.Elem("sq", ("y", "x"), sq_table())

    def test_connectives_are_homomorphic(self):
        interp = square_interp()
        got = apply_interp(interp, parse("chA x. (p(x,x) -> P(x))"))
        want = gm.ChAll(
            "x",
            gm.Imp(
                gm.Elem("sq", ("x", "x"), sq_table()),
                gm.ChEx("u", gm.Elem("sq", ("u", "x"), sq_table())),
            ),
        )
        assert got == want

    def test_logical_atoms(self):
        interp = Interpretation(3)
        assert apply_interp(interp, parse("T")) == gm.elem_top()
        assert apply_interp(interp, parse("~F")) == gm.Neg(gm.elem_bot())

    def test_missing_letter(self):
        with pytest.raises(NotAdmissible):
            apply_interp(Interpretation(3), parse("Q"))

    def test_recurrences(self):
        interp = square_interp()
        got = apply_interp(interp, parse("brec P(1) | prec p(1,1)"))
        assert isinstance(got, gm.Chor)
        assert isinstance(got.items[0], gm.BRec)
        assert isinstance(got.items[1], gm.PRec)


class TestAdmissibility:
    def test_square_interp_is_admissible(self):
        report = admissible_for(square_interp(), parse("chA x. (p(x,x) -> P(x))"))
        assert report.admissible
        assert report.problems == ()

    def test_missing_letter_reported(self):
        report = admissible_for(Interpretation(3), parse("Q(x)"))
        assert not report.admissible
        assert "no template for Q/1" in report.problems

    def test_template_with_stray_variable(self):
        interp = interp_of(
            3,
            {"P/1": (("z1",), gm.Elem("e", ("z1", "w"), sq_table(3)))},
        )
        report = admissible_for(interp, parse("P(x)"))
        assert not report.admissible
        assert any("depends on" in p for p in report.problems)

    def test_elementary_letter_needs_elementary_template(self):
        interp = interp_of(
            3,
            {"p/0": ((), gm.Chor((gm.elem_top(), gm.elem_bot())))},
        )
        report = admissible_for(interp, parse("p"))
        assert not report.admissible
        assert any("non-elementary" in p for p in report.problems)

    def test_blind_over_structure_sensitive_template(self):
        cases = tuple(
            (c, gm.fg("T") if c == 1 else gm.fg("B", {"T:m": gm.fg("T")}))
            for c in (1, 2, 3)
        )
        interp = interp_of(3, {"P/1": (("z1",), gm.Switch("z1", cases))})
        report = admissible_for(interp, parse("blA x. P(x)"))
        assert not report.admissible

    def test_blind_over_elementary_is_fine(self):
        odd = gm.TruthTable(1, frozenset({(1,), (3,)}))
        interp = interp_of(3, {"p/1": (("z1",), gm.Elem("p", ("z1",), odd))})
        report = admissible_for(interp, parse("blA x. p(x)"))
        assert report.admissible

    def test_is_elementary_expr(self):
        assert is_elementary_expr(gm.elem_top())
        assert is_elementary_expr(gm.Neg(gm.Por((gm.elem_top(), gm.elem_bot()))))
        assert not is_elementary_expr(gm.Chor((gm.elem_top(), gm.elem_bot())))
        assert not is_elementary_expr(gm.fg("T", {"T:a": gm.fg("B")}))


class TestEnumeration:
    def test_deterministic(self):
        f = parse("chA x. (P(x) -> P(x) & q(x))")
        a = enumerate_interps(f, domain=3, seed=5, count=6)
        b = enumerate_interps(f, domain=3, seed=5, count=6)
        assert [interp_to_json(i) for i in a] == [interp_to_json(i) for i in b]
        assert len(a) == 6

    def test_different_seeds_differ(self):
        f = parse("P(x) \\/ ~P(x)")
        a = enumerate_interps(f, seed=1, count=4)
        b = enumerate_interps(f, seed=2, count=4)
        assert [interp_to_json(i) for i in a] != [interp_to_json(i) for i in b]

    def test_all_admissible(self):
        f = parse("blA x. (p(x) -> P(x) | Q)")
        for interp in enumerate_interps(f, domain=3, seed=3, count=8):
            assert admissible_for(interp, f).admissible

    def test_low_arity_elementary_letters_get_all_tables(self):
        f = parse("q")
        interps = enumerate_interps(f, domain=3, seed=0, count=2)
        tables = set()
        for i in interps:
            li = i.lookup("q", 0)
            tables.add(li.template.table.rows)
        assert len(tables) == 2

    def test_interps_make_playable_games(self):
        f = parse("chA x. (P(x) -> P(x))")
        e = gm.Valuation(domain=3)
        for interp in enumerate_interps(f, domain=3, seed=9, count=5):
            g = apply_interp(interp, f)
            moves = gm.legal_moves(g, e, gm.EMPTY_RUN, gm.Player.ENVIRONMENT)
            assert moves


class TestJson:
    def test_round_trip(self):
        interp = square_interp()
        blob = json.dumps(interp_to_json(interp), sort_keys=True)
        back = interp_from_json(json.loads(blob))
        assert back == interp
        assert json.dumps(interp_to_json(back), sort_keys=True) == blob

    def test_enumerated_round_trip(self):
        f = parse("P(x) & q(x,y)")
        for interp in enumerate_interps(f, seed=4, count=3):
            back = interp_from_json(json.loads(json.dumps(interp_to_json(interp))))
            assert back == interp
