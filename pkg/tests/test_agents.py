"""Machine strategies: scripted play, exhaustive environments, the packaged
lemma strategies, routing boards, closures, and composition."""

from __future__ import annotations

import random

import pytest

from gamesem import agents as ag
from gamesem import formulas as fm
from gamesem import games as gm
from gamesem import interps as itp
from gamesem.runs import Labmove, Player, negate_run, project_prefix

from genexpr import gen_expr

T = Player.MACHINE
B = Player.ENVIRONMENT


def branchy() -> gm.Fin:
    return gm.Fin(gm.fg("B", {
        "T:m": gm.fg("T", {"B:r": gm.fg("B", {"T:s": gm.fg("T")})}),
        "B:x": gm.fg("B", {"T:y": gm.fg("T")}),
    }))


def verify(spec, text, count=3, depth=3, seed=0, rec_bound=2, domain=3):
    f = fm.parse(text)
    interps = itp.enumerate_interps(f, domain=domain, seed=seed, count=count)
    rep = ag.verify_uniform(spec, f, interps, depth=depth, rec_bound=rec_bound)
    assert rep.clean, (
        text,
        [(i, [lam.text() for lam in t.run], t.note)
         for i, t in (rep.losses + rep.undecided)[:3]],
    )
    return rep


class TestRunPlay:
    def test_ccs_mirrors_and_wins(self):
        g = gm.Imp(branchy(), branchy())
        e = gm.Valuation()
        t = ag.run_play(ag.ccs(), ag.Script(["1.m", "2.r", "1.s"]), g, e)
        assert t.outcome is T
        assert len(t.run) == 6
        left = project_prefix(t.run, "1.")
        right = project_prefix(t.run, "2.")
        assert negate_run(left) == right

    def test_empty_script_grants_twice_then_scores(self):
        t = ag.run_play(ag.const_win(), ag.Script([]), gm.elem_top(), gm.Valuation())
        assert t.outcome is T
        assert t.run == ()
        assert t.permissions == 2

    def test_machine_illegal_move_loses(self):
        class Blurter(ag.AgentInstance):
            def step(self):
                return ag.MakeMove("7")

        t = ag.run_play(Blurter(), ag.Script([]), gm.elem_top(), gm.Valuation())
        assert t.outcome is B
        assert t.run == (Labmove(T, "7"),)
        assert t.note

    def test_env_illegal_move_loses(self):
        t = ag.run_play(ag.ccs(), ag.Script(["junk"]), gm.elem_top(), gm.Valuation())
        assert t.outcome is T
        assert t.run == (Labmove(B, "junk"),)
        assert t.note

    def test_budget_exhaustion_is_undecided(self):
        g = gm.Imp(branchy(), branchy())
        t = ag.run_play(ag.ccs(), ag.Script(["2.x"]), g, gm.Valuation(), budget=1)
        assert t.outcome is None

    def test_env_moves_only_after_permission(self):
        g = gm.Imp(branchy(), branchy())
        t = ag.run_play(ag.ccs(), ag.Script(["1.m", "2.r"]), g, gm.Valuation())
        env_positions = [i for i, lam in enumerate(t.run) if lam.player is B]
        assert env_positions
        for i in env_positions:
            assert i in t.perm_marks

    def test_wait_entries_delay_the_move(self):
        g = gm.Imp(branchy(), branchy())
        t = ag.run_play(ag.ccs(), ag.Script([(2, "2.x")]), g, gm.Valuation())
        assert t.outcome is T
        assert Labmove(B, "2.x") in t.run
        assert t.permissions >= 3


class TestCopycat:
    @pytest.mark.parametrize("seed", range(5))
    def test_material_implication_exhaustively(self, seed):
        rng = random.Random(seed)
        a = gen_expr(rng, depth=2)
        e = gm.Valuation()
        rep = ag.explore_exhaustive(ag.ccs(), gm.Imp(a, a), e, depth=4)
        assert rep.plays
        assert not rep.losses() and not rep.undecided()

    @pytest.mark.parametrize("seed", range(3))
    def test_excluded_middle_exhaustively(self, seed):
        rng = random.Random(100 + seed)
        a = gen_expr(rng, depth=2)
        e = gm.Valuation()
        rep = ag.explore_exhaustive(ag.ccs(), gm.Por((gm.Neg(a), a)), e, depth=4)
        assert not rep.losses() and not rep.undecided()

    def test_remap_swaps_components(self):
        a, b = branchy(), gm.Neg(branchy())
        g = gm.Imp(gm.Pand((a, b)), gm.Pand((b, a)))
        spec = ag.ccs_remap((("1.1", "2.2"), ("1.2", "2.1")))
        rep = ag.explore_exhaustive(spec, g, gm.Valuation(), depth=4)
        assert rep.plays
        assert not rep.losses() and not rep.undecided()

    def test_plain_ccs_fails_the_swapped_game(self):
        a, b = branchy(), gm.Neg(branchy())
        g = gm.Imp(gm.Pand((a, b)), gm.Pand((b, a)))
        rep = ag.explore_exhaustive(ag.ccs(), g, gm.Valuation(), depth=4)
        assert rep.losses()


class TestLemmaStrategies:
    def test_parallel_corecurrence_intro(self):
        verify(ag.lemma_strategy("PL6A"), "P -> pcor P")

    def test_branching_corecurrence_intro(self):
        verify(ag.lemma_strategy("L6A"), "P -> bcor P")

    def test_parallel_recurrence_distribution(self):
        verify(ag.lemma_strategy("PL4"), "prec (P -> Q) -> (prec P -> prec Q)")

    def test_branching_recurrence_distribution(self):
        verify(ag.lemma_strategy("L4"), "brec (P -> Q) -> (brec P -> brec Q)")

    def test_parallel_corecurrence_over_disjunction(self):
        verify(ag.lemma_strategy("PL4A", n=2),
               "pcor (P \\/ Q) -> pcor P \\/ pcor Q")

    def test_branching_corecurrence_over_disjunction(self):
        verify(ag.lemma_strategy("L4A", n=2),
               "bcor (P \\/ Q) -> bcor P \\/ bcor Q")

    def test_parallel_corecurrence_contraction(self):
        verify(ag.lemma_strategy("PL6C"), "pcor P \\/ pcor P -> pcor P")

    def test_branching_corecurrence_contraction(self):
        verify(ag.lemma_strategy("L6C"), "bcor P \\/ bcor P -> bcor P")

    def test_parallel_corecurrence_flattening(self):
        verify(ag.lemma_strategy("PL5"), "pcor pcor P -> pcor P")

    def test_branching_corecurrence_flattening(self):
        verify(ag.lemma_strategy("L5"), "bcor bcor P -> bcor P")

    def test_choice_quantifier_distribution(self):
        verify(ag.lemma_strategy("OCT5A"),
               "(chA x.((P(x)) -> (Q(x)))) -> ((chA x.P(x)) -> (chA x.Q(x)))")

    def test_instantiation(self):
        verify(ag.lemma_strategy("OCT5B", term=1), "(P(1)) -> (chE x.P(x))")

    def test_vacuous_generalization(self):
        verify(ag.lemma_strategy("OCT5C"), "P -> chA x.P")

    def test_bound_variable_renaming(self):
        verify(ag.lemma_strategy("OCT99"), "(chA y.P(y)) -> (chA x.P(x))")

    def test_unknown_kind_rejected(self):
        with pytest.raises(Exception):
            ag.lemma_strategy("PL99")
        with pytest.raises(Exception):
            ag.lemma_strategy("PL4A")
        with pytest.raises(Exception):
            ag.lemma_strategy("OCT5B")


def flattening_game() -> gm.GameExpr:
    inner = gm.Fin(gm.fg("B", {"T:m": gm.fg("T")}))
    return gm.Imp(gm.BCor(gm.BCor(inner)), gm.BCor(inner))


SCENARIO = ["1.:", "1.0.:", "1.0:", "1.01.0:"]
SCENARIO_REPLIES = ["2.:", "2.0:", "2.00:", "2.01:", "2.001:"]


def drive(spec, env_moves, e=None):
    """Raw bookkeeping probe: feed environment moves, collect emissions."""
    inst = ag.instantiate(spec, e or gm.Valuation())
    out = []
    for m in env_moves:
        inst.observe(Labmove(B, m))
        while True:
            act = inst.step()
            if isinstance(act, ag.MakeMove):
                out.append(act.move)
                inst.observe(Labmove(T, act.move))
            else:
                break
    return out


class TestFlatteningBookkeeping:
    def test_scenario_under_real_legality(self):
        t = ag.run_play(ag.lemma_strategy("L5"), ag.Script(SCENARIO),
                        flattening_game(), gm.Valuation(), budget=400)
        assert t.outcome is T
        machine = [lam.move for lam in t.run if lam.player is T]
        assert machine == SCENARIO_REPLIES

    def test_fanout_after_scenario(self):
        out = drive(ag.lemma_strategy("L5"), SCENARIO + ["1.00..m"])
        assert out == SCENARIO_REPLIES + ["2.000.m", "2.010.m"]

    def test_consequent_moves_fan_back(self):
        out = drive(ag.lemma_strategy("L5"), SCENARIO + ["2.0.m"])
        assert out == SCENARIO_REPLIES + [
            "1.00.0.m", "1.01.00.m", "1.01.01.m", "1.00.1.m", "1.01.1.m",
        ]

    def test_replication_at_fresh_leaf_only(self):
        out = drive(ag.lemma_strategy("L5"), ["1.:", "1.1:"])
        assert out == ["2.:", "2.1:"]


class TestRoutingBoards:
    def test_identity(self):
        verify(ag.l8_agent("a"), "~P \\/ P")

    def test_commutativity(self):
        verify(ag.l8_agent("b"), "(P \\/ Q) -> (Q \\/ P)")

    def test_chaining(self):
        verify(ag.l8_agent("c"), "((P -> Q) /\\ (Q -> R)) -> (P -> R)")

    def test_conjunction_collection(self):
        verify(ag.l8_agent("d", (1, 1)),
               "((A \\/ P) /\\ (B \\/ Q)) -> (A \\/ B \\/ (P /\\ Q))")
        verify(ag.l8_agent("d", (0, 2)),
               "(P /\\ (B1 \\/ B2 \\/ Q)) -> (B1 \\/ B2 \\/ (P /\\ Q))",
               count=2)

    def test_contextual_application(self):
        verify(ag.l8_agent("e", (0, 1, 0)), "(P -> Q) -> (P -> Q)")
        verify(ag.l8_agent("e", (1, 2, 1)),
               "((P1 -> Q1) /\\ (P2 -> Q2))"
               " -> ((A \\/ P1 \\/ P2 \\/ B) -> (A \\/ Q1 \\/ Q2 \\/ B))",
               count=2, depth=2)

    def test_grouping(self):
        verify(ag.l8_agent("f", (1, 2, 1)),
               "(A \\/ P \\/ Q \\/ B) -> (A \\/ (P \\/ Q) \\/ B)", count=2)

    def test_ungrouping(self):
        verify(ag.l8_agent("g", (1, 2, 1)),
               "(A \\/ (P \\/ Q) \\/ B) -> (A \\/ P \\/ Q \\/ B)", count=2)

    def test_currying(self):
        verify(ag.l8_agent("h", (2,)),
               "((P /\\ Q) -> R) -> (P -> (Q -> R))")
        verify(ag.l8_agent("h", (1,)), "(P -> R) -> (P -> R)")

    def test_weakening(self):
        verify(ag.l8_agent("i", (1,)), "Q -> (Q \\/ P)")
        verify(ag.l8_agent("i", (2,)), "(Q1 \\/ Q2) -> (Q1 \\/ Q2 \\/ P)")

    def test_choice_injection(self):
        verify(ag.l8_agent("j", (2, 1)), "P -> (P | Q)")
        verify(ag.l8_agent("j", (3, 2)), "Q -> (P | Q | R)")

    def test_choice_pairing(self):
        verify(ag.l8_agent("k", (1, 2)),
               "((A \\/ P) /\\ (A \\/ Q)) -> (A \\/ (P & Q))", count=2)
        verify(ag.l8_agent("k", (0, 2)), "(P /\\ Q) -> (P & Q)")

    def test_bad_shapes_rejected(self):
        for schema, shape in (("a", (1,)), ("d", ()), ("e", (1,)),
                              ("f", (1, 0, 1)), ("h", (0,)), ("j", (2, 3)),
                              ("zz", ())):
            with pytest.raises(Exception):
                ag.l8_agent(schema, shape)


class TestBlindness:
    def test_transcripts_ignore_win_tables(self):
        f = fm.parse("prec (P -> Q) -> (prec P -> prec Q)")

        def shaped(w0, w1, w2):
            return gm.Fin(gm.fg(w0, {"B:u": gm.fg(w1), "T:v": gm.fg(w2)}))

        traces = []
        for wp, wq in ((("B", "T", "B"), ("T", "B", "T")),
                       (("T", "T", "T"), ("B", "B", "B")),
                       (("B", "B", "T"), ("T", "T", "B"))):
            interp = itp.interp_of(3, {
                "P/0": ((), shaped(*wp)),
                "Q/0": ((), shaped(*wq)),
            })
            g = itp.apply_interp(interp, f)
            t = ag.run_play(ag.lemma_strategy("PL4"),
                            ag.Script(["2.2.1.u", "1.2.2.v"]),
                            g, interp.valuation())
            assert t.note == ""
            traces.append((t.run, t.steps, t.permissions))
        assert traces[0] == traces[1] == traces[2]
        assert len(traces[0][0]) == 4


class SquareSolver(ag.AgentInstance):
    """Answers a number request with its square."""

    def __init__(self):
        self.queue = []

    def observe(self, lam):
        if lam.player is B:
            self.queue.append(str(int(lam.move) ** 2))

    def step(self):
        if self.queue:
            return ag.MakeMove(self.queue.pop(0))
        return ag.GrantPermission()


ag.register_agent_kind("Square_solver", lambda spec: SquareSolver())


def squares_game() -> gm.GameExpr:
    table = gm.TruthTable(2, frozenset((i, i * i) for i in range(1, 4)))
    body = gm.ChAll("x", gm.ChEx("y", gm.Elem("sq", ("x", "y"), table)))
    return gm.PRec(body)


class TestClosures:
    def test_conjunctive_closure_spawns_per_index(self):
        spec = ag.closure_prec(ag.AgentSpec("Square_solver", (), ()))
        e = gm.Valuation(domain=9)
        t = ag.run_play(spec, ag.Script(["1.3", "2.1"]), squares_game(), e)
        assert t.outcome is T
        assert t.run == (Labmove(B, "1.3"), Labmove(T, "1.9"),
                         Labmove(B, "2.1"), Labmove(T, "2.1"))

    def test_conjunctive_closure_respects_bound(self):
        spec = ag.closure_prec(ag.AgentSpec("Square_solver", (), ()), bound=1)
        e = gm.Valuation(domain=9)
        t = ag.run_play(spec, ag.Script(["2.3"]), squares_game(), e)
        assert t.outcome is B
        assert Labmove(T, "2.9") not in t.run

    def test_branching_closure_forks_on_replication(self):
        a = branchy()
        g = gm.BRec(gm.Por((gm.Neg(a), a)))
        rep = ag.explore_exhaustive(ag.closure_brec(ag.ccs()), g,
                                    gm.Valuation(), depth=4, rec_bound=2)
        assert rep.plays
        assert not rep.losses() and not rep.undecided()

    def test_branching_closure_keeps_projections_copycat(self):
        a = branchy()
        g = gm.BRec(gm.Por((gm.Neg(a), a)))
        script = ag.Script([":", "0.2.x", "1.1.m"])
        t = ag.run_play(ag.closure_brec(ag.ccs()), script, g, gm.Valuation())
        assert t.outcome is T
        assert Labmove(T, "0.1.x") in t.run
        assert Labmove(T, "1.2.m") in t.run

    def test_constant_closure_binds_the_choice(self):
        verify(ag.closure_chall(ag.ccs(), "x"), "chA x.((P(x)) -> (P(x)))")

    def test_constant_closure_rebinding_feeds_terms(self):
        verify(ag.closure_chall(ag.lemma_strategy("OCT5B", term="x"), "x"),
               "chA x.((P(x)) -> (chE y.P(y)))")


class TestComposition:
    def test_modus_ponens(self):
        spec = ag.compose_mp(ag.l8_agent("a"), ag.l8_agent("i", (1,)))
        verify(spec, "(~P \\/ P) \\/ R")

    def test_generalized_modus_ponens(self):
        spec = ag.compose_gmp([ag.l8_agent("a"), ag.l8_agent("a")],
                              ag.l8_agent("d", (0, 0)))
        verify(spec, "(~P \\/ P) /\\ (~Q \\/ Q)")

    def test_transitivity(self):
        spec = ag.compose_trans(ag.l8_agent("b"), ag.l8_agent("b"))
        verify(spec, "(P \\/ Q) -> (P \\/ Q)")

    def test_transitivity_relays_through_the_middle(self):
        g = gm.Imp(branchy(), branchy())
        spec = ag.compose_trans(ag.ccs(), ag.ccs())
        t = ag.run_play(spec, ag.Script(["1.m", "2.r"]), g, gm.Valuation())
        assert t.outcome is T
        assert [lam.move for lam in t.run if lam.player is T] == ["2.m", "1.r"]

    def test_quiet_composite_grants(self):
        spec = ag.compose_trans(ag.ccs(), ag.ccs())
        t = ag.run_play(spec, ag.Script([]), gm.Imp(branchy(), branchy()),
                        gm.Valuation())
        assert t.outcome is T
        assert t.run == ()
        assert t.permissions == 2


class TestSerialization:
    def test_spec_round_trip(self):
        spec = ag.compose_mp(
            ag.closure_prec(ag.lemma_strategy("PL4A", n=3), bound=2),
            ag.l8_agent("e", (1, 2, 0), note="context step"),
        )
        data = ag.spec_to_json(spec)
        assert ag.spec_from_json(data) == spec

    def test_spec_json_is_plain(self):
        import json

        spec = ag.closure_chall(ag.lemma_strategy("OCT5B", term="x"), "x")
        text = json.dumps(ag.spec_to_json(spec))
        assert ag.spec_from_json(json.loads(text)) == spec

    def test_transcript_round_trip(self):
        g = gm.Imp(branchy(), branchy())
        t = ag.run_play(ag.ccs(), ag.Script(["2.x", "1.m"]), g, gm.Valuation())
        data = ag.transcript_to_json(t)
        assert set(data) == {"run", "outcome", "permissions", "steps"}
        assert data["outcome"] == "T"
        back = ag.transcript_from_json(data)
        assert back.run == t.run
        assert back.outcome is t.outcome
        assert back.steps == t.steps

    def test_undecided_transcript_round_trip(self):
        t = ag.Transcript((), 5, 1, None)
        data = ag.transcript_to_json(t)
        assert data["outcome"] == "undecided"
        assert ag.transcript_from_json(data).outcome is None
