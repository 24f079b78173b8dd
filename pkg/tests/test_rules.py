import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fttm import rules as r
from fttm.rules import (ALPHA, CTRL, WPB, Program, RuleSyntaxError, and_, add, eq, eval_rules, ge,
                        if_, interpret_on_track, let, move, ne, not_, or_, parse, serialize, set_,
                        step_count, write_program_track)
from fttm.symbols import blank

ONE_RULE = "IF EQ C.Addr 0 THEN SET C.Age ADD C.Age 1 MOVE 1 END"


def test_single_rule_program():
    (a, b), d = eval_rules(ONE_RULE, 1, (blank(Addr=0, Age=4), blank(Addr=1)), True)
    assert a["Age"] == 5 and d == 1
    (a, b), d = eval_rules(ONE_RULE, 1, (blank(Addr=3, Age=4), blank()), True)
    assert a["Age"] == 4


def test_write_program_bit_index_one():
    prog = Program.from_text("WPB MOVE -1")
    (a, _), d = eval_rules(prog, 1, (blank(Index=1), blank()), True)
    assert a["Work"] == "WPB" and d == -1
    (a, _), _ = eval_rules(prog, 1, (blank(Index=99), blank()), True)
    assert a["Work"] == r.BLANK_WORK


def test_deterministic():
    va = (blank(Addr=0, Age=1), blank(Addr=1))
    assert eval_rules(ONE_RULE, 1, va, False) == eval_rules(ONE_RULE, 1, va, False)


def test_parse_errors_at_load():
    for bad in ("IF EQ C.Addr 0 MOVE 1 END", "SET 3 4", "IF EQ C.Addr THEN END", "END", "@x"):
        with pytest.raises(RuleSyntaxError):
            Program.from_text(bad, prims={})
    with pytest.raises(KeyError):
        parse("SET C.Nope 1")


def test_move_relocates_and_seals_control():
    c = blank(Proc="Sim", Ph=3)
    r.seal(c)
    prog = Program.from_text("MOVE 1")
    (a, b), d = eval_rules(prog, 1, (c, blank()), True)
    assert not a["Head"] and r.has_control(b) and b["Ph"] == 3
    (a, b), d = eval_rules(Program.from_text("MOVE -1"), 1, (c, blank()), True)
    assert r.has_control(a) and not b["Head"]
    junk = dict(c, Ph=4)
    assert r.control_side(junk, blank()) is None


def test_level_parameter_is_readable():
    prog = Program([if_(ge("#k", 2), [set_("C.Age", 7)], [set_("C.Age", 1)]), move(1)])
    assert eval_rules(prog, 2, (blank(), blank()), True)[0][0]["Age"] == 7
    assert eval_rules(prog, 1, (blank(), blank()), True)[0][0]["Age"] == 1


# ------------------------------------------------------------------ random programs

FIELDS = ["Addr", "Age", "Sweep", "Pass", "Index", "Dir"]
VALUES = [None, 0, 1, 2, -1, True, "x"]


def exprs():
    base = st.one_of(st.sampled_from(VALUES).map(r.lit),
                     st.builds(lambda s, f: r.ref(s + "." + f), st.sampled_from("LRCO"), st.sampled_from(FIELDS)),
                     st.just(("param", "k")), st.just(("var", "v")))
    return st.recursive(base, lambda c: st.builds(lambda o, a, b: (o, a, b), st.sampled_from(["add", "sub"]), c, c),
                        max_leaves=4)


def conds():
    base = st.one_of(st.builds(lambda o, a, b: (o, a, b), st.sampled_from(["eq", "ne", "lt", "le", "gt", "ge"]),
                               exprs(), exprs()),
                     st.just(ALPHA), st.just(CTRL), st.builds(lambda e: ("is", e), exprs()))
    return st.recursive(base, lambda c: st.one_of(st.builds(lambda a, b: ("and", a, b), c, c),
                                                   st.builds(lambda a, b: ("or", a, b), c, c),
                                                   st.builds(lambda a: ("not", a), c)), max_leaves=4)


def stmts():
    simple = st.one_of(
        st.builds(lambda s, f, e: ("set", r.ref(s + "." + f), e), st.sampled_from("LRCO"), st.sampled_from(FIELDS), exprs()),
        st.builds(lambda e: ("let", "v", e), exprs()),
        st.just(WPB),
        st.builds(lambda d: ("move", r.lit(d)), st.sampled_from([-1, 1])))
    return st.recursive(simple, lambda c: st.builds(
        lambda cd, t, e: ("if", cd, tuple(t), None if e is None else tuple(e)),
        conds(), st.lists(c, max_size=3), st.one_of(st.none(), st.lists(c, max_size=3))), max_leaves=12)


def cell_from(rng):
    c = blank(**{f: rng.choice(VALUES) for f in FIELDS})
    if rng.random() < 0.3:
        c["Proc"] = "Sim"
        r.seal(c)
    return c


@given(st.lists(stmts(), max_size=6), st.integers(0, 2 ** 20), st.integers(1, 3), st.booleans())
@settings(max_examples=150, deadline=None)
def test_compiled_equals_streaming_and_roundtrip(body, seed, k, alpha):
    prog = Program(body)
    assert Program.from_text(prog.text) == prog
    assert parse(serialize(prog.stmts)) == prog.stmts
    rng = random.Random(seed)
    va = (cell_from(rng), cell_from(rng))
    assert eval_rules(prog, k, va, alpha) == eval_rules(prog, k, va, alpha, route="stream")


@given(st.lists(stmts(), max_size=5), st.integers(0, 2 ** 20), st.integers(1, 3), st.sampled_from([None, 3, 7]))
@settings(max_examples=80, deadline=None)
def test_interpret_on_track_is_next_level_eval(body, seed, k, nsym):
    prog = Program(body, nsym=nsym)
    rng = random.Random(seed)
    va = (cell_from(rng), cell_from(rng))
    for alpha in (True, False):
        assert interpret_on_track(prog, k, va, alpha) == eval_rules(prog, k + 1, va, alpha)


def test_small_alphabet_exhaustive_fixed_point():
    prog = Program([if_(eq("#k", 2), [set_("C.Age", add("C.Age", 1))]),
                    if_(and_(ALPHA, ne("L.Addr", "R.Addr")), [move(-1)]), move(1)])
    for a in (0, 1, None):
        for b in (0, 1, None):
            va = (blank(Addr=a, Age=a), blank(Addr=b))
            for alpha in (True, False):
                assert interpret_on_track(prog, 1, va, alpha) == eval_rules(prog, 2, va, alpha)


def test_track_layout_and_sweep_count():
    one = Program.from_text("WPB")
    track, sweeps = write_program_track(one, 1, (blank(), blank()), True)
    assert track[0] == "WPB" and sweeps == 1 == len(one)
    prog = Program.from_text(ONE_RULE)
    track, sweeps = write_program_track(prog, 2, (blank(), blank()), False)
    assert sweeps == len(prog.tokens) and track[sweeps] == "000" and track[-1] is False


def test_step_count():
    assert step_count("MOVE 1", 1, (blank(), blank())) == 2
    n = step_count(ONE_RULE, 1, (blank(Addr=0), blank()))
    assert n == len(ONE_RULE.split()) - 1   # stops at the MOVE operand; END is never read
    assert step_count(ONE_RULE, 1, (blank(Addr=5), blank())) == len(ONE_RULE.split())


def test_builder_helpers():
    p = Program([let("$x", 3), if_(or_(not_(CTRL), eq("$x", 3)), [move(-1)], [move(1)])])
    assert p.text == "LET $x 3 IF OR NOT CTRL EQ $x 3 THEN MOVE -1 ELSE MOVE 1 END"
