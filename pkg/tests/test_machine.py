import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fttm import gmachine as gm
from fttm import machine as mc
from fttm import motion
from fttm import stages as sg
from fttm.rules import Context, eval_rules, has_control, seal
from fttm.symbols import blank


@pytest.fixture(scope="module")
def clean_run():
    r = mc.Runner(record=True)
    snaps = [(0, r.cfg.copy(), r.pa)]

    def on(rr):
        if rr.events and rr.events[-1].t == rr.t and rr.events[-1].name == "wp_end":
            snaps.append((rr.t, rr.cfg.copy(), rr.pa))
    res = r.run(21000, until_settled=False, on_step=on)
    return r, res, snaps


def test_program_file_matches_builder():
    assert mc.load_program() == mc.build_program()
    assert mc.load_program().text == mc.build_program().text
    assert len(mc.build_program()) == mc.NSYM


def test_initial_config_decodes_to_level2(clean_run):
    r, _, snaps = clean_run
    spec = mc.make_spec()
    cfg1, top = mc.initial_config(3, spec)
    dec = mc.decode_level2(cfg1, spec, top.cur[0])
    for p, s in top.tape.items():
        got = dec.tape.get(p)
        assert {k: v for k, v in got.items() if k not in ("Head", "Chk")} == \
            {k: v for k, v in s.items() if k not in ("Head", "Chk")}
    assert has_control(cfg1.tape.get(top.cur[0]))


def test_noise_free_output_matches_native_g(clean_run):
    r, res, _ = clean_run
    assert r.output(0) == gm.g_oracle(3) == "S1111"
    assert res.faults == 0
    assert res.work_periods == 2


def test_work_periods_alternate_direction(clean_run):
    r, _, _ = clean_run
    ends = [e.args[0] for e in r.events if e.name == "wp_end"]
    assert ends == [32, 36]
    assert [pa for _, pa in r.pa_log] == [-16, 0, -16]


def test_runner_is_deterministic():
    a = mc.Runner()
    b = mc.Runner()
    ra = a.run(12000, schedule=[4000], seed=5, burst=2)
    rb = b.run(12000, schedule=[4000], seed=5, burst=2)
    assert ra == rb
    assert a.cfg == b.cfg
    assert a.events == b.events


def test_level2_payload_hook_is_g():
    # one step of R at level 2 on the booting pair runs G to halt and writes the output
    top = mc.level2_config(3)
    act = eval_rules(mc.build_program(), 2, top.pair(), top.adjacent(), None, mc.level2_hooks())
    (a, b), d = act
    assert b["Output"] == gm.g_oracle(3)
    assert d == 1
    # the second route interprets the same program from its token stream
    act2 = eval_rules(mc.build_program(), 2, top.pair(), top.adjacent(), None, mc.level2_hooks(),
                      route="stream")
    assert act2 == act


def test_annotation_has_no_deviations_when_noise_free(clean_run):
    from fttm.analysis import deviations
    r = mc.Runner()
    worst = 0
    for _ in range(60):
        r.run(r.t + 157, until_settled=False)
        pa, s, f = r.annotation()
        worst = max(worst, len(deviations(r.cfg, (pa, s, f), pa - 48, pa + 80)))
    assert worst == 0


def _survey(r, origin, radius=24):
    return [(off, motion._summary(r.cfg.tape.get(origin + off))) for off in range(-radius, radius)]


def test_heal_plan_on_healthy_area_costs_nothing():
    r = mc.Runner()
    r.run(2500, until_settled=False)
    pos, _ = r.control()
    plan = motion.heal_plan(_survey(r, pos), r.spec)
    assert plan[0] == "heal"
    assert plan[5] == 0 and plan[6] == ()
    assert pos + plan[1] == r.pa


def test_heal_plan_rebuilds_around_the_pair_when_damage_is_wide():
    r = mc.Runner()
    r.run(2500, until_settled=False)
    pos, _ = r.control()
    for p in range(pos - 14, pos - 2):
        c = dict(r.cfg.tape.get(p))
        c["Addr"] = (c["Addr"] + 7) % sg.Q
        c["Age"] = (c["Age"] or 0) + 5
        r.cfg.tape.set(p, c)
    origin = pos - 20           # a healer displaced from the pair
    plan = motion.heal_plan(_survey(r, origin), r.spec)
    assert plan[0] == "rebuild"
    assert origin + plan[1] == r.pa + sg.Q


def test_single_fault_is_healed():
    r = mc.Runner()
    res = r.run(60000, schedule=[3000], seed=11, burst=1)
    assert res.output == "S1111" and res.stopped == "settled"
    assert any(e.name == "wake" or e.name == "alarm" for e in r.events)


def test_rebuild_recovers_wide_damage():
    r = mc.Runner()
    r.run(3000, until_settled=False)
    pos, _ = r.control()
    for p in range(pos - 12, pos - 2):
        c = dict(r.cfg.tape.get(p))
        c["Addr"] = (c["Addr"] + 7) % sg.Q
        c["Age"] = (c["Age"] or 0) + 5
        r.cfg.tape.set(p, c)
    res = r.run(60000)
    names = [e.name for e in r.events]
    assert "rebuild" in names and "rebuilt" in names
    assert res.output == "S1111"


def test_colony_compliance_counts_pad_errors():
    spec = mc.make_spec()
    word = list(spec.code.encode(blank(Kind="Member0", Addr=3)))
    assert motion.colony_compliant(spec, word)
    word[0] = ("junk", 1)                      # a pad cell
    assert motion.colony_compliant(spec, word)
    bad = [("junk", i) for i in range(sg.Q)]
    assert not motion.colony_compliant(spec, bad)
    assert not motion.colony_compliant(spec, word[:-1])


# ------------------------------------------------------------------ turn discipline

def _two_cells(mv, other_pass):
    c = blank(Kind="Stem")
    motion.reset_control(c, Proc="Sim", Mv=mv, Pst=0)
    o = blank(Kind="Stem", Pass=other_pass)
    seal(c)
    return (c, o) if mv == 1 else (o, c)


@pytest.mark.parametrize("mv", [1, -1])
def test_turn_sets_pass_and_repeat_turn_is_refused(mv):
    spec = motion.Spec(code=None)
    ctx = Context(_two_cells(mv, 0), 1, True)
    assert motion.go(ctx, spec, -mv) == 0
    assert ctx.cell("O")["Pass"] == mv and ctx.cell("C")["Mv"] == -mv
    ctx = Context(_two_cells(mv, mv), 1, True)
    assert motion.go(ctx, spec, -mv) == mv          # postponed: keeps going
    assert ctx.cell("C")["Pst"] == 1 and ctx.vars["d"] == mv


def test_unfeathered_variant_turns_unconditionally():
    spec = motion.Spec(code=None, feather=False)
    ctx = Context(_two_cells(1, 1), 1, True)
    assert motion.go(ctx, spec, -1) == 0
    assert ctx.cell("O")["Pass"] == 1


def test_starvation_after_too_many_refusals():
    spec = motion.Spec(code=None, Delta=1)
    cells = _two_cells(1, 1)
    cells[0]["Pst"] = 3
    seal(cells[0])
    with pytest.raises(motion.Starve):
        motion.go(Context(cells, 1, True), spec, -1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([1, -1]), min_size=1, max_size=60))
def test_want_and_arrived_agree(moves):
    # walking by `want` toward a random target always arrives, from any start
    rng = random.Random(len(moves))
    c, mv = moves[0] * 5, moves[-1]
    T, a = rng.randint(-8, 8), rng.choice((None, 1, -1))
    for _ in range(100):
        if motion.arrived(c, mv, T, a):
            break
        w = motion.want(c, mv, T, a)
        if w == mv:
            c += mv
        else:
            mv = -mv
    assert motion.arrived(c, mv, T, a)
