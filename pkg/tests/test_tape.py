import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fttm.symbols import BAD, NEW0, NEW1, VAC, blank, decode_symbol, encode_symbol, random_symbol
from fttm.tape import (Configuration, HistoryTrace, HistoryViolation, Tape, TransitionError,
                       apply_transition, check_history, interval_view, merge_views, read_trace,
                       record_step, snapshot_load, snapshot_text, write_trace)


def cfg_of(cells, pos, cur, B=1):
    return Configuration(Tape(B, cells), pos, cur)


def test_adjacent_pair_shifts_right():
    a, b, c = blank(Addr=0), blank(Addr=1), blank(Addr=2)
    cfg = cfg_of({0: a, 1: b, 2: c}, 0, (0, 1))
    a2, b2 = blank(Addr=5), blank(Addr=6)
    apply_transition(cfg, ((a2, b2), 1))
    assert cfg.tape.get(0) is a2 and cfg.tape.get(1) is b2
    assert cfg.cur == (1, 2) and cfg.pos == 1


def test_replacement_inherits_pass_and_anchors_at_x():
    B = 4
    x, y = 0, 6  # gap of 2 < B: neighbours but not adjacent
    old_y = blank(Pass=1)
    cfg = cfg_of({x: blank(), y: old_y}, 0, (x, y), B=B)
    apply_transition(cfg, ((blank(Addr=1), NEW1), 1))
    assert cfg.tape.get(y) is VAC
    fresh = cfg.tape.get(x + B)
    assert fresh["Kind"] == "New" and fresh["Pass"] == 1
    assert cfg.cur == (x, x + B) and cfg.pos == x


def test_replacement_pass_comes_from_replaced_cell():
    B = 4
    cfg = cfg_of({0: blank(), 6: blank(Pass=0)}, 0, (0, 6), B=B)
    apply_transition(cfg, ((blank(), NEW1), 1))
    assert cfg.tape.get(4)["Pass"] == 0


def test_right_edge_creates_new_neighbor():
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    apply_transition(cfg, ((blank(), blank()), 1))
    assert cfg.tape.get(2) == NEW0
    assert cfg.cur == (1, 2)


def test_mirror_left_move_and_creation():
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    a2, b2 = blank(Age=1), blank(Age=2)
    apply_transition(cfg, ((a2, b2), -1))
    assert cfg.tape.get(0) is a2 and cfg.tape.get(1) is b2
    assert cfg.tape.get(-1) == NEW0
    assert cfg.cur == (-1, 0) and cfg.pos == -1


def test_rejects_vac_bad_and_adjacent_replacement():
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    with pytest.raises(TransitionError):
        apply_transition(cfg, ((VAC, blank()), 1))
    with pytest.raises(TransitionError):
        apply_transition(cfg, ((blank(), BAD), 1))
    with pytest.raises(TransitionError):
        apply_transition(cfg, ((blank(), NEW0), 1))
    with pytest.raises(TransitionError):
        apply_transition(cfg, ((blank(), blank()), 0))


def test_fault_path_may_write_bad():
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    apply_transition(cfg, ((blank(), BAD), 1), fault=True)
    assert cfg.tape.get(1) is BAD


def test_neighbors_require_clean_gap():
    t = Tape(4, {0: blank(), 6: blank()})
    assert t.right_neighbor(0) == 6
    assert t.left_neighbor(6) == 0
    t.set(5, BAD)
    assert t.right_neighbor(0) is None
    assert Tape(4, {0: blank(), 8: blank()}).right_neighbor(0) is None


def test_bodies_cannot_intersect():
    t = Tape(4, {0: blank()})
    with pytest.raises(TransitionError):
        t.set(3, blank())


# ------------------------------------------------------------------ properties

actions = st.lists(st.tuples(st.integers(0, 2 ** 30), st.sampled_from([-1, 1])), max_size=60)


@given(actions, st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_bodies_stay_disjoint(seq, B):
    cfg = cfg_of({0: blank(), B: blank()}, 0, (0, B), B=B)
    for seed, d in seq:
        rng = random.Random(seed)
        a2, b2 = random_symbol(rng), random_symbol(rng)
        if a2["Kind"] == "New" and (d == -1 or cfg.adjacent()):
            a2["Kind"] = "Stem"
        if b2["Kind"] == "New" and (d == 1 or cfg.adjacent()):
            b2["Kind"] = "Stem"
        apply_transition(cfg, ((a2, b2), d))
        assert cfg.tape.bodies_disjoint()
        assert cfg.cur[1] - cfg.cur[0] >= B


@given(st.sampled_from([-1, 0, 1]), st.integers(1, 3), st.integers(1, 3))
def test_replacement_preserves_pass_and_direction(p, B, gap):
    if gap >= B:
        gap = B - 1
    if gap < 1:
        return
    y = B + gap
    for d in (1, -1):
        cells = {0: blank(Pass=p if d == -1 else 0), y: blank(Pass=p if d == 1 else 0)}
        cfg = cfg_of(cells, 0, (0, y), B=B)
        if d == 1:
            apply_transition(cfg, ((blank(), NEW0), 1))
            assert cfg.tape.get(B)["Pass"] == p and cfg.cur == (0, B)
        else:
            apply_transition(cfg, ((NEW0, blank()), -1))
            assert cfg.tape.get(y - B)["Pass"] == p and cfg.cur == (y - B, y)


# ------------------------------------------------------------------ histories

def trace_of(B=1, T=1):
    cfg = cfg_of({0: blank(), B: blank()}, 0, (0, B), B=B)
    return HistoryTrace(cfg.copy(), T=T), cfg


def test_head_only_step_accepted():
    tr, cfg = trace_of()
    before = cfg.copy()
    after = cfg.copy()
    after.pos = 1
    # cur unchanged and tape unchanged: not a switch
    record_step(tr, before, after)
    assert tr.records[-1].delta == ()


def test_locality_violation_rejected():
    tr, cfg = trace_of()
    after = cfg.copy()
    after.tape.set(3, blank())
    with pytest.raises(HistoryViolation) as e:
        record_step(tr, cfg, after)
    assert e.value.invariant == "locality"


def test_speed_violation_rejected():
    tr, cfg = trace_of()
    after = cfg.copy()
    after.pos = 2
    with pytest.raises(HistoryViolation) as e:
        record_step(tr, cfg, after)
    assert e.value.invariant == "speed"


def test_dwell_violation_rejected():
    tr, cfg = trace_of(T=2)
    pos = cfg.pos
    tr.append(pos, cfg.cur, [])
    tr.append(pos, cfg.cur, [])
    with pytest.raises(HistoryViolation) as e:
        tr.append(pos, cfg.cur, [(0, cfg.tape.get(0), blank(Age=3))])
    assert e.value.invariant == "dwell"


def test_head_must_sit_on_new_pair():
    tr, cfg = trace_of()
    with pytest.raises(HistoryViolation) as e:
        tr.append(0, (1, 2), [])
    assert e.value.invariant == "head-on-pair"


@given(st.lists(st.tuples(st.integers(-1, 1), st.integers(-3, 3), st.booleans(), st.booleans()),
                max_size=40))
@settings(max_examples=80, deadline=None)
def test_incremental_check_equals_full_recheck(steps):
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    tr = HistoryTrace(cfg.copy(), T=2, check=False)
    ref = HistoryTrace(cfg.copy(), T=2)
    h = 0
    first_error = None
    for dh, dp, change, fault in steps:
        h2 = h + dh
        delta = [(h + dp, VAC, blank(Age=dp))] if change else []
        cur = (h2, h2 + 1) if change else tr._cur
        if first_error is None:
            try:
                ref.append(h2, cur, delta, fault)
            except HistoryViolation as e:
                first_error = e
        tr.append(h2, cur, delta, fault)
        h = h2
    full = check_history(tr)
    if first_error is None:
        assert full is None
    else:
        assert full is not None and (full.invariant, full.t) == (first_error.invariant, first_error.t)


def run_steps(cfg, n, seed):
    rng = random.Random(seed)
    tr = HistoryTrace(cfg.copy())
    for _ in range(n):
        before = cfg.copy()
        a2, b2 = blank(Age=rng.randrange(9)), blank(Age=rng.randrange(9))
        apply_transition(cfg, ((a2, b2), rng.choice((-1, 1))))
        record_step(tr, before, cfg)
    return tr


def test_transition_runs_are_histories():
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    tr = run_steps(cfg, 200, 3)
    assert check_history(tr) is None
    assert tr.configuration_at(len(tr.records)) == cfg


# ------------------------------------------------------------------ views and formats

def test_interval_views():
    cells = {p: blank(Addr=p) for p in range(-8, 8)}
    cfg = cfg_of(cells, 0, (0, 1))
    whole = interval_view(cfg, -8, 8)
    assert whole == cfg
    local = interval_view(cfg, 0, 4)
    assert sorted(local.tape.cells) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        interval_view(cfg, 2, 6)
    parts = [interval_view(cfg, -8, 2), interval_view(cfg, -1, 8)]
    assert merge_views(parts) == cfg


def test_symbol_roundtrip_and_snapshot():
    rng = random.Random(1)
    for _ in range(50):
        s = random_symbol(rng)
        s["Payload"] = (((1, 0, None),), (3, 1))
        assert decode_symbol(encode_symbol(s)) == s
    cfg = cfg_of({0: blank(Addr=1), 1: BAD, 5: NEW1}, 0, (0, 1))
    assert snapshot_load(snapshot_text(cfg)) == cfg


def test_trace_format_bit_exact():
    cfg = cfg_of({0: blank(), 1: blank()}, 0, (0, 1))
    tr = run_steps(cfg, 50, 7)
    buf = io.StringIO()
    write_trace(tr, buf)
    text = buf.getvalue()
    back = read_trace(io.StringIO(text))
    buf2 = io.StringIO()
    write_trace(back, buf2)
    assert buf2.getvalue() == text
    tr2 = run_steps(cfg_of({0: blank(), 1: blank()}, 0, (0, 1)), 50, 7)
    buf3 = io.StringIO()
    write_trace(tr2, buf3)
    assert buf3.getvalue() == text
