"""Acceptance criteria A1-A10; each test prints one PASS/FAIL line."""
import json
import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from fttm import analysis as an
from fttm import gmachine as gm
from fttm import harness as h
from fttm import machine as mc
from fttm.codes import BurstRSCode, DecodeFailure, RepetitionCode
from fttm.tape import check_history
from fttm.noise import (TOY_NOISE, PreconditionError, erased_fraction, estimate_level_probability,
                        isolated_points, partition_bursts)
from fttm.params import TOY_L1

FIX = Path(__file__).parent / "fixtures"
ORACLE = gm.g_oracle(3)


# ------------------------------------------------------------------ A1

def _repetition_exhaustive(Q):
    """Every codeword against every burst of length <= Q/3.

    A burst of length <= L lies inside some window [s, s+L) with s <= Q-L, so flipping every
    subset of every such window covers all of them exactly.
    """
    code = RepetitionCode(Q, 3)
    L = Q // 3
    errs = np.unique(np.array([p << s for s in range(Q - L + 1) for p in range(1 << L)], dtype=np.int64))
    msgs = np.arange(1 << code.m, dtype=np.int64)
    cws = np.array([code.encode_bits(int(x)) for x in msgs], dtype=np.int64)
    bad = 0
    for lo in range(0, len(msgs), 64):
        w = cws[lo:lo + 64, None] ^ errs[None, :]
        got = code.decode_bits_batch(w.ravel()).reshape(w.shape)
        bad += int((got != msgs[lo:lo + 64, None]).sum())
    return bad, len(msgs) * len(errs)


def test_A1_repetition_corrects_every_single_burst(verdict):
    t0 = time.time()
    res = {Q: _repetition_exhaustive(Q) for Q in (6, 30)}
    dt = time.time() - t0
    ok = all(b == 0 for b, _ in res.values()) and dt < 60
    verdict("A1", ok, "errors %s over %s words, %.1fs" % (
        {Q: b for Q, (b, _) in res.items()}, {Q: n for Q, (_, n) in res.items()}, dt))


def test_A1_batch_route_agrees_with_scalar_decoder():
    code = RepetitionCode(30, 3)
    rng = random.Random(4)
    words = [rng.getrandbits(30) for _ in range(2000)]
    fast = code.decode_bits_batch(words)
    for w, f in zip(words, fast):
        bits = [(w >> i) & 1 for i in range(30)]
        assert sum(b << i for i, b in enumerate(code.decode(bits))) == int(f)


# ------------------------------------------------------------------ A2

def _burst(rng, w, Q, beta, alph):
    s = rng.randrange(Q - beta + 1)
    for i in range(s, s + beta):
        w[i] = rng.randrange(alph)


def test_A2_rs_recovers_t_bursts_and_survives_more(verdict):
    code = BurstRSCode(4, 3)
    rng = random.Random(2)
    ok = 0
    for _ in range(1000):
        m = [rng.randrange(256) for _ in range(code.msg_len)]
        w = list(code.encode(m))
        for _ in range(3):
            _burst(rng, w, code.Q, 4, 256)
        try:
            ok += code.decode(w) == tuple(m)
        except DecodeFailure:
            pass
    crashes, outcomes = [], {"decoded": 0, "wrong": 0, "failure": 0}
    for _ in range(1000):
        m = [rng.randrange(256) for _ in range(code.msg_len)]
        w = list(code.encode(m))
        for _ in range(4):
            _burst(rng, w, code.Q, 4, 256)
        try:
            outcomes["decoded" if code.decode(w) == tuple(m) else "wrong"] += 1
        except DecodeFailure:
            outcomes["failure"] += 1
        except Exception as e:          # anything else is a crash
            crashes.append(repr(e))
    verdict("A2", ok == 1000 and not crashes,
            "t bursts %d/1000 recovered; t+1 bursts %s, crashes %d" % (ok, outcomes, len(crashes)))


# ------------------------------------------------------------------ A3

def _random_sparse(rng):
    r = (rng.randint(1, 4), rng.randint(1, 4))
    rs = (2 * r[0] + 1 + rng.randrange(4), 2 * r[1] + 1 + rng.randrange(4))
    pts, want = set(), rng.randint(50, 1000)
    while len(pts) < want:
        c = (rng.randrange(1000 - r[0]), rng.randrange(1000 - r[1]))
        for _ in range(rng.randrange(1, 4)):
            pts.add((c[0] + rng.randrange(r[0]), c[1] + rng.randrange(r[1])))
    return sorted(isolated_points(pts, r, rs))[:1000], r, rs


def _brute_bursts(E, r, rs):
    """Pairwise numpy oracle: closeness classes and both burst-lemma assertions."""
    P = np.array(E)
    dx = np.abs(P[:, None, 0] - P[None, :, 0])
    dt = np.abs(P[:, None, 1] - P[None, :, 1])
    close = (dx < r[0]) & (dt < r[1])
    label = np.arange(len(E))
    for i in range(len(E)):
        label[close[i]] = min(label[close[i]].min(), label[i])
    classes = {}
    for i, l in enumerate(label):
        classes.setdefault(int(l), set()).add(E[i])
    viol = 0
    for c in classes.values():
        xs = [p[0] for p in c]
        ts = [p[1] for p in c]
        viol += max(xs) - min(xs) + 1 > r[0] or max(ts) - min(ts) + 1 > r[1]
    sep = (dx < rs[0] - r[0]) & (dt < rs[1] - r[1]) & (label[:, None] != label[None, :])
    viol += int(sep.sum())
    return sorted(frozenset(c) for c in classes.values()), viol


def test_A3_burst_lemma_on_random_sparse_sets(verdict):
    rng = random.Random(3)
    viol = disagree = npts = 0
    for _ in range(200):
        E, r, rs = _random_sparse(rng)
        npts = max(npts, len(E))
        brute, v = _brute_bursts(E, r, rs)
        viol += v
        try:
            fast = sorted(partition_bursts(E, r, rs))
        except (AssertionError, PreconditionError):
            viol += 1
            continue
        disagree += fast != brute
    verdict("A3", viol == 0 and disagree == 0,
            "200 sets (max %d points): %d violations, %d partition mismatches" % (npts, viol, disagree))


# ------------------------------------------------------------------ A4

def test_A4_level_occupation_falls_and_noise_is_erased(verdict):
    eps, n = 0.01, 10 ** 4
    est = [estimate_level_probability(eps, TOY_NOISE, k, n, 1000 + k) for k in (1, 2, 3, 4)]
    drops = []
    for a, b in zip(est, est[1:]):
        slack = 3 * math.hypot(a.sigma, 2 * b.sigma)
        drops.append(a.freq - 2 * b.freq >= -slack)
    er = erased_fraction(eps, TOY_NOISE, 3, n, 77)
    ok = all(drops) and er.freq + 3 * er.sigma >= 0.99
    verdict("A4", ok, "occupation %s; erased by level 3: %.4f" % (
        ["%.2e" % e.freq for e in est], er.freq))


# ------------------------------------------------------------------ A5

@pytest.fixture(scope="module")
def clean_bundle():
    t0 = time.time()
    b = h.execute(h.config_from_dict({}))
    return b, time.time() - t0


def test_A5_noise_free_run_computes_g(clean_bundle, verdict):
    b, dt = clean_bundle
    t0 = time.time()
    spec = mc.make_spec()
    program = mc.build_program()
    lines = []
    try:
        check_history(b.trace)
        lines.append(an.Verdict("history", True, b.trace.t))
    except Exception as e:
        lines.append(an.Verdict("history", False, b.trace.t, repr(e)))
    lines += an.check_trajectory(b.trace, mc.make_tau(spec, program), TOY_L1)
    hist = an.scale_up([(t, c, pa) for t, pa, c in b.snapshots], spec.code)
    lines.append(an.check_decoded_history(hist))
    lines.append(an.check_level2_transition(hist, program, mc.level2_hooks()))
    dt += time.time() - t0
    out = b.result["output"]
    failed = [v.name for v in lines if not v.ok]
    verdict("A5", out == ORACLE and not failed and dt < 120,
            "output %s (oracle %s), %d checks, failed %s, %.0fs" % (out, ORACLE, len(lines), failed, dt))


# ------------------------------------------------------------------ A6 / A7

def _single_burst_run(seed):
    rr = random.Random(seed)
    t, k = rr.randrange(1, 20000), rr.randint(1, TOY_L1.beta)
    r = mc.Runner(record=True)
    tracker = an.IslandTracker()
    snap = {}

    def on(x):
        tracker(x)
        if "health" in snap or not x.events or x.events[-1].t != x.t:
            return
        ev = x.events[-1]
        if ev.name == "wp_start" and x.t > t:
            snap.setdefault("start", x.t)
        elif ev.name == "wp_end" and "start" in snap:
            hd = x.trace.heads()
            snap["health"] = an.check_health(x.cfg, min(hd[t:]), max(hd[t:]) + 1, x.annotation(), x.spec.code)
    res = r.run(80000, schedule=[t], seed=seed, burst=k, on_step=on)
    done = r.pa_log[-2][1]
    return {"seed": seed, "t": t, "k": k, "output": res.output, "health": snap.get("health"),
            "stains": an.stains(r.cfg, r.spec.code, (done, done + mc.Q)),
            "annotation": an.validate_annotation(tracker.samples, TOY_L1.stain, per_segment=3),
            "heads": r.trace.heads(), "faults": list(r.faults), "events": r.events}


@pytest.fixture(scope="module")
def burst_runs():
    t0 = time.time()
    runs = [_single_burst_run(s) for s in range(100)]
    return runs, time.time() - t0


def test_A6_single_burst_is_corrected(burst_runs, verdict):
    runs, dt = burst_runs
    correct = sum(x["output"] == ORACLE for x in runs)
    healthy = sum(x["health"] is not None and x["health"].healthy and not x["stains"] for x in runs)
    islands = sum(x["annotation"].ok for x in runs)
    worst = max(x["annotation"].max_islands for x in runs)
    bad = [x["seed"] for x in runs if not (x["output"] == ORACLE and x["health"] is not None
                                           and x["health"].healthy and not x["stains"] and x["annotation"].ok)]
    verdict("A6", not bad and dt < 600,
            "output %d/100, healthy within a work period %d/100, islands ok %d/100 (peak %d), "
            "failing seeds %s, %.0fs" % (correct, healthy, islands, worst, bad[:5], dt))


def _turn_checks(heads, events, faults):
    P = TOY_L1
    return [an.check_feathering(heads, faults),
            an.check_big_feathering(an.big_turns(events), heads, P.F, faults),
            an.check_feathering_lb(heads, P.B, faults),
            an.check_escape(heads, int(P.gamma * P.B), P.q * P.T)]


def test_A7_every_trace_is_feathered_and_escapes(clean_bundle, burst_runs, verdict):
    b, _ = clean_bundle
    traces = [(b.trace.heads(), b.events, [])] + [(x["heads"], x["events"], x["faults"]) for x in burst_runs[0]]
    failed, slowest = [], 0.0
    for i, (hd, ev, f) in enumerate(traces):
        t0 = time.time()
        vs = _turn_checks(hd, ev, f)
        slowest = max(slowest, time.time() - t0)
        failed += [(i, v.name) for v in vs if not v.ok]
    verdict("A7", not failed and slowest < 60,
            "%d traces x 4 checks, failures %s, slowest %.1fs" % (len(traces), failed[:5], slowest))


# ------------------------------------------------------------------ A8

def test_A8_work_period_within_calibrated_bound(verdict):
    gold = json.loads((FIX / "golden_a8.json").read_text())
    r = mc.Runner()
    r.run(21000, until_settled=False)
    steps = an.wp_steps(r.events)
    P = TOY_L1
    denom = len(mc.build_program()) * P.Q * P.F * P.Z ** 2
    c = max(steps) / denom
    ok = denom == gold["denominator"] and all(s <= gold["c"] * denom for s in steps) \
        and abs(c - gold["c"]) <= 0.1 * gold["c"]
    verdict("A8", ok, "work periods %s, c = %.4f (golden %.4f)" % (steps, c, gold["c"]))


# ------------------------------------------------------------------ A9

def test_A9_scenarios_match_goldens(verdict):
    gold = json.loads((FIX / "scenarios.json").read_text())
    t0 = time.time()
    got = {}
    for name, sc in sorted(h.SCENARIOS.items()):
        got[name] = {k: v for k, v in sc.run().items() if k != "heads"}
    dt = time.time() - t0
    nf, isl, hr = got["need-feather"], got["3-islands"], got["heal-in-rebuild"]
    semantic = (nf["captured_without_feathering"] and not nf["1-feathering_without"]
                and nf["escaped_with_feathering_at"] is not None and nf["feathering_lb_with"]
                and isl["peak"] == 3 and isl["settled_max"] <= 1 and isl["output"] == ORACLE
                and hr["rebuilt_after_burst"] and hr["output"] == ORACLE)
    same = json.loads(json.dumps(got, sort_keys=True)) == gold
    verdict("A9", semantic and same and dt < 300,
            "need-feather escape at %s, islands peak %d settle %d, rebuild after burst %s, "
            "golden match %s, %.0fs" % (nf["escaped_with_feathering_at"], isl["peak"], isl["settled_max"],
                                        hr["rebuilt_after_burst"], same, dt))


# ------------------------------------------------------------------ A10

def test_A10_failure_rate_grows_with_eps(verdict):
    t0 = time.time()
    rows = h.sweep_epsilon(h.config_from_dict({}), [0.0, 1e-4, 1e-3, 1e-2], 50, seed=0, budget=24000)
    dt = time.time() - t0
    zero = [r for r in rows if r["eps"] == 0.0][0]
    ok = h.trend_ok(rows, 2.0) and zero["rate"] == 1.0 and dt < 1800
    verdict("A10", ok, "success rates %s, %.0fs" % (
        {r["eps"]: r["rate"] for r in rows}, dt))
