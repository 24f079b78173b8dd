"""Read-only verdicts over configurations and traces.

Everything here takes frozen data (configurations, HistoryTrace objects, head-position
arrays, event lists) and returns reports; nothing mutates its input.  Reports carry
witnesses so a failing check can be looked at directly.
"""
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import stages as sg
from .codes import DecodeFailure, phi_decode
from .symbols import BAD, VAC, is_cell
from .tape import Configuration, HistoryTrace, Tape, apply_transition, check_history

DOMAIN_CORE = ("Kind", "Drift", "Replace", "Age", "Sweep", "Rebuild.Sweep", "Rebuild.Addr",
               "BigDigression", "FrontAddr")


# ------------------------------------------------------------------ health

@dataclass
class Domain:
    lo: int
    hi: int          # exclusive
    core: tuple


@dataclass
class Boundary:
    pos: int         # first cell of the right-hand domain
    legal: bool


@dataclass
class HealthReport:
    verdict: str                     # healthy / pre-healthy / micro-healthy / unhealthy
    lo: int
    hi: int
    annotation: tuple                # (pa, stage, front) the tape was read against
    domains: list = field(default_factory=list)
    boundaries: list = field(default_factory=list)
    deviations: list = field(default_factory=list)
    islands: list = field(default_factory=list)
    stains: list = field(default_factory=list)
    marks: list = field(default_factory=list)
    front: object = None

    @property
    def illegal(self):
        return [b for b in self.boundaries if not b.legal]

    @property
    def healthy(self):
        return self.verdict == "healthy"


def _domain_key(c):
    return tuple(c.get(k) for k in DOMAIN_CORE)


def domains(cfg, lo, hi, Q=sg.Q):
    """Maximal runs of cells with equal domain core and addresses ascending mod Q."""
    out = []
    cur = prev_a = None
    for p in range(lo, hi):
        c = cfg.tape.get(p)
        if not is_cell(c):
            if cur is not None:
                out.append(cur)
            cur = None
            out.append(Domain(p, p + 1, ("Vac" if c is VAC else "Bad",)))
            continue
        key = _domain_key(c)
        a = c.get("Addr")
        if (cur is not None and cur.core == key and isinstance(a, int) and isinstance(prev_a, int)
                and a == (prev_a + 1) % Q):
            cur.hi = p + 1
        else:
            if cur is not None:
                out.append(cur)
            cur = Domain(p, p + 1, key)
        prev_a = a
    if cur is not None:
        out.append(cur)
    return out


def deviations(cfg, annotation, lo, hi):
    """Positions in [lo, hi) whose (Kind, Addr, Age, Drift) differ from the annotated model."""
    pa, s, f = annotation
    out = []
    for p in range(lo, hi):
        c = cfg.tape.get(p)
        if not is_cell(c) or not sg.matches(sg.expected(s, f, p - pa), sg.core_of(c)):
            out.append(p)
    return out


def islands_of(positions, join=1):
    """Group sorted positions into intervals [lo, hi) merging gaps of at most `join` cells."""
    out = []
    for p in sorted(positions):
        if out and p - out[-1][1] <= join:
            out[-1][1] = p + 1
        else:
            out.append([p, p + 1])
    return [tuple(x) for x in out]


def islands_per_segment(islands, pa, Q=sg.Q, B=1):
    """Largest number of islands meeting one QB segment aligned with the colonies."""
    counts = {}
    for lo, hi in islands:
        for m in range((lo - pa) // (Q * B), (hi - 1 - pa) // (Q * B) + 1):
            counts[m] = counts.get(m, 0) + 1
    return max(counts.values()) if counts else 0


def stains(cfg, code, bases, Q=sg.Q):
    """Info positions differing from the nearest codeword, per colony base."""
    out = []
    for b in bases:
        word = tuple(cfg.tape.get(b + a).get("Info") if is_cell(cfg.tape.get(b + a)) else None
                     for a in range(Q))
        try:
            good = code.encode(code.decode(word))
        except DecodeFailure:
            out.append((b, None))
            continue
        bad = [b + a for a in range(Q) if word[a] != good[a]]
        if bad:
            out.append((b, tuple(bad)))
    return out


def check_health(cfg, lo, hi, annotation=None, code=None, stain_width=None, Q=sg.Q):
    """Health of [lo, hi) read against an annotation (pa, stage, front).

    Without an annotation the best fit of the stage model is used.  Verdicts:
    healthy (cores match the model, no rebuild marks), pre-healthy (cores match but
    rebuild marks remain), micro-healthy (the mismatches form at most 3 islands per
    colony segment, each at most stain_width wide), unhealthy otherwise.  Info stains
    are allowed in any verdict and only reported.  A boundary between domains is legal
    when both of its cells agree with the model.
    """
    if annotation is None:
        obs = [(p, sg.core_of(cfg.tape.get(p))) for p in range(lo, hi) if is_cell(cfg.tape.get(p))]
        ft = sg.fit(obs)
        if ft is None:
            return HealthReport("unhealthy", lo, hi, None)
        annotation = (ft.pa, ft.s, ft.f)
    pa, s, f = annotation
    dev = deviations(cfg, annotation, lo, hi)
    devset = set(dev)
    doms = domains(cfg, lo, hi, Q)
    bounds = [Boundary(d.lo, d.lo not in devset and d.lo - 1 not in devset) for d in doms[1:]]
    isl = islands_of(dev)
    marks = [p for p in range(lo, hi) if is_cell(cfg.tape.get(p))
             and cfg.tape.get(p).get("Rebuild.Sweep") is not None]
    st = []
    if code is not None:
        first = pa + ((lo - pa + Q - 1) // Q) * Q
        st = stains(cfg, code, range(first, hi - Q + 1, Q), Q)
    width = stain_width if stain_width is not None else 9
    if not dev and not marks:
        verdict = "healthy"
    elif not dev:
        verdict = "pre-healthy"
    elif islands_per_segment(isl, pa, Q) <= 3 and all(h - l <= width for l, h in isl):
        verdict = "micro-healthy"
    else:
        verdict = "unhealthy"
    return HealthReport(verdict, lo, hi, annotation, doms, bounds, dev, isl, st, marks, pa + f)


def health_union(a, b, overlap_needed=1):
    """Health of the union of two reports whose intervals overlap by >= overlap_needed cells."""
    ov = min(a.hi, b.hi) - max(a.lo, b.lo)
    if ov < overlap_needed:
        return None
    order = ("healthy", "pre-healthy", "micro-healthy", "unhealthy")
    return order[max(order.index(a.verdict), order.index(b.verdict))]


# ------------------------------------------------------------------ safety for turns

def check_safety_for_turns(cfg, lo, hi, Delta, F, Q=sg.Q):
    """safe / weakly safe / unsafe: Pass runs and footprint spacing."""
    lq = max(1, int(round(math.log2(Q))))
    run = longest = 0
    for p in range(lo, hi):
        c = cfg.tape.get(p)
        if is_cell(c) and c.get("Pass") not in (0, None):
            run += 1
            longest = max(longest, run)
        else:
            run = 0
    feet = [p for p in range(lo, hi) if is_cell(cfg.tape.get(p)) and cfg.tape.get(p).get("BigDigression") == "w"]
    gaps = [b - a for a, b in zip(feet, feet[1:])]
    close = sum(g < 2 * F for g in gaps)
    if longest <= 3 * Delta and len(feet) <= 3 * F * lq and close == 0:
        return "safe"
    if longest <= 6 * Delta and len(feet) <= 6 * F * lq:
        return "weakly safe"
    return "unsafe"


# ------------------------------------------------------------------ turns and feathering

def turns(heads):
    """(time, position, kind) of direction reversals; kind +1 for right-to-left (a maximum)."""
    h = np.asarray(heads)
    d = np.diff(h)
    out = []
    last = 0
    for i, x in enumerate(d):
        if x == 0:
            continue
        if last and np.sign(x) != last:
            out.append((i, int(h[i]), int(last)))
        last = int(np.sign(x))
    return out


@dataclass
class Verdict:
    name: str
    ok: bool
    checked: int = 0
    witness: object = None

    def line(self):
        return "%s %s (%d checked)%s" % ("PASS" if self.ok else "FAIL", self.name, self.checked,
                                        "" if self.ok else " witness=%r" % (self.witness,))


def _range_max(h, i, j):
    return h[i:j + 1].max()


def _range_min(h, i, j):
    return h[i:j + 1].min()


def _fault_between(fault_times, i, j):
    if not len(fault_times):
        return False
    k = np.searchsorted(fault_times, i, side="left")
    return k < len(fault_times) and fault_times[k] <= j + 1


def check_feathering(heads, fault_times=(), name="1-feathering"):
    """Two turns of the same kind at the same extreme need the head beyond it in between."""
    h = np.asarray(heads)
    ft = np.asarray(sorted(fault_times))
    last = {}
    n = 0
    for t, e, kind in turns(h):
        key = (e, kind)
        if key in last:
            t0 = last[key]
            n += 1
            if not _fault_between(ft, t0, t):
                beyond = _range_max(h, t0, t) > e if kind == 1 else _range_min(h, t0, t) < e
                if not beyond:
                    return Verdict(name, False, n, {"pos": e, "kind": kind, "times": (t0, t)})
        last[key] = t
    return Verdict(name, True, n)


def check_big_feathering(big_turns, heads, F, fault_times=()):
    """F-feathering: a big turn landing within F cells inside the previous one of its kind
    needs the head to have passed that previous turn point in between.

    big_turns: (time, position, outward direction).
    """
    h = np.asarray(heads)
    ft = np.asarray(sorted(fault_times))
    prev = {}
    n = 0
    for t, e, o in sorted(big_turns):
        if o in prev:
            t0, e0 = prev[o]
            n += 1
            inside = 0 <= o * (e0 - e) < F
            if inside and not _fault_between(ft, t0, t):
                lo, hi = min(t0, t), max(t0, t)
                far = _range_max(h, lo, hi) > e0 if o == 1 else _range_min(h, lo, hi) < e0
                if not far:
                    return Verdict("F-feathering", False, n, {"prev": (t0, e0), "turn": (t, e), "dir": o})
        prev[o] = (t, e)
    return Verdict("F-feathering", True, n)


def big_turns(events):
    """(time, position, outward direction) of the big turns reported by a runner."""
    return [(e.t, e.pos, -sg.STAGES[e.args[0]].dir) for e in events if e.name == "big"]


def check_feathering_lb(heads, B=1, fault_times=()):
    """Passing right over x at least 2^n times takes the head to x + nB (and mirrored).

    Checked per noise-free segment of the trace.
    """
    h = np.asarray(heads)
    cuts = [0] + sorted(int(t) for t in fault_times) + [len(h)]
    n = 0
    for a, b in zip(cuts, cuts[1:]):
        seg = h[a:b]
        if len(seg) < 2:
            continue
        step = np.diff(seg)
        for sign in (1, -1):
            cross = seg[:-1][step == sign] if sign == 1 else seg[1:][step == sign]
            if not len(cross):
                continue
            xs, counts = np.unique(cross, return_counts=True)
            reach = seg.max() if sign == 1 else seg.min()
            for x, c in zip(xs, counts):
                n += 1
                need = int(math.floor(math.log2(c)))
                if sign == 1 and reach < x + need * B:
                    return Verdict("feathering-lb", False, n, {"x": int(x), "passes": int(c), "reach": int(reach)})
                if sign == -1 and reach > x + B - need * B:
                    return Verdict("feathering-lb", False, n, {"x": int(x), "passes": int(c), "reach": int(reach)})
    return Verdict("feathering-lb", True, n)


# ------------------------------------------------------------------ trajectory checkers

def check_escape(heads, gammaB, qT, fault_times=()):
    """The head leaves every interval of size gammaB within qT steps (sliding extremes)."""
    h = np.asarray(heads)
    w = int(qT) + 1
    if len(h) < w:
        return Verdict("escape", True, 0)
    mx, mn = deque(), deque()
    for i, x in enumerate(h):
        while mx and h[mx[-1]] <= x:
            mx.pop()
        mx.append(i)
        while mn and h[mn[-1]] >= x:
            mn.pop()
        mn.append(i)
        if mx[0] <= i - w:
            mx.popleft()
        if mn[0] <= i - w:
            mn.popleft()
        if i >= w - 1 and h[mx[0]] - h[mn[0]] < gammaB:
            a = i - w + 1
            if not _fault_between(np.asarray(sorted(fault_times)), a, i):
                return Verdict("escape", False, i, {"window": (int(h[mn[0]]), int(h[mn[0]]) + gammaB),
                                                    "times": (a, i)})
    return Verdict("escape", True, len(h))


def bad_timeline(trace):
    """[(t, frozenset of Bad positions)] at every time the Bad set changes."""
    bad = {p for p, s in trace.initial.tape.items() if s is BAD}
    out = [(0, frozenset(bad))]
    for r in trace.records:
        changed = False
        for p, _old, new in r.delta:
            if new is BAD and p not in bad:
                bad.add(p)
                changed = True
            elif new is not BAD and p in bad:
                bad.discard(p)
                changed = True
        if changed:
            out.append((r.t, frozenset(bad)))
    return out


def _clean_intervals(bad, lo, hi):
    out = []
    a = lo
    for p in sorted(x for x in bad if lo <= x < hi):
        if p > a:
            out.append((a, p))
        a = p + 1
    if a < hi:
        out.append((a, hi))
    return out


def _span(trace):
    keys = [p for p in trace.initial.tape.cells]
    for r in trace.records:
        keys.extend(p for p, _, _ in r.delta)
    return (min(keys), max(keys) + trace.initial.B) if keys else (0, 0)


def check_spill(trace, spill, B=1):
    """Across noise-free stretches a maximal clean interval loses at most spill*B per side."""
    lo, hi = _span(trace)
    tl = bad_timeline(trace)
    faults = sorted(t for t in (r.t for r in trace.records if r.fault))
    n = 0
    for (t0, b0), (t1, b1) in zip(tl, tl[1:]):
        if any(t0 < f <= t1 for f in faults):
            continue
        for a, b in _clean_intervals(b0, lo, hi):
            n += 1
            inner = (a + spill * B, b - spill * B)
            if inner[0] < inner[1] and any(inner[0] <= p < inner[1] for p in b1):
                return Verdict("spill", False, n, {"interval": (a, b), "times": (t0, t1)})
    return Verdict("spill", True, n)


def check_attack_cleaning(trace, spill, B=1):
    """Leaving a clean interval of size >= (spill+2)B to the right extends it by >= B
    before the head is back at x - (spill+1)B (x the interval's right end)."""
    lo, hi = _span(trace)
    tl = bad_timeline(trace)
    heads = np.asarray(trace.heads())
    faults = {r.t for r in trace.records if r.fault}
    n = 0
    k = 0
    for t in range(len(heads) - 1):
        while k + 1 < len(tl) and tl[k + 1][0] <= t:
            k += 1
        bad = tl[k][1]
        if not bad:
            continue
        for a, b in _clean_intervals(bad, lo, hi):
            if b - a < (spill + 2) * B or heads[t] != b - B or heads[t + 1] != b:
                continue
            n += 1
            back = b - (spill + 1) * B
            u = t + 1
            extended = False
            j = k
            while u < len(heads) and heads[u] > back and (u + 1) not in faults:
                while j + 1 < len(tl) and tl[j + 1][0] <= u:
                    j += 1
                if all(not (b <= p < b + B) for p in tl[j][1]):
                    extended = True
                    break
                u += 1
            if u < len(heads) and not extended and heads[u] <= back:
                return Verdict("attack-cleaning", False, n, {"interval": (a, b), "t": t})
    return Verdict("attack-cleaning", True, n)


def _passes(heads, lo, hi):
    """Times at which the head completes a crossing of [lo, hi): (+1 or -1, time)."""
    out = []
    side = None
    for t, x in enumerate(heads):
        s = -1 if x < lo else (1 if x >= hi else 0)
        if s == 0:
            continue
        if side is not None and s != side:
            out.append((s, t))
        side = s
    return out


def check_pass_cleaning(trace, pi, marg, B=1, intervals=None):
    """After pi (left-right, right-left) pass pairs over I, Int(I, marg*B) is clean at some
    moment; intervals default to those around every Bad position ever seen."""
    tl = bad_timeline(trace)
    heads = np.asarray(trace.heads())
    if intervals is None:
        seen = sorted({p for _, b in tl for p in b})
        intervals = [(p - (marg + 2) * B, p + (marg + 3) * B) for p in seen]
    n = 0
    for lo, hi in intervals:
        inner = (lo + marg * B, hi - marg * B)
        ps = _passes(heads, lo, hi)
        pairs = 0
        for (d0, t0), (d1, t1) in zip(ps, ps[1:]):
            if d0 == 1 and d1 == -1:
                pairs += 1
                if pairs == pi:
                    n += 1
                    ok = any(not any(inner[0] <= p < inner[1] for p in b)
                             for t, b in tl if t <= t1)
                    if not ok:
                        return Verdict("pass-cleaning", False, n, {"interval": (lo, hi), "t": t1})
                    break
    return Verdict("pass-cleaning", True, n)


def check_transition(trace, tau, T=1):
    """At every noise-free step the recorded change is what tau prescribes.

    tau(cfg) -> action; the check replays the trace and applies tau to a copy of the
    configuration before each step.
    """
    cfg = trace.initial.copy()
    n = 0
    for r in trace.records:
        if not r.fault:
            n += 1
            try:
                probe = cfg.copy()
                changes = apply_transition(probe, tau(cfg))
            except Exception as e:          # an inapplicable transition is a violation too
                return Verdict("transition", False, n, {"t": r.t, "error": repr(e)})
            want = {(p, _key(new)) for p, _, new in changes}
            got = {(p, _key(new)) for p, _, new in r.delta}
            if want != got or tuple(probe.cur) != tuple(r.cur):
                return Verdict("transition", False, n, {"t": r.t, "cur": r.cur, "expected": probe.cur})
        for p, _old, new in r.delta:
            cfg.tape.set(p, new)
        cfg.pos, cfg.cur = r.h, r.cur
    return Verdict("transition", True, n)


def _canon(v):
    if isinstance(v, dict):
        return tuple(sorted((k, _canon(x)) for k, x in v.items()))
    if isinstance(v, (tuple, list)):
        return tuple(_canon(x) for x in v)
    return v


def _key(s):
    """Order-insensitive identity of a symbol (dicts nested in packed fields included)."""
    return repr(_canon(s))


def check_trajectory(trace, tau, params, heads=None):
    """The five trajectory properties for a trace of one level."""
    B = trace.initial.B
    heads = trace.heads() if heads is None else heads
    return [
        check_transition(trace, tau, params.T),
        check_spill(trace, params.spill, B),
        check_escape(heads, int(params.gamma * B), params.q * params.T),
        check_attack_cleaning(trace, params.spill, B),
        check_pass_cleaning(trace, int(params.pi), params.marg, B),
    ]


# ------------------------------------------------------------------ scale-up

@dataclass
class DecodedHistory:
    trace: HistoryTrace
    times: list               # level-1 times of the decoded configurations
    configs: list
    bad: list = field(default_factory=list)     # (index, base) where decoding failed


def decode_at(cfg, code, pa, Q=sg.Q, lo=None, hi=None):
    keys = list(cfg.tape.cells)
    lo = min(keys) if lo is None else lo
    hi = max(keys) + 1 if hi is None else hi
    first = pa - ((pa - lo) // Q) * Q
    bases = range(first, hi - Q + 1, Q)
    top = phi_decode(cfg, code, Q, bases)
    top.cur = (pa, pa + Q)
    top.pos = pa
    return top


def scale_up(snapshots, code, Q=sg.Q):
    """Level-2 history from level-1 snapshots [(t, configuration, pa)] taken at work-period
    boundaries.  Colonies that do not decode become Bad."""
    cfgs, times, bad = [], [], []
    for i, (t, cfg, pa) in enumerate(snapshots):
        top = decode_at(cfg, code, pa, Q)
        for p, s in top.tape.items():
            if s is BAD:
                bad.append((i, p))
        cfgs.append(top)
        times.append(t)
    tr = HistoryTrace(cfgs[0].copy(), check=False)
    for prev, cur in zip(cfgs, cfgs[1:]):
        delta = []
        keys = set(prev.tape.cells) | set(cur.tape.cells)
        for p in sorted(keys):
            a, b = prev.tape.get(p), cur.tape.get(p)
            if _key(a) != _key(b):
                delta.append((p, a, b))
        tr.append(cur.pos, cur.cur, delta)
    return DecodedHistory(tr, times, cfgs, bad)


def _strip_local(s):
    """Fields that only the level-1 simulation uses and that the level-2 rule leaves alone."""
    return s


def check_level2_transition(history, program, hooks):
    """Each decoded level-2 step is the rule's own step on the decoded pair."""
    from .rules import eval_rules
    n = 0
    for i, (a, b) in enumerate(zip(history.configs, history.configs[1:])):
        n += 1
        va = a.pair()
        if not all(is_cell(s) for s in va):
            return Verdict("level-2 transition", False, n, {"step": i, "pair": "not decodable"})
        action = eval_rules(program, 2, va, a.adjacent(), None, hooks)
        probe = a.copy()
        apply_transition(probe, action)
        x, y = a.cur
        for p in set(probe.tape.cells) | set(b.tape.cells):
            if _key(probe.tape.get(p)) != _key(b.tape.get(p)):
                return Verdict("level-2 transition", False, n, {"step": i, "pos": p})
        if tuple(probe.cur) != tuple(b.cur):
            return Verdict("level-2 transition", False, n, {"step": i, "cur": (probe.cur, b.cur)})
    return Verdict("level-2 transition", True, n)


def check_decoded_history(history):
    try:
        check_history(history.trace)
    except Exception as e:
        return Verdict("level-2 history", False, len(history.configs), repr(e))
    return Verdict("level-2 history", True, len(history.configs))


# ------------------------------------------------------------------ annotation

@dataclass
class AnnotationReport:
    range: tuple
    samples: int
    max_islands: int
    max_width: int
    violations: list = field(default_factory=list)
    history: list = field(default_factory=list)      # (t, number of islands)

    @property
    def ok(self):
        return not self.violations


def validate_annotation(samples, stain_width, per_segment=3, Q=sg.Q, head_budget=None):
    """Check island discipline over sampled annotated states.

    samples: [(t, pa, islands, head_time_in_islands)] as produced by IslandTracker.
    """
    rep = AnnotationReport(None, len(samples), 0, 0)
    for t, pa, isl, dwell in samples:
        k = islands_per_segment(isl, pa, Q)
        rep.history.append((t, len(isl)))
        rep.max_islands = max(rep.max_islands, k)
        w = max((h - l for l, h in isl), default=0)
        rep.max_width = max(rep.max_width, w)
        if k > per_segment:
            rep.violations.append(("(e) islands per segment", t, k))
        if w > stain_width:
            rep.violations.append(("(b) island wider than a stain", t, w))
        if head_budget is not None and dwell > head_budget:
            rep.violations.append(("(c) head time in an island", t, dwell))
    return rep


class IslandTracker:
    """Proposes annotations while a Runner executes: islands are the cells that disagree
    with the stage model at the runner's current (pa, stage, front)."""

    def __init__(self, every=25, margin=3 * sg.Q):
        self.every = every
        self.margin = margin
        self.samples = []
        self._dwell = 0
        self._last_t = 0

    def __call__(self, runner):
        if runner.t % self.every and runner.events and runner.events[-1].t != runner.t:
            return
        ann = runner.annotation()
        pa = ann[0]
        lo, hi = pa - self.margin, pa + 2 * sg.Q + self.margin
        dev = deviations(runner.cfg, ann, lo, hi)
        isl = islands_of(dev)
        h = runner.cfg.pos
        if any(l <= h < r for l, r in isl):
            self._dwell += runner.t - self._last_t
        else:
            self._dwell = 0
        self._last_t = runner.t
        self.samples.append((runner.t, pa, isl, self._dwell))

    def counts(self):
        return [(t, len(isl)) for t, _, isl, _ in self.samples]


# ------------------------------------------------------------------ stitching oracle

def stitch_oracle(cfg, U, V, W, Q=sg.Q):
    """Reference stitching of an ambiguous gap V between homogenous domains U and W.

    Returns {position: core dict} for the cells of V.  If W continues U's address
    progression the gap takes U's pattern (colony extension); otherwise U is extended
    up to W as bridge cells when the gap is shorter than a colony, or as stem cells.
    """
    ul, uh = U
    wl, wh = W
    vl, vh = V
    if not (uh == vl and vh == wl):
        raise ValueError("U, V, W must be consecutive")
    last = cfg.tape.get(uh - 1)
    first = cfg.tape.get(wl)
    a0 = last.get("Addr")
    out = {}
    same = (sg.core_of(last)[0] == sg.core_of(first)[0] and isinstance(a0, int)
            and first.get("Addr") == (a0 + (wl - uh + 1)) % Q)
    for p in range(vl, vh):
        if same:
            out[p] = {"Kind": last.get("Kind"), "Addr": (a0 + p - uh + 1) % Q, "Age": last.get("Age"),
                      "Drift": last.get("Drift")}
        elif vh - vl < Q:
            out[p] = {"Kind": "Bridge", "Addr": (a0 + p - uh + 1) % Q if isinstance(a0, int) else None,
                      "Age": last.get("Age"), "Drift": last.get("Drift")}
        else:
            out[p] = {"Kind": "Stem", "Addr": None, "Age": None, "Drift": last.get("Drift")}
    return out


# ------------------------------------------------------------------ metrics

def redundancy_metrics(runs, Q=sg.Q, B=1):
    """Space and time redundancy measured over finished runs.

    runs: [{"wp_steps": [...], "cell_bits": int}] per run.  Returned as a report; the
    asymptotic constants are not asserted.
    """
    if not runs:
        return {}
    steps = [s for r in runs for s in r.get("wp_steps", ())]
    bits = [r["cell_bits"] for r in runs if r.get("cell_bits")]
    out = {"runs": len(runs)}
    if bits:
        out["space_factor"] = Q * B / (sum(bits) / len(bits))
        out["space_cells_per_colony"] = Q * B
    if steps:
        out["time_factor"] = float(np.mean(steps))
        out["time_factor_max"] = int(max(steps))
    return out


def wp_steps(events):
    """Lengths of complete work periods from runner events."""
    out = []
    start = None
    for e in events:
        if e.name == "wp_start":
            start = e.t
        elif e.name == "wp_end" and start is not None:
            out.append(e.t - start + 1)
            start = None
    return out


def make_tape(cells, B=1):
    return Tape(B, cells)


def make_config(cells, pos, cur, B=1):
    return Configuration(Tape(B, cells), pos, cur)
