"""Native primitives of the level-1 program: head motion, the work-period stages, healing
and rebuilding.

Every primitive acts on one rule-engine Context: it may rewrite the observed cell pair
and the control record, and it leaves the chosen direction in the variable $d for the
program's MOVE.  Everything the head knows lives in the control record, so the
transition is a pure function of the pair.

Motion conventions.  The control cell c is the cell the head is working on.  Moving
right (Mv=+1) it is the left cell of the pair and the other cell O is c+1; moving left
it is the right cell and O is c-1.  Continuing moves c by Mv; a turn keeps c and flips
Mv.  A turn is allowed only if O.Pass differs from Mv; the turn sets O.Pass = Mv and
every step that leaves a cell clears its Pass.  A refused turn is postponed by one
cell; more than 3*Delta postponements in a row is small-turn starvation.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field

from . import gmachine as gm
from . import stages as sg
from .codes import DecodeFailure, burst_cover, compliance_check, diff_positions
from .rules import StreamInterp, header_cells, pack, pack_append, unpack
from .symbols import CONTROL_FIELDS, DEFAULTS, NEW0

log = logging.getLogger(__name__)

Q = sg.Q
FOOT = "w"
DATA_CLEAR = ("Hold1", "Hold2", "Hold3", "Compliant1", "Compliant2", "Compliant3", "Payload", "Work",
              "Index", "Replace")


@dataclass
class Spec:
    """Everything the primitives need besides the pair: code, sizes and the level-2 program."""
    code: object
    rsyms: tuple = ()
    hooks2: dict = field(default_factory=dict)
    Z: int = 4
    F: int = 2
    Delta: int = 4
    big_starve: int = 24
    heal_radius: int = 24
    rebuild_radius: int = 32
    fail_cost: int = 8
    feather: bool = True          # False gives the variant without turn discipline
    comp_r: int = 2

    @property
    def small_starve(self):
        return 3 * self.Delta


class Alarm(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class Starve(Exception):
    pass


# ------------------------------------------------------------------ motion

def want(c, mv, T, a):
    """Direction the head should take to reach T and be moving in direction a there."""
    if a is None:
        return 1 if T > c else (-1 if T < c else mv)
    return a if a * (T - c) >= 0 else -a


def arrived(c, mv, T, a):
    return c == T and (a is None or mv == a)


def go(ctx, spec, w):
    """One step of motion toward direction w; returns the displacement of c (0 or Mv)."""
    C = ctx.cell("C")
    O = ctx.cell("O")
    mv = C["Mv"]
    if w == mv:
        C["Pass"] = 0
        ctx.vars["d"] = mv
        return mv
    if not spec.feather or O.get("Pass") != mv:
        if spec.feather:
            O["Pass"] = mv
        C["Pass"] = 0
        C["Mv"] = -mv
        C["Pst"] = 0
        ctx.vars["d"] = -mv
        return 0
    C["Pass"] = 0
    C["Pst"] = (C.get("Pst") or 0) + 1
    ctx.vars["d"] = mv
    if C["Pst"] > spec.small_starve:
        raise Starve()
    return mv


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _aux(C):
    return unpack(C.get("Aux"))


def _set_aux(C, data):
    C["Aux"] = None if data is None else pack(data)


def _acc(C):
    return unpack(C.get("Acc")) or ()


def _acc_add(C, item):
    C["Acc"] = pack_append(C.get("Acc"), item)


def reset_control(C, **kw):
    for f in CONTROL_FIELDS:
        if f not in ("Head", "Chk"):
            C[f] = DEFAULTS[f]
    C.update(kw)


# ------------------------------------------------------------------ data helpers

def new0_word(spec):
    return spec.code.encode(NEW0)


def colony_compliant(spec, word):
    """Within comp_r bursts of a padded codeword; pad errors count like any other."""
    psi = spec.code.psi
    word = tuple(word)
    if len(word) != psi.Q:
        return False
    rep = compliance_check(psi.strip(word), psi.inner, spec.comp_r)
    if rep.codeword is None:
        return False
    z = (psi.zero,) * psi.padlen
    full = z + tuple(rep.codeword) + z
    return burst_cover(diff_positions(word, full), psi.inner.beta) <= spec.comp_r


def words_from(acc, lo=0):
    """Two colony words from gathered (r, value) items."""
    vals = dict(acc)
    return tuple(tuple(vals.get(ci * Q + a) for a in range(Q)) for ci in (0, 1))


def plurality(items):
    items = [x for x in items if x is not None]
    if not items:
        return None
    cnt = Counter(items)
    best = max(cnt.values())
    for x in items:
        if cnt[x] == best:
            return x


def _hold_ok(h):
    return isinstance(h, tuple) and len(h) == 4 and h[1] in (-1, 1)


# ------------------------------------------------------------------ simulation stages

def _process(ctx, spec, C, s, st, r):
    """Stage action on the control cell at relative position r; may return 'grun'."""
    name = st.name
    a = r % Q
    ci = 0 if r < Q else 1
    if st.group is None and s not in (1, 5):
        return _process_plain(ctx, spec, C, s, r, a, ci)
    if s == 1 or name.startswith("CW") or name[0] == "D":
        if name.startswith("CW"):
            comp = _aux(C)
            C["Compliant%d" % (s - 1)] = comp[1][ci] if comp and comp[0] == "comp" else None
        _acc_add(C, (r, C.get("Info")))
    elif s == 5:
        votes = [C.get("Compliant%d" % j) for j in (1, 2, 3)]
        if sum(v is False for v in votes) >= 2:
            C["Info"] = new0_word(spec)[a]
    elif name[0] == "W":
        aux = _aux(C)
        if r < sg.NR:
            C["Index"] = r + 1
            ctx.vars["wpb"] = True
        else:
            C["Index"] = None
            C["Work"] = header_cells(1, aux[1], True)[r - sg.NR] if aux and aux[0] == "va" else None
    elif name[0] == "H":
        if r >= sg.NR:
            _acc_add(C, (r, C.get("Work")))
        if r == sg.NR:
            head = dict(_acc(C))
            zeros, va0, va1, alpha = (head.get(sg.NR + i) for i in range(4))
            ok = isinstance(zeros, str) and isinstance(va0, dict) and isinstance(va1, dict)
            if not ok:
                raise _SkipGroup()
            it = StreamInterp(len(zeros), (va0, va1), alpha, None, spec.hooks2, spec.rsyms,
                              defer_payload=True)
            _set_aux(C, ("run", it.to_state()))
    elif name[0] == "I":
        aux = _aux(C)
        if r < sg.NR:
            if not aux or aux[0] != "run":
                raise _SkipGroup()
            it = StreamInterp.from_state(aux[1], None, spec.hooks2, spec.rsyms)
            w = C.get("Work")
            if isinstance(w, str) and not it.done:
                it.feed(w.split())
            _set_aux(C, ("run", it.to_state()))
    elif name[:2] == "PC":
        aux = _aux(C)
        if aux and aux[0] == "pay":
            tape, _, head = aux[2]
            C["Payload"] = ("g", tape[r], head[1] if head and head[0] == r else None)
    elif name[:2] == "PG":
        aux = _aux(C)
        if aux and aux[0] == "pay" and not aux[3]:
            pl = C.get("Payload")
            if isinstance(pl, tuple) and len(pl) == 3 and pl[2] is not None:
                _set_aux(C, aux[:3] + (("run", r, pl[2], 0, False),))
                return "grun"
    elif name[:2] == "PR":
        aux = _aux(C)
        if aux and aux[0] == "pay":
            _acc_add(C, (r, C.get("Payload")))
    elif name[0] == "E":
        aux = _aux(C)
        if r == st.start and aux and aux[0] == "res":
            cells, d = aux[1], aux[2]
            words = tuple(spec.code.encode(c) for c in cells)
            out = tuple(c.get("Output") for c in cells)
            aux = ("enc", words, d, out)
            _set_aux(C, aux)
        if aux and aux[0] == "enc":
            C["Hold%d" % st.group] = (aux[1][ci][a], aux[2], None, aux[3][ci])
    return None


def _process_plain(ctx, spec, C, s, r, a, ci):
    """Majority and transfer stages."""
    if s == 30:
        holds = [C.get("Hold%d" % j) for j in (1, 2, 3)]
        h = plurality([x for x in holds if _hold_ok(x)])
        if h is not None:
            C["Info"], C["Drift"], C["Replace"] = h[0], h[1], h[2]
            _acc_add(C, (ci, h[3], h[1]))
        else:
            C["Drift"] = None
        if a == 0:
            C["Output"] = plurality([v[1] for v in _acc(C) if v[0] == ci])
    elif s == 31:
        if r < Q:
            C["Kind"], C["Drift"] = "Outer", 1
        else:
            fresh = C.get("Kind") == "New" or C.get("Info") is None
            C["Kind"], C["Drift"] = ("Member0" if r < 2 * Q else "Member1"), 1
            if fresh:
                C["Addr"], C["Info"] = a, new0_word(spec)[a]
    elif s == 32:
        _finalize(C)
    elif s == 34:
        fresh = C.get("Kind") == "New" or C.get("Info") is None
        C["Kind"], C["Drift"] = "Member0", -1
        if fresh:
            C["Addr"], C["Info"] = a, new0_word(spec)[a]
    elif s == 35:
        if r < 0:
            _finalize(C)
        elif r < Q:
            C["Kind"] = "Member1"
            _finalize(C)
        else:
            C["Kind"] = "Outer"
            _finalize(C)
            C["Drift"] = -1
    return None


def _finalize(C):
    C["Drift"] = None
    for f in DATA_CLEAR:
        C[f] = None


class _SkipGroup(Exception):
    pass


def _stage_end(ctx, spec, C, s, st):
    """End-of-stage action; data lives in Aux from here to the next stage that needs it."""
    name = st.name
    if s == 1 or name.startswith("CW"):
        w = words_from(_acc(C))
        _set_aux(C, ("comp", tuple(colony_compliant(spec, x) for x in w)))
    elif s == 5:
        _set_aux(C, None)
    elif name[0] == "D":
        w = words_from(_acc(C))
        try:
            va = tuple(spec.code.decode(x) for x in w)
            if not all(isinstance(v, dict) for v in va):
                raise DecodeFailure("not a cell")
            _set_aux(C, ("va", va))
        except DecodeFailure:
            ctx.events.append(("decode_fail", st.group))
            raise _SkipGroup()
    elif name[0] == "I":
        aux = _aux(C)
        if not aux or aux[0] != "run":
            raise _SkipGroup()
        it = StreamInterp.from_state(aux[1], None, spec.hooks2, spec.rsyms)
        if it.ctx.status == "payload":
            tape, bases, head = gm.pair_tape(it.ctx.cells[0], it.ctx.cells[1], Q)
            _set_aux(C, ("pay", it.to_state(), (tuple(tape), tuple(bases), head), False))
        else:
            (a, b), d = it.finish()
            _set_aux(C, ("res", (a, b), d))
    elif name[0] == "P" and name[1] == "R":
        aux = _aux(C)
        if aux and aux[0] == "pay":
            it = StreamInterp.from_state(aux[1], None, spec.hooks2, spec.rsyms)
            tape, bases, _ = aux[2]
            got = dict(_acc(C))
            syms, idx, state = list(tape), None, None
            for r in range(2 * Q):
                pl = got.get(r)
                if isinstance(pl, tuple) and len(pl) == 3:
                    syms[r] = pl[1]
                    if pl[2] is not None and idx is None:
                        idx, state = r, pl[2]
            d = gm.payload_finish(it.ctx.cells, syms, list(bases), idx, state, Q)
            if d == 0:
                it.ctx.cell("C")["Ret"] = True
                d = 1
            it.ctx.move(d)
            (a, b), d = it.ctx.result()
            _set_aux(C, ("res", (a, b), d))
    elif name[0] == "E":
        _set_aux(C, None)
    elif s == 30:
        C["Dir"] = plurality([v[2] for v in _acc(C)]) or 1


def _advance_stage(ctx, spec, C, s, st, c):
    """Move the control record on to the next stage; c is the position in current coordinates."""
    ns = sg.next_stage(s, C.get("Dir"))
    shift = 0
    if ns is None:
        shift = sg.shift_after(s)
        ns = 1
        ctx.events.append(("wp_end", s))
        C["Dir"] = None
        C["J"] = None
        _set_aux(C, None)
    nst = sg.STAGES[ns]
    if C.get("J") is not None and nst.group != C["J"]:
        C["J"] = None
    C["Ph"] = ns
    C["Ctr"] = nst.start
    C["Zig"] = c - shift - nst.start
    C["Par"] = 0
    C["Acc"] = None
    C["Md"] = "ZR" if nst.dir == st.dir else "DG"


def _enter(C, spec):
    """Footprint bookkeeping when the front or a digression enters a cell."""
    if C.get("BigDigression") == FOOT:
        C["BigDigression"] = None
        C["Dg"] = 0
    else:
        C["Dg"] = min(spec.F, (C.get("Dg") or 0) + 1)


def _front(ctx, spec, C, s, st, f):
    """Process the front cell f (the control cell) and pick the next mode."""
    if f != st.start:
        _enter(C, spec)
    skipping = C.get("J") is not None and C["J"] == st.group
    if s == 1 and f == st.start:
        ctx.events.append(("wp_start",))
    if not skipping:
        try:
            if _process(ctx, spec, C, s, st, f) == "grun":
                C["Md"] = "G"
                return
        except _SkipGroup:
            ctx.events.append(("skip", st.group))
            C["J"] = st.group
    C["Age"] = st.mark
    if f == st.end:
        if not (C.get("J") is not None and C["J"] == st.group):
            try:
                _stage_end(ctx, spec, C, s, st)
            except _SkipGroup:
                C["J"] = st.group
        _advance_stage(ctx, spec, C, s, st, f)
        return
    C["Ctr"] = f + st.dir
    C["Zig"] = -st.dir
    C["Par"] = 1 - (C.get("Par") or 0)
    C["Md"] = "ZA" if C["Par"] else "ZR"


def _clip(st, x):
    return max(st.lo, min(st.hi - 1, x))


def _g_step(ctx, spec, C, st, c):
    """One G action at the simulated head; returns True when the G run is over."""
    aux = _aux(C)
    _, gidx, state, steps, final = aux[3]
    pl = C.get("Payload")
    if not (isinstance(pl, tuple) and len(pl) == 3):
        raise Alarm("payload")
    sym = pl[1]
    if final:
        C["Payload"] = ("g", sym, state)
        _set_aux(C, aux[:3] + (True,))
        return True
    st2, wr, mv = gm.G_DELTA.get((state, sym), (gm.HALT, sym, 0))
    steps += 1
    nxt = gidx + mv
    if st2 == gm.HALT or mv == 0 or not (0 <= nxt < 2 * Q):
        C["Payload"] = ("g", wr, st2)
        _set_aux(C, aux[:3] + (True,))
        return True
    C["Payload"] = ("g", wr, None)
    _set_aux(C, aux[:3] + (("run", nxt, st2, steps, steps >= Q),))
    return False


def sim_step(ctx, spec):
    C = ctx.cell("C")
    if (ctx.side == 0) != (C.get("Mv") == 1):
        raise Alarm("side")
    s = C.get("Ph")
    if s not in sg.STAGES or not _int(C.get("Ctr")) or not _int(C.get("Zig")):
        raise Alarm("control")
    for _ in range(8):
        s = C["Ph"]
        st = sg.STAGES[s]
        f = C["Ctr"]
        c = f + C["Zig"]
        mv = C["Mv"]
        md = C.get("Md")
        if md in ("ZA", "ZB", "ZR") and not sg.tolerant_ok(s, c, C):
            raise Alarm("zig")
        if md == "ZR":
            if arrived(c, mv, f, st.dir):
                _front(ctx, spec, C, s, st, f)
                continue
            T, a = f, st.dir
        elif md == "ZA":
            T, a = _clip(st, f + st.dir * spec.Z), st.dir
            if arrived(c, mv, T, a):
                C["Md"] = "ZB"
                continue
        elif md == "ZB":
            T, a = _clip(st, f - st.dir * spec.Z), -st.dir
            if arrived(c, mv, T, a):
                C["Md"] = "ZR"
                continue
        elif md == "G":
            gidx = _aux(C)[3][1]
            if c == gidx:
                if _g_step(ctx, spec, C, st, c):
                    C["Md"] = "ZR"
                continue
            T, a = gidx, None
        elif md == "DG":
            out = -st.dir
            if abs(c - f) > spec.big_starve:
                raise Starve()
            if mv != out:
                C["Md"] = "ZR"
                continue
            if c != f:
                _enter(C, spec)
            if (C.get("Dg") or 0) >= spec.F:
                moved = go(ctx, spec, -out)
                if moved == 0:
                    C["BigDigression"] = FOOT
                    C["Dg"] = 0
                    C["Md"] = "ZR"
                    ctx.events.append(("big", s))
                C["Zig"] += moved
                return
            C["Zig"] += go(ctx, spec, out)
            return
        else:
            raise Alarm("mode")
        C["Zig"] += go(ctx, spec, want(c, mv, T, a))
        return
    raise Alarm("loop")


# ------------------------------------------------------------------ healing

def _summary(C):
    return (C.get("Kind"), C.get("Addr"), C.get("Age"), C.get("Drift"),
            C.get("Rebuild.Addr"), C.get("Rebuild.Sweep"))


def _mark_center(recs):
    votes = Counter(off - rec[4] for off, rec in recs if rec[5] == 1 and _int(rec[4]))
    if sum(votes.values()) < 3:
        return None
    return min(votes.items(), key=lambda kv: (-kv[1], abs(kv[0])))[0]


def _pair_center(recs):
    """Offset of the boundary between the simulated pair's colonies, judged by Kind."""
    votes = Counter((off - rec[1]) % Q for off, rec in recs if _int(rec[1]))
    if not votes:
        return 0
    phase = min(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    count = Counter()
    for off, rec in recs:
        if rec[0] in ("Member0", "Member1"):
            b = off - (off - phase) % Q
            count[(b + Q if rec[0] == "Member0" else b)] += 1
    if not count or max(count.values()) < Q // 2:
        return 0
    return min(count.items(), key=lambda kv: (-kv[1], abs(kv[0])))[0]


def heal_plan(recs, spec):
    """Decide what healing does with the survey [(offset, summary)]."""
    z = _mark_center(recs)
    if z is not None:
        return ("rebuild", z)
    obs = [(off, rec[:4]) for off, rec in recs]
    ft = sg.fit(obs)
    if ft is None or ft.cost > spec.fail_cost:
        return ("rebuild", _pair_center(recs))
    fixes = []
    for off in sorted(ft.bad, reverse=True):
        exp = sg.expected(ft.s, ft.f, off - ft.pa)
        fixes.append((off, tuple(sorted(sg.concrete(exp, ft.d).items()))))
    pol = sg.resume_policy(ft.s)
    st = sg.STAGES[ft.s]
    if pol == "restart":
        ctr, j = st.start, None
    else:
        ctr, j = ft.f, pol[1]
    return ("heal", ft.pa, ft.s, ctr, j, ft.cost, tuple(fixes), ft.f)


def _apply_fix(C, fields):
    for k, v in fields:
        C[k] = v
    for k in DATA_CLEAR + ("Output", "Track", "FrontAddr", "Rebuild.Addr", "Rebuild.Sweep",
                           "Rebuild.Half", "Rebuild.Base", "BigDigression"):
        C[k] = None
    C["Sweep"] = 0


def start_heal(ctx, spec, reason):
    C = ctx.cell("C")
    ctx.events.append(("alarm", reason))
    reset_control(C, Proc="Heal", Ph=1, Ctr=0, Mv=1 if ctx.side == 0 else -1, Pst=0)
    return heal_step(ctx, spec)


def wake(ctx, spec):
    """No valid control record in the pair: start healing with the left cell as control."""
    ctx.side = 0
    C = ctx.cells[0]
    reset_control(C, Head=True, Proc="Heal", Ph=1, Ctr=0, Mv=1, Pst=0)
    ctx.events.append(("wake",))
    return heal_step(ctx, spec)


def _walk(ctx, spec, C, T, a):
    c, mv = C["Ctr"], C["Mv"]
    C["Ctr"] = c + go(ctx, spec, want(c, mv, T, a))


def heal_step(ctx, spec):
    C = ctx.cell("C")
    H = spec.heal_radius
    for _ in range(6):
        ph, c, mv = C.get("Ph"), C.get("Ctr"), C.get("Mv")
        if not _int(c) or mv not in (-1, 1):
            raise Alarm("heal-control")
        if ph == 1:
            if arrived(c, mv, -H, -1):
                C["Ph"] = 2
                C["Acc"] = pack(())
                continue
            return _walk(ctx, spec, C, -H, -1)
        if ph == 2:
            recs = _acc(C)
            nxt = -H + len(recs)
            if arrived(c, mv, nxt, 1):
                _acc_add(C, (c, _summary(C)))
                if len(recs) + 1 == 2 * H:
                    plan = heal_plan(_acc(C), spec)
                    ctx.events.append(("heal_plan", plan[0]) + tuple(plan[1:6]))
                    C["Acc"] = None
                    C["Ph"] = 3
                    if plan[0] == "heal":
                        ctx.events.append(("fit", plan[1], plan[2], plan[7]))
                        plan = plan[:7]
                    _set_aux(C, plan)
                    if plan[0] == "rebuild":
                        return start_rebuild(ctx, spec, center=plan[1])
                continue
            return _walk(ctx, spec, C, nxt, 1)
        if ph == 3:
            plan = _aux(C)
            if not plan or plan[0] != "heal":
                raise Alarm("heal-plan")
            fixes = plan[6]
            if not fixes:
                return _install_sim(ctx, spec, C, plan)
            off, fields = fixes[0]
            if c == off:
                _apply_fix(C, fields)
                _set_aux(C, plan[:6] + (fixes[1:],))
                continue
            return _walk(ctx, spec, C, off, None)
        raise Alarm("heal-phase")
    raise Alarm("heal-loop")


def _install_sim(ctx, spec, C, plan):
    _, pa, s, ctr, j, _, _ = plan
    c_rel = C["Ctr"] - pa
    mv = C["Mv"]
    reset_control(C, Proc="Sim", Ph=s, Ctr=ctr, Zig=c_rel - ctr, Md="ZR", Mv=mv, Dg=0, Par=0, Pst=0,
                  J=j, Dir=sg.stage_drift(s))
    ctx.events.append(("resume", s, ctr, j, pa))
    return sim_step(ctx, spec)


# ------------------------------------------------------------------ rebuilding

def start_rebuild(ctx, spec, center=0):
    """Start rebuilding with its origin at `center`, given in the healing frame."""
    C = ctx.cell("C")
    c = C.get("Ctr") if C.get("Proc") == "Heal" else 0
    if C.get("Proc") != "Heal":
        center = 0
    ctx.events.append(("rebuild", center, C.get("Proc") == "Heal"))
    reset_control(C, Proc="Rebuild", Ph=1, Ctr=(c if _int(c) else 0) - (center if center else 0),
                  Mv=C.get("Mv"), Pst=0)
    if C["Mv"] not in (-1, 1):
        C["Mv"] = 1 if ctx.side == 0 else -1
    return rebuild_step(ctx, spec)


def rebuild_plan(recs, spec):
    """Writes that turn the surveyed area into a fresh work-period start."""
    W = spec.rebuild_radius
    got = {off: rec for off, rec in recs}
    votes = Counter((off - rec[1]) % Q for off, rec in recs if _int(rec[1]))
    phase = min(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0] if votes else 0
    bases = [b for b in range(-W - Q, W) if (b - phase) % Q == 0 and b >= -W and b + Q <= W]
    if len(bases) < 2:
        bases = list(range(-W, W, Q))

    def members(b):
        return sum(got.get(b + a, (None,))[0] == "Member0" for a in range(Q))
    pairs = [b for b in bases if b + Q in bases]
    pa = max(pairs, key=lambda b: (members(b), -abs(b))) if pairs else bases[0]
    info = {}
    for b in bases:
        word = tuple(got[b + a][2] if b + a in got else None for a in range(Q))
        try:
            sym = spec.code.decode(word)
            if not isinstance(sym, dict):
                raise DecodeFailure("not a cell")
        except DecodeFailure:
            sym = NEW0
        enc = spec.code.encode(sym)
        for a in range(Q):
            info[b + a] = enc[a]
    writes = []
    for off in range(W - 1, -W - 1, -1):
        fields = sg.concrete(sg.expected(1, 0, off - pa))
        if off in info:
            fields["Info"] = info[off]
        writes.append((off, tuple(sorted(fields.items()))))
    return ("writes", pa, tuple(writes))


def rebuild_step(ctx, spec):
    C = ctx.cell("C")
    W = spec.rebuild_radius
    for _ in range(6):
        ph, c, mv = C.get("Ph"), C.get("Ctr"), C.get("Mv")
        if not _int(c) or mv not in (-1, 1):
            raise Alarm("rebuild-control")
        if ph == 1:
            if arrived(c, mv, -W, -1):
                C["Ph"] = 2
                C["Acc"] = pack(())
                continue
            return _walk(ctx, spec, C, -W, -1)
        if ph == 2:
            recs = _acc(C)
            nxt = -W + len(recs)
            if arrived(c, mv, nxt, 1):
                _acc_add(C, (c, (C.get("Kind"), C.get("Addr"), C.get("Info"))))
                C["Rebuild.Addr"] = c
                C["Rebuild.Sweep"] = 1
                if len(recs) + 1 == 2 * W:
                    plan = rebuild_plan(_acc(C), spec)
                    C["Acc"] = None
                    C["Ph"] = 3
                    _set_aux(C, plan)
                continue
            return _walk(ctx, spec, C, nxt, 1)
        if ph == 3:
            plan = _aux(C)
            if not plan or plan[0] != "writes":
                raise Alarm("rebuild-plan")
            _, pa, writes = plan
            if not writes:
                ctx.events.append(("rebuilt", pa))
                return _install_sim(ctx, spec, C, ("heal", pa, 1, 0, None, 0, ()))
            off, fields = writes[0]
            if c == off:
                _apply_fix(C, fields)
                _set_aux(C, ("writes", pa, writes[1:]))
                continue
            return _walk(ctx, spec, C, off, None)
        raise Alarm("rebuild-phase")
    raise Alarm("rebuild-loop")


# ------------------------------------------------------------------ dispatch

def guarded(fn, spec):
    """Wrap a primitive: alarms start healing, starvation starts rebuilding."""
    def prim(ctx):
        ctx.vars["wpb"] = False
        for cell in ctx.cells:
            # a cell the tape created on the fly becomes an ordinary blank cell once visited
            if cell.get("Kind") == "New":
                cell["Kind"] = "Outer"
        try:
            fn(ctx, spec)
        except Alarm as e:
            ctx.vars["wpb"] = False
            try:
                start_heal(ctx, spec, e.reason)
            except (Alarm, Starve):
                _fallback(ctx)
        except Starve:
            ctx.vars["wpb"] = False
            try:
                start_rebuild(ctx, spec)
            except (Alarm, Starve):
                _fallback(ctx)
    return prim


def _fallback(ctx):
    C = ctx.cell("C")
    ctx.events.append(("alarm", "fallback"))
    reset_control(C, Proc="Heal", Ph=1, Ctr=0, Mv=1 if ctx.side == 0 else -1, Pst=0)
    ctx.vars["d"] = C["Mv"]


def ret_prim(ctx):
    """Level >= 2: the return half of a stay step; the other cell joins the booting area."""
    C, O = ctx.cell("C"), ctx.cell("O")
    O["Kind"] = "Booting"
    a = C.get("Addr")
    O["Addr"] = a + 1 if _int(a) else None
    C["Ret"] = None


def make_prims(spec):
    return {
        "wake": guarded(wake, spec),
        "sim": guarded(sim_step, spec),
        "heal": guarded(heal_step, spec),
        "rebuild": guarded(rebuild_step, spec),
        "ret": ret_prim,
    }
