"""Sparse tapes with sized cell bodies, configurations, transitions and histories."""
import bisect
import json
from dataclasses import dataclass, field

from .symbols import (BAD, NEW0, SCHEMA_VERSION, VAC, decode_symbol, encode_symbol,
                      is_cell)


class TransitionError(ValueError):
    pass


class HistoryViolation(ValueError):
    """Raised by record_step; `invariant` names the failed history condition."""

    def __init__(self, invariant, t, detail):
        super().__init__("%s violated at t=%s: %s" % (invariant, t, detail))
        self.invariant = invariant
        self.t = t
        self.detail = detail


def _is_new_kind(s):
    return is_cell(s) and s.get("Kind") == "New"


class Tape:
    """Map from leftmost body position to symbol; absent positions are Vac.

    A Bad entry marks a single disordered position (it has no body).
    """

    __slots__ = ("B", "cells", "keys")

    def __init__(self, B=1, cells=None):
        if B < 1:
            raise ValueError("body size must be positive")
        self.B = B
        self.cells = {}
        self.keys = []
        for p, s in sorted((cells or {}).items()):
            self.set(p, s)

    def copy(self):
        t = Tape.__new__(Tape)
        t.B = self.B
        t.cells = dict(self.cells)
        t.keys = list(self.keys)
        return t

    def __len__(self):
        return len(self.cells)

    def __eq__(self, other):
        return isinstance(other, Tape) and self.B == other.B and self.cells == other.cells

    def get(self, p):
        return self.cells.get(p, VAC)

    def items(self):
        return [(k, self.cells[k]) for k in self.keys]

    def _overlaps(self, p, s):
        B = self.B
        i = bisect.bisect_left(self.keys, p - B + 1)
        while i < len(self.keys) and self.keys[i] < p + B:
            q = self.keys[i]
            if q != p:
                other = self.cells[q]
                if other is BAD or s is BAD:
                    if s is BAD and other is not BAD and q <= p < q + B:
                        return q
                    if other is BAD and p <= q < p + B:
                        return q
                else:
                    return q
            i += 1
        return None

    def set(self, p, s):
        if s is VAC:
            if p in self.cells:
                del self.cells[p]
                del self.keys[bisect.bisect_left(self.keys, p)]
            return
        if p not in self.cells:
            q = self._overlaps(p, s)
            if q is not None:
                raise TransitionError("cell body at %d would intersect the one at %d" % (p, q))
            bisect.insort(self.keys, p)
        self.cells[p] = s

    def cell_positions(self):
        return [k for k in self.keys if self.cells[k] is not BAD]

    def is_clean(self, lo, hi):
        """True iff no Bad position lies in [lo, hi)."""
        i = bisect.bisect_left(self.keys, lo)
        while i < len(self.keys) and self.keys[i] < hi:
            if self.cells[self.keys[i]] is BAD:
                return False
            i += 1
        return True

    def right_neighbor(self, p):
        """The cell to the right of the cell at p whose body is at distance < B, or None."""
        B = self.B
        i = bisect.bisect_right(self.keys, p)
        while i < len(self.keys):
            q = self.keys[i]
            if q >= p + 2 * B:
                return None
            if self.cells[q] is BAD:
                return None
            if q >= p + B and self.is_clean(p + B, q):
                return q
            i += 1
        return None

    def left_neighbor(self, p):
        B = self.B
        i = bisect.bisect_left(self.keys, p) - 1
        while i >= 0:
            q = self.keys[i]
            if q <= p - 2 * B:
                return None
            if self.cells[q] is BAD:
                return None
            if q <= p - B and self.is_clean(q + B, p):
                return q
            i -= 1
        return None

    def bodies_disjoint(self):
        ks = self.cell_positions()
        return all(b - a >= self.B for a, b in zip(ks, ks[1:]))

    def span(self):
        if not self.keys:
            return None
        return (self.keys[0], self.keys[-1] + self.B)


class Configuration:
    __slots__ = ("tape", "pos", "cur")

    def __init__(self, tape, pos, cur):
        self.tape = tape
        self.pos = pos
        self.cur = tuple(cur)

    def copy(self):
        return Configuration(self.tape.copy(), self.pos, self.cur)

    def __eq__(self, other):
        return (isinstance(other, Configuration) and self.tape == other.tape
                and self.pos == other.pos and self.cur == other.cur)

    @property
    def B(self):
        return self.tape.B

    def pair(self):
        x, y = self.cur
        return self.tape.get(x), self.tape.get(y)

    def adjacent(self):
        x, y = self.cur
        return y - x == self.tape.B

    def cur_ok(self):
        """Configuration invariant: a clean h+[-4B,4B) must contain the current pair."""
        B = self.B
        lo, hi = self.pos - 4 * B, self.pos + 4 * B
        if not self.tape.is_clean(lo, hi):
            return True
        return all(lo <= c and c + B <= hi for c in self.cur)


def apply_transition(cfg, action, fault=False):
    """Apply ((a', b'), d) to cfg in place and return the list of (pos, old, new) changes.

    For d = +1, a' goes to the current cell x.  If b' is not New it goes to y and
    the pair shifts right, creating an adjacent new_0 neighbour when y has none.
    If b' is New (only for a non-adjacent pair) y is erased and a fresh cell
    adjacent to x takes its place, inheriting Pass from y.  d = -1 is the mirror
    image: b' always lands on y and a' decides between shifting and replacement.
    """
    (a2, b2), d = action
    if d not in (-1, 1):
        raise TransitionError("direction must be -1 or +1, got %r" % (d,))
    if not fault:
        for s in (a2, b2):
            if s is VAC or s is BAD or not is_cell(s):
                raise TransitionError("transition function may not write Vac or Bad")
    tape = cfg.tape
    B = tape.B
    x, y = cfg.cur
    adjacent = (y - x == B)
    changes = []

    def put(p, s):
        old = tape.get(p)
        if old is s:
            return
        tape.set(p, s)
        changes.append((p, old, s))

    def clear(lo, hi):
        # anything whose body meets [lo, hi) gives way to a newly created cell
        for p in list(tape.keys):
            s = tape.cells[p]
            w = 1 if s is BAD else B
            if p < hi and p + w > lo:
                put(p, VAC)

    def replacing(s):
        if not _is_new_kind(s):
            return False
        if adjacent:
            if fault:
                return False
            raise TransitionError("replacement requested on an adjacent pair")
        return True

    if d == 1:
        put(x, a2)
        if replacing(b2):
            old = tape.get(y)
            inherited = dict(b2)
            if is_cell(old):
                inherited["Pass"] = old.get("Pass", 0)
            put(y, VAC)
            clear(x + B, x + 2 * B)
            put(x + B, inherited)
            cfg.cur = (x, x + B)
            cfg.pos = x
        else:
            put(y, b2)
            z = tape.right_neighbor(y)
            if z is None:
                z = y + B
                clear(z, z + B)
                put(z, NEW0)
            cfg.cur = (y, z)
            cfg.pos = y
    else:
        put(y, b2)
        if replacing(a2):
            old = tape.get(x)
            inherited = dict(a2)
            if is_cell(old):
                inherited["Pass"] = old.get("Pass", 0)
            put(x, VAC)
            clear(y - B, y)
            put(y - B, inherited)
            cfg.cur = (y - B, y)
            cfg.pos = y - B
        else:
            put(x, a2)
            w = tape.left_neighbor(x)
            if w is None:
                w = x - B
                clear(w, x)
                put(w, NEW0)
            cfg.cur = (w, x)
            cfg.pos = w
    return changes


def interval_view(cfg, lo, hi):
    """Restriction of cfg to cells whose bodies lie in [lo, hi)."""
    if not (lo <= cfg.pos < hi):
        raise ValueError("head position %d outside [%d, %d)" % (cfg.pos, lo, hi))
    B = cfg.B
    cells = {p: s for p, s in cfg.tape.items()
             if lo <= p and p + (1 if s is BAD else B) <= hi}
    return Configuration(Tape(B, cells), cfg.pos, cfg.cur)


def merge_views(views):
    """Reassemble overlapping interval views into one configuration (first view's head)."""
    base = views[0]
    t = Tape(base.B)
    for v in views:
        for p, s in v.tape.items():
            if p in t.cells and t.cells[p] != s:
                raise ValueError("views disagree at %d" % p)
            t.set(p, s)
    return Configuration(t, base.pos, base.cur)


# --------------------------------------------------------------------- histories

@dataclass
class StepRecord:
    t: int
    h: int
    cur: tuple
    delta: tuple
    fault: bool = False


@dataclass
class HistoryTrace:
    """Initial configuration plus one record per step; checks history rules on append."""
    initial: Configuration
    T: int = 1
    records: list = field(default_factory=list)
    noise: set = field(default_factory=set)
    tags: dict = field(default_factory=dict)
    check: bool = True

    def __post_init__(self):
        self._h = self.initial.pos
        self._cur = self.initial.cur
        self._last_switch = 0
        self._dirty_since_switch = False
        self._B = self.initial.B
        self._bad = {p for p, s in self.initial.tape.items() if s is BAD}

    @property
    def t(self):
        return len(self.records)

    def heads(self):
        return [self.initial.pos] + [r.h for r in self.records]

    def append(self, h, cur, delta, fault=False):
        t = len(self.records) + 1
        if self.check:
            _check_step(self._B, self.T, t, self._h, h, self._cur, cur, delta, fault,
                        self._last_switch, self._dirty_since_switch, self._bad)
        for p, _old, new in delta:
            if new is BAD:
                self._bad.add(p)
            else:
                self._bad.discard(p)
        switching = (not fault) and (bool(delta) or tuple(cur) != self._cur)
        if fault or self._bad:
            self._dirty_since_switch = True
        if switching:
            self._last_switch = t
            self._dirty_since_switch = False
        self.records.append(StepRecord(t, h, tuple(cur), tuple(delta), fault))
        if fault:
            self.noise.add((self._h, t - 1))
        self._h = h
        self._cur = tuple(cur)

    def configuration_at(self, t):
        cfg = self.initial.copy()
        for r in self.records[:t]:
            for p, _old, new in r.delta:
                cfg.tape.set(p, new) if new is not VAC else cfg.tape.set(p, VAC)
            cfg.pos = r.h
            cfg.cur = r.cur
        return cfg

    def replay(self):
        """Yield (t, configuration) for t = 0..len; the configuration object is reused."""
        cfg = self.initial.copy()
        yield 0, cfg
        for r in self.records:
            for p, _old, new in r.delta:
                cfg.tape.set(p, new)
            cfg.pos = r.h
            cfg.cur = r.cur
            yield r.t, cfg


def _check_step(B, T, t, h0, h1, cur0, cur1, delta, fault, last_switch, dirty, bad):
    if abs(h1 - h0) > 1:
        raise HistoryViolation("speed", t, "head moved from %d to %d" % (h0, h1))
    if not fault:
        lo0, hi0 = h0 - 2 * B, h0 + 2 * B
        lo1, hi1 = h1 - 2 * B, h1 + 2 * B
        for p, old, new in delta:
            w = 1 if (new is BAD or old is BAD) else B
            inside = (lo0 <= p and p + w <= hi0) or (lo1 <= p and p + w <= hi1)
            if not inside:
                raise HistoryViolation("locality", t, "change at %d with head %d->%d" % (p, h0, h1))
    switching = (not fault) and (bool(delta) or tuple(cur1) != tuple(cur0))
    if switching:
        if cur1[0] != h1:
            raise HistoryViolation("head-on-pair", t, "cur-cell %r but head at %d" % (cur1, h1))
        if not dirty and t - last_switch > T:
            raise HistoryViolation("dwell", t, "dwell period %d > T=%d" % (t - last_switch, T))


def record_step(trace, before, after, fault=False, delta=None):
    """Append the step before -> after to trace, rejecting history violations."""
    if delta is None:
        delta = diff_tapes(before.tape, after.tape)
    trace.append(after.pos, after.cur, delta, fault)
    return trace


def diff_tapes(a, b):
    out = []
    for p in sorted(set(a.cells) | set(b.cells)):
        x, y = a.get(p), b.get(p)
        if x is not y and x != y:
            out.append((p, x, y))
    return out


def check_history(trace):
    """From-scratch re-check of a whole trace; returns the first violation or None."""
    fresh = HistoryTrace(trace.initial.copy(), T=trace.T)
    try:
        for r in trace.records:
            fresh.append(r.h, r.cur, r.delta, r.fault)
    except HistoryViolation as e:
        return e
    return None


# --------------------------------------------------------------------- file formats

def snapshot_text(cfg):
    head = {"B": cfg.B, "schema": SCHEMA_VERSION, "pos": cfg.pos, "cur": list(cfg.cur)}
    lines = [json.dumps(head, sort_keys=True, separators=(",", ":"))]
    for p, s in cfg.tape.items():
        lines.append(json.dumps([p, encode_symbol(s)], separators=(",", ":")))
    return "\n".join(lines) + "\n"


def snapshot_load(text):
    lines = text.strip().splitlines()
    head = json.loads(lines[0])
    if head["schema"] != SCHEMA_VERSION:
        raise ValueError("schema version %r not supported" % head["schema"])
    tape = Tape(head["B"])
    for ln in lines[1:]:
        p, s = json.loads(ln)
        tape.set(p, decode_symbol(s))
    return Configuration(tape, head["pos"], tuple(head["cur"]))


def trace_lines(trace):
    """One JSON list per step: [t, h, cur0, cur1, fault, [[pos, old, new], ...]]."""
    for r in trace.records:
        yield json.dumps([r.t, r.h, r.cur[0], r.cur[1], int(r.fault),
                          [[p, encode_symbol(o), encode_symbol(n)] for p, o, n in r.delta]],
                         separators=(",", ":"))


def write_trace(trace, fh):
    fh.write(snapshot_text(trace.initial))
    fh.write("---\n")
    for ln in trace_lines(trace):
        fh.write(ln + "\n")


def read_trace(fh, T=1):
    text = fh.read()
    snap, _, body = text.partition("---\n")
    tr = HistoryTrace(snapshot_load(snap), T=T, check=False)
    for ln in body.splitlines():
        if not ln:
            continue
        t, h, c0, c1, f, dl = json.loads(ln)
        tr.append(h, (c0, c1), [(p, decode_symbol(o), decode_symbol(n)) for p, o, n in dl], bool(f))
    return tr
