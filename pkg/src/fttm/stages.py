"""Stage table of a level-1 work period and the expected healthy configuration.

Positions are relative to the base pa of the left colony of the current pair, so the
pair occupies [0, 2Q).  A stage sweeps its span once in its direction; the Age of a
processed cell becomes the stage mark.  The model gives, for every stage s, front f and
position r, the core fields (Kind, Addr, Age, Drift) a healthy tape must show.  ANY
marks a field the model does not constrain.
"""
from collections import Counter
from dataclasses import dataclass

Q = 16
NPAIR = 2 * Q
NR = 28           # program symbols on the Work track; the header takes the last 4 cells
ANY = object()


@dataclass(frozen=True)
class Stage:
    s: int
    name: str
    dir: int
    lo: int
    hi: int
    mark: int
    group: object = None     # 0 for the compliance group, j for repetition j

    @property
    def start(self):
        return self.lo if self.dir == 1 else self.hi - 1

    @property
    def end(self):
        return self.hi - 1 if self.dir == 1 else self.lo

    def contains(self, r):
        return self.lo <= r < self.hi

    def processed(self, f, r):
        """Is r strictly behind a front at f?"""
        return self.contains(r) and (r < f if self.dir == 1 else r > f)


REP_NAMES = ("D", "W", "H", "I", "PC", "PG", "PR", "E")


def _table():
    st = {}

    def add(s, name, lo=0, hi=NPAIR, mark=None, group=None, d=None):
        st[s] = Stage(s, name, d if d is not None else (1 if s % 2 else -1), lo, hi,
                      s if mark is None else mark, group)

    add(1, "CG")
    for j in (1, 2, 3):
        add(1 + j, "CW%d" % j, group=0)
    add(5, "CFIX")
    for j in (1, 2, 3):
        for i, nm in enumerate(REP_NAMES):
            add(6 + 8 * (j - 1) + i, "%s%d" % (nm, j), group=j)
    add(30, "MAJ")
    add(31, "T1", 0, 3 * Q, d=1)
    add(32, "T2", Q, 3 * Q, mark=0, d=-1)
    add(34, "T1'", -Q, 0, d=-1)
    add(35, "T2'", -Q, NPAIR, mark=0, d=1)
    add(36, "T3'", -Q, NPAIR, mark=0, d=-1)
    return st


STAGES = _table()
ORDER = {1: list(range(1, 31)) + [31, 32], -1: list(range(1, 31)) + [34, 35, 36]}
TRANSFER = {1: (31, 32), -1: (34, 35, 36)}
FIT_STAGES = list(range(1, 31)) + [31, 32, 34, 35]      # T3' looks like the next period's start


def rep_stage(j, name):
    return 6 + 8 * (j - 1) + REP_NAMES.index(name)


def stage_drift(s):
    if s in (31, 32):
        return 1
    if s in (34, 35, 36):
        return -1
    return None


def next_stage(s, d=None):
    """Following stage, or None at the end of the work period."""
    if s < 30:
        return s + 1
    if s == 30:
        return 31 if d != -1 else 34
    if s in (31, 34, 35):
        return s + 1
    return None


def prev_stage(s):
    if s == 1:
        return 0
    if s in (31, 34):
        return 30
    return s - 1


def shift_after(s):
    """Change of pa when the work period ends after stage s."""
    return {32: Q, 36: -Q}.get(s, 0)


def resume_policy(s):
    """How a stage continues after healing: 'restart' or ('skip', group)."""
    g = STAGES[s].group
    if g == 0:
        return ("skip", 0)
    if g is not None and STAGES[s].name[0] != "D":
        return ("skip", g)
    return "restart"


# ------------------------------------------------------------------ expected cores

def _region(r):
    if r < -Q:
        return "L"
    if r < 0:
        return "A"
    if r < Q:
        return "M0"
    if r < NPAIR:
        return "M1"
    if r < 3 * Q:
        return "B"
    return "R"


_INITIAL = {"L": ("Outer", ANY, 1), "A": ("Outer", ANY, 1), "M0": ("Member0", 0, None),
            "M1": ("Member1", 0, None), "B": ("Outer", ANY, -1), "R": ("Outer", ANY, -1)}


def _effect(s, reg, kind, age, drift):
    if 1 <= s <= 29:
        return kind, s, drift
    if s == 30:
        return kind, 30, ANY
    if s == 31:
        k = {"M0": "Outer", "M1": "Member0", "B": "Member1"}[reg]
        return k, 31, 1
    if s == 32:
        return kind, 0, None
    if s == 34:
        return "Member0", 34, -1
    if s == 35:
        if reg == "A":
            return kind, 0, None
        if reg == "M0":
            return "Member1", 0, None
        return "Outer", 0, -1
    return kind, 0, drift


def state_after(r, s_done, d):
    """(Kind, Addr, Age, Drift) of position r once stages up to s_done have passed it."""
    reg = _region(r)
    kind, age, drift = _INITIAL[reg]
    if s_done:
        order = ORDER[d if d in (1, -1) else 1]
        for s in order:
            st = STAGES[s]
            if st.contains(r):
                kind, age, drift = _effect(s, reg, kind, age, drift)
            if s == s_done:
                break
    return (kind, r % Q, age, drift)


_EXP = {}
WINDOW = range(-3 * Q, 4 * Q)


def _build():
    for s, st in STAGES.items():
        d = stage_drift(s) or 1
        for r in WINDOW:
            done = state_after(r, s, d)
            before = state_after(r, prev_stage(s), d) if st.contains(r) else done
            _EXP[(s, r, True)] = done
            _EXP[(s, r, False)] = before
    for r in WINDOW:
        _EXP[(0, r, True)] = _EXP[(0, r, False)] = state_after(r, 0, 1)


_build()

CORE4 = ("Kind", "Addr", "Age", "Drift")


def expected(s, f, r):
    """Expected core tuple at r for stage s with front f (None outside the modelled window)."""
    if r not in WINDOW:
        r2 = r % Q + (-3 * Q if r < 0 else 3 * Q)
        return _EXP[(s, r2, STAGES[s].processed(f, r) if s else False)]
    return _EXP[(s, r, STAGES[s].processed(f, r) if s else False)]


def _same(a, b):
    return a is ANY or (type(a) is type(b) and a == b)


def core_of(cell):
    return tuple(cell.get(k) for k in CORE4)


def matches(exp, core):
    return all(_same(e, v) for e, v in zip(exp, core))


def tolerant_ok(s, r, cell):
    """Zig check: the cell shows either the processed or the unprocessed core for stage s."""
    if r not in WINDOW:
        return True
    core = core_of(cell)
    return matches(_EXP[(s, r, True)], core) or matches(_EXP[(s, r, False)], core)


def concrete(exp, d=None):
    kind, addr, age, drift = exp
    return {"Kind": kind, "Addr": addr, "Age": 0 if age is ANY else age,
            "Drift": (d if d is not None else None) if drift is ANY else drift}


# ------------------------------------------------------------------ fitting

@dataclass
class Fit:
    cost: int
    pa: int            # relative to the origin of the observations
    s: int
    f: int
    bad: tuple         # observation offsets that disagree with the fit

    @property
    def d(self):
        return stage_drift(self.s)


def addr_phase(obs):
    votes = Counter((off - core[1]) % Q for off, core in obs
                    if isinstance(core[1], int) and not isinstance(core[1], bool))
    if not votes:
        return None
    return min(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def fit(obs, stages=FIT_STAGES):
    """Best (pa, s, f) for observations [(offset, core tuple)] of existing cells.

    Minimizes the number of disagreeing cells; ties go to later progress.
    """
    if not obs:
        return None
    phase = addr_phase(obs)
    if phase is None:
        return None
    lo = min(o for o, _ in obs)
    hi = max(o for o, _ in obs)
    best = None
    pa = phase + ((lo - 3 * Q - phase) // Q) * Q
    rank = {s: i for i, s in enumerate(FIT_STAGES)}
    while pa <= hi + Q:
        rel = [(off - pa, core) for off, core in obs]
        for s in stages:
            st = STAGES[s]
            static = 0
            inside = []
            for r, core in rel:
                if st.contains(r):
                    inside.append((r, matches(_EXP[(s, r, True)], core), matches(_EXP[(s, r, False)], core)))
                else:
                    static += not matches(expected(s, 0, r), core)
            # cost as a function of the front: scan positions in sweep order
            inside.sort(key=lambda x: x[0] * st.dir)
            cu = sum(not u for _, _, u in inside)
            cp = 0
            fronts = range(st.lo, st.hi) if st.dir == 1 else range(st.hi - 1, st.lo - 1, -1)
            pos_idx = 0
            for f in fronts:
                while pos_idx < len(inside) and inside[pos_idx][0] * st.dir < f * st.dir:
                    _, p, u = inside[pos_idx]
                    cp += not p
                    cu -= not u
                    pos_idx += 1
                cost = static + cp + cu
                key = (cost, -rank[s], -abs(f - st.start), abs(pa))
                if best is None or key < best[0]:
                    best = (key, pa, s, f)
        pa += Q
    (cost, _, _, _), pa, s, f = best
    bad = tuple(off for off, core in obs if not matches(expected(s, f, off - pa), core))
    return Fit(cost, pa, s, f, bad)
