"""Noise sets: iid sampling, isolation, stratification into levels, bursts, sparsity estimates."""
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np


class PreconditionError(ValueError):
    pass


def sample_noise(eps, region, seed):
    """Each point of region = (x0, x1, t0, t1) (half-open) is faulty with probability eps."""
    if not (0 <= eps < 1):
        raise ValueError("eps must lie in [0, 1)")
    x0, x1, t0, t1 = region
    if eps == 0:
        return frozenset()
    rng = np.random.default_rng(seed)
    hits = rng.random((x1 - x0, t1 - t0)) < eps
    xs, ts = np.nonzero(hits)
    return frozenset(zip((xs + x0).tolist(), (ts + t0).tolist()))


def project_to_spacetime(fault_times, head_positions):
    """{(h(t), t)} for the given fault times; head_positions is a mapping or callable."""
    get = head_positions if callable(head_positions) else head_positions.__getitem__
    out = set()
    for t in fault_times:
        try:
            out.add((get(t), t))
        except (KeyError, IndexError):
            raise PreconditionError("no head position recorded for time %r" % (t,))
    return frozenset(out)


def in_ball(y, x, r):
    return abs(y[0] - x[0]) < r[0] and abs(y[1] - x[1]) < r[1]


class _Grid:
    """Bucket index over a point set for box queries of a fixed maximal radius."""

    def __init__(self, pts, r):
        self.w = (max(1, int(r[0])), max(1, int(r[1])))
        self.b = defaultdict(list)
        for p in pts:
            self.b[(p[0] // self.w[0], p[1] // self.w[1])].append(p)

    def near(self, x, r):
        w0, w1 = self.w
        for i in range(int((x[0] - r[0]) // w0), int((x[0] + r[0]) // w0) + 1):
            for j in range(int((x[1] - r[1]) // w1), int((x[1] + r[1]) // w1) + 1):
                for p in self.b.get((i, j), ()):
                    if in_ball(p, x, r):
                        yield p


def is_isolated(x, E, r, r_star):
    """True iff every point of E that is r_star-close to x is also r-close."""
    if x not in E:
        raise PreconditionError("point %r is not in the set" % (x,))
    return all(in_ball(y, x, r) for y in E if in_ball(y, x, r_star))


def isolated_points(E, r, r_star):
    E = set(E)
    if not E:
        return set()
    g = _Grid(E, r_star)
    return {x for x in E if all(in_ball(y, x, r) for y in g.near(x, r_star))}


# ------------------------------------------------------------------ schedules

@dataclass
class NoiseSchedule:
    B: tuple
    S: tuple
    beta: float
    gamma: float
    mode: str = "toy"
    marg: object = None
    spill: object = None

    def r(self, k):
        return (self.beta * self.B[k - 1], self.beta * self.S[k - 1])

    def r_star(self, k):
        return (self.gamma * self.B[k], self.gamma * self.S[k])

    def checks(self):
        """(name, holds) for each inequality the sparsity definition asks for."""
        out = [("gamma > 1", self.gamma > 1), ("beta >= 3 gamma", self.beta >= 3 * self.gamma),
               ("B_1 = S_1 = 1", self.B[0] == 1 and self.S[0] == 1)]
        if self.marg is not None and self.spill is not None:
            out.append(("gamma > 4(marg + spill)", self.gamma > 4 * (self.marg + self.spill)))
        for k in range(1, len(self.B)):
            out.append(("B_%d/B_%d >= 2 beta" % (k + 1, k), self.B[k] / self.B[k - 1] >= 2 * self.beta))
            out.append(("S_%d/S_%d >= 2 beta" % (k + 1, k), self.S[k] / self.S[k - 1] >= 2 * self.beta))
        return out

    def validate(self):
        """Raise in faithful mode; return the list of waived inequalities in toy mode."""
        failed = [n for n, ok in self.checks() if not ok]
        if failed and self.mode != "toy":
            raise PreconditionError("schedule violates: " + "; ".join(failed))
        return failed

    def margin(self, k):
        """Radius beyond the level-k ball that decides E^(k) inside the ball."""
        m0 = sum(self.gamma * self.B[i] for i in range(1, k))
        m1 = sum(self.gamma * self.S[i] for i in range(1, k))
        return (int(math.ceil(m0)), int(math.ceil(m1)))


# time grows one level late: at eps = 0.01 a square 2x schedule only halves the
# occupation frequency at the first level, this one cuts it by ~6x
TOY_NOISE = NoiseSchedule(B=(1, 2, 4, 8, 16), S=(1, 1, 2, 4, 8), beta=1, gamma=1)


@dataclass
class StratifiedNoise:
    base: frozenset
    residues: list                 # residues[k-1] = E^(k)
    bursts: list = field(default_factory=list)   # bursts[k-1]: bursts deleted at level k
    sparse_level: object = None    # smallest k with E^(k+1) empty, or None
    waived: list = field(default_factory=list)

    def level(self, k):
        return self.residues[k - 1]

    def report(self):
        lines = []
        for k, res in enumerate(self.residues, start=1):
            bl = self.bursts[k - 1] if k - 1 < len(self.bursts) else []
            ext = max((extent(b) for b in bl), default=(0, 0))
            lines.append("level %d residue %d bursts %d max_extent %dx%d" % (k, len(res), len(bl), ext[0], ext[1]))
        lines.append("sparse_level %s" % (self.sparse_level if self.sparse_level is not None else "not-sparse"))
        return "\n".join(lines)


def extent(points):
    xs = [p[0] for p in points]
    ts = [p[1] for p in points]
    return (max(xs) - min(xs) + 1, max(ts) - min(ts) + 1)


def stratify(E, schedule, k_max):
    waived = schedule.validate()
    cur = frozenset(E)
    residues = [cur]
    bursts = []
    sparse = 0 if not cur else None
    for k in range(1, k_max + 1):
        if k >= len(schedule.B):
            break
        r, rs = schedule.r(k), schedule.r_star(k)
        iso = isolated_points(cur, r, rs)
        bursts.append(_classes(iso, r))
        cur = frozenset(cur - iso)
        residues.append(cur)
        if sparse is None and not cur:
            sparse = k
    return StratifiedNoise(frozenset(E), residues, bursts, sparse, waived)


def _classes(E, r):
    """Partition by y ~ x iff y in B(x, r); assumes the relation is an equivalence."""
    left = set(E)
    g = _Grid(E, r) if E else None
    out = []
    while left:
        x = min(left)
        cls = {y for y in g.near(x, r) if y in left}
        cls.add(x)
        left -= cls
        out.append(frozenset(cls))
    return out


def partition_bursts(E, r, r_star):
    """Bursts of an (r, r_star)-sparse set, with both burst-lemma assertions checked."""
    E = frozenset(E)
    if not E:
        return []
    iso = isolated_points(E, r, r_star)
    if iso != E:
        w = min(E - iso)
        raise PreconditionError("point %r is not (r, r*)-isolated" % (w,))
    cls = _classes(E, r)
    violations = burst_lemma_violations(cls, r, r_star)
    if violations:
        raise AssertionError("burst lemma violated: %r" % (violations[:3],))
    return sorted(cls, key=min)


def burst_lemma_violations(classes, r, r_star):
    """Witnesses against the two burst-lemma assertions (empty when both hold)."""
    out = []
    for c in classes:
        e = extent(c)
        if e[0] > r[0] or e[1] > r[1]:
            out.append(("fit", min(c), e))
    # a rectangle of size a x b meets two classes iff they hold points closer than (a, b)
    a, b = r_star[0] - r[0], r_star[1] - r[1]
    owner = {}
    for i, c in enumerate(classes):
        for p in c:
            owner[p] = i
    if owner:
        g = _Grid(owner, (a, b))
        for p, i in owner.items():
            for q in g.near(p, (a, b)):
                if owner[q] != i:
                    out.append(("separation", p, q))
    return out


def rectangle_sweep_violations(classes, size, region):
    """Exhaustive check: every size[0] x size[1] rectangle inside region meets <= 1 class."""
    x0, x1, t0, t1 = region
    owner = {p: i for i, c in enumerate(classes) for p in c}
    a, b = size
    bad = []
    for u in range(x0 - a + 1, x1):
        for v in range(t0 - b + 1, t1):
            seen = set()
            for p, i in owner.items():
                if u <= p[0] < u + a and v <= p[1] < v + b:
                    seen.add(i)
            if len(seen) > 1:
                bad.append((u, v))
    return bad


# ------------------------------------------------------------------ Monte Carlo

@dataclass
class Estimate:
    k: int
    trials: int
    hits: int

    @property
    def freq(self):
        return self.hits / self.trials

    @property
    def sigma(self):
        p = self.freq
        return math.sqrt(max(p * (1 - p), 1.0 / self.trials) / self.trials)

    def interval(self, z=3.0):
        return (max(0.0, self.freq - z * self.sigma), min(1.0, self.freq + z * self.sigma))


def level_ball_region(schedule, k, region=None):
    """Half-open sampling region around the origin that decides the level-k ball."""
    m = schedule.margin(k)
    need = (-(schedule.B[k - 1] - 1) - m[0], schedule.B[k - 1] + m[0],
            -(schedule.S[k - 1] - 1) - m[1], schedule.S[k - 1] + m[1])
    if region is None:
        return need
    if region[0] > need[0] or region[1] < need[1] or region[2] > need[2] or region[3] < need[3]:
        raise PreconditionError("region %r is smaller than the required %r" % (region, need))
    return region


def estimate_level_probability(eps, schedule, k, trials, seed, region=None):
    """Frequency of B(0, (B_k, S_k)) meeting E^(k), over iid eps-noise samples."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    reg = level_ball_region(schedule, k, region)
    ball = (schedule.B[k - 1], schedule.S[k - 1])
    ss = np.random.SeedSequence(seed)
    hits = 0
    for child in ss.spawn(trials):
        E = sample_noise(eps, reg, child)
        if not E:
            continue
        res = stratify(E, schedule, k - 1).level(k) if k > 1 else frozenset(E)
        if any(in_ball(p, (0, 0), ball) for p in res):
            hits += 1
    return Estimate(k, trials, hits)


def erased_fraction(eps, schedule, k, trials, seed):
    """Fraction of samples (on the level-k decision region) with E^(k+1) empty."""
    reg = level_ball_region(schedule, k)
    ss = np.random.SeedSequence(seed)
    ok = 0
    for child in ss.spawn(trials):
        E = sample_noise(eps, reg, child)
        if not stratify(E, schedule, k).level(k + 1):
            ok += 1
    return Estimate(k, trials, ok)


def noise_lines(E):
    return ["%d %d" % p for p in sorted(E)]


def parse_noise(text):
    out = set()
    for ln in text.splitlines():
        ln = ln.strip()
        if ln:
            x, t = ln.split()
            out.add((int(x), int(t)))
    return frozenset(out)
