"""Level parameters: formula values, the executable toy overrides and their waivers."""
import math
from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class Profile:
    name: str = "toy"
    B1: int = 1
    T1: int = 1
    beta: float = 2
    gamma: float = 8
    pi: float = 6
    rho: float = 0.125
    spill: int = 8
    marg: int = 8
    rebuild_c: int = 8
    bndr: int = 5
    c_Q: float = 16
    c_pi: float = 6
    c_U: float = 1.0
    esc: float = 1.0
    relief: float = 4.0
    growth: float = 1.2
    overrides: dict = field(default_factory=dict)
    faithful: bool = False


TOY = Profile(
    name="toy", growth=0.0,
    # the formulas give Z~45, F~2000, PadLen~32000, Delta~2146 at these constants;
    # the executable profile pins them to sizes that fit inside a Q=16 colony
    overrides=dict(Q=16, Z=4, F=2, PadLen=3, Delta=4, spill=1, marg=1, rebuild_c=1, q=400, U=12000),
)

FAITHFUL = Profile(name="faithful", beta=195, gamma=65, pi=6, rho=0.125, spill=8, marg=8,
                   c_Q=1, c_pi=6, faithful=True)


@dataclass(frozen=True)
class ParamSet:
    k: int
    B: int
    Q: int
    T: int
    S: int
    U: float
    V: float
    pi: float
    q: float
    Z: int
    F: int
    Delta: int
    PadLen: int
    beta: float
    gamma: float
    spill: int
    marg: int
    rebuild_c: int
    bndr: int
    stain: int
    beta_p: int
    E: int
    s: float
    rho: float
    formula: dict = field(default_factory=dict)
    waived: tuple = ()

    # derived sizes used by the level-1 program
    @property
    def log2Q(self):
        return max(1, int(round(math.log2(self.Q))))

    @property
    def big_starve(self):
        return 3 * self.F * self.log2Q

    @property
    def overshoot(self):
        return 3 * self.F * self.log2Q

    @property
    def small_starve(self):
        return 3 * self.Delta

    def checks(self):
        out = [("gamma > 4(marg + spill)", self.gamma > 4 * (self.marg + self.spill)),
               ("beta >= 3 gamma", self.beta >= 3 * self.gamma),
               ("0 < rho < 1/4", 0 < self.rho < 0.25),
               ("Z <= Q", self.Z <= self.Q),
               ("PadLen < Q/2", self.PadLen < self.Q / 2)]
        return out

    def as_dict(self):
        d = asdict(self)
        d["waived"] = list(self.waived)
        return d


def _q_k(prof, k):
    if prof.growth == 0:
        return prof.overrides.get("Q", prof.c_Q)
    return prof.c_Q * 2 ** (prof.growth ** k)


def _pi_k(prof, k):
    if prof.growth == 0:
        return prof.pi
    return 5 * k + prof.c_pi


def _u_k(prof, k):
    if "U" in prof.overrides:
        return prof.overrides["U"]
    return prof.c_U * _q_k(prof, k) * _pi_k(prof, k) ** 9


def _qq_k(prof, k):
    if "q" in prof.overrides:
        return prof.overrides["q"]
    if k == 1:
        return prof.esc * _pi_k(prof, 1)
    return prof.esc * _q_k(prof, k - 1) * _pi_k(prof, k - 1)


def formula_values(prof, k=1):
    """Paper-formula constants before any override."""
    pi = _pi_k(prof, k)
    Z = pi ** (2 + prof.rho)
    F = Z * pi ** (2 + prof.rho)
    Q = _q_k(prof, k)
    PadLen = 4 * F * math.log2(Q)
    beta_p = prof.beta + 2 * prof.spill
    stain = 2 * beta_p + 1
    Delta = (4 * prof.bndr + 9) * stain * prof.beta
    return dict(Z=Z, F=F, PadLen=PadLen, Delta=Delta, Q=Q, beta_p=beta_p, stain=stain)


def level_params(k, profile=TOY):
    if k < 1:
        raise ValueError("levels start at 1")
    prof = profile
    ov = prof.overrides
    fv = formula_values(prof, k)
    B = prof.B1
    T = prof.T1
    for i in range(1, k):
        B *= int(_q_k(prof, i)) if prof.growth == 0 else _q_k(prof, i)
        T *= _u_k(prof, i)
    Q = ov.get("Q", fv["Q"])
    Q = int(Q) if prof.growth == 0 else Q
    spill = ov.get("spill", prof.spill)
    marg = ov.get("marg", prof.marg)
    beta_p = prof.beta + 2 * spill
    stain = 2 * beta_p + 1
    Z = ov.get("Z", fv["Z"])
    F = ov.get("F", fv["F"])
    Delta = ov.get("Delta", fv["Delta"])
    PadLen = ov.get("PadLen", fv["PadLen"])
    if prof.growth:
        Z, F, Delta = int(math.ceil(Z)), int(math.ceil(F)), int(math.ceil(Delta))
        PadLen = int(math.ceil(PadLen))
    q = _qq_k(prof, k)
    q_prev = _qq_k(prof, k - 1) if k > 1 else 1
    U = _u_k(prof, k)
    pi_star = _pi_k(prof, k + 1)
    s = 2 * pi_star * (pi_star + 2 ** (prof.gamma / 5 + marg + 2))
    ps = ParamSet(k=k, B=B, Q=Q, T=T, S=T * q, U=U, V=U * q / q_prev, pi=_pi_k(prof, k), q=q,
                  Z=Z, F=F, Delta=Delta, PadLen=PadLen, beta=prof.beta, gamma=prof.gamma,
                  spill=spill, marg=marg, rebuild_c=ov.get("rebuild_c", prof.rebuild_c),
                  bndr=prof.bndr, stain=stain, beta_p=beta_p, E=16 * Delta * B, s=s, rho=prof.rho,
                  formula=fv)
    failed = tuple(n for n, ok in ps.checks() if not ok)
    waived = failed + tuple("%s=%s (formula %.4g)" % (key, ov[key], fv[key])
                            for key in ("Z", "F", "PadLen", "Delta") if key in ov)
    return replace(ps, waived=waived)


def growth_ratios(profile=FAITHFUL, kmax=10):
    """log Q_{k+1} / log Q_k over the computed range."""
    out = []
    for k in range(1, kmax):
        a, b = math.log2(_q_k(profile, k)), math.log2(_q_k(profile, k + 1))
        out.append(b / a)
    return out


def growth_condition_ratios(profile=FAITHFUL, kmax=10):
    """log(Q_k V_k) / 1.5^k, which must tend to 0."""
    out = []
    for k in range(2, kmax + 1):
        Q = _q_k(profile, k)
        U = _u_k(profile, k)
        V = U * _qq_k(profile, k) / _qq_k(profile, k - 1)
        out.append(math.log2(Q * V) / 1.5 ** k)
    return out


TOY_L1 = level_params(1, TOY)
