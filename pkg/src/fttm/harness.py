"""Experiment orchestration: configs, run bundles, checker suites, scenarios, sweeps, CLI.

A run directory is named by the manifest hash, which pins the program text, the
parameter profile and the normalized config.  Everything is seeded; the same config
gives byte-identical bundles.
"""
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import click
import yaml

from . import analysis as an
from . import gmachine as gm
from . import machine as mc
from . import motion
from . import noise as nz
from . import params as pm
from .codes import RepetitionCode, BurstRSCode, DecodeFailure
from .rules import CTRL, Context, Program, if_, move, not_, prim, seal
from .symbols import blank
from .tape import Configuration, HistoryTrace, Tape, apply_transition, check_history, read_trace, \
    snapshot_load, snapshot_text, write_trace

log = logging.getLogger(__name__)

PROFILE_ENV = "FTTM_PROFILE_DIR"
SUITES = ("full", "history", "trajectory", "feathering", "annotation", "level2", "codes-only")


# ------------------------------------------------------------------ config

@dataclass
class NoiseSpec:
    kind: str = "none"               # none / iid / scripted
    eps: float = 0.0
    schedule: list = field(default_factory=list)   # fault-burst start times
    burst: int = 1                   # faults per scheduled burst


@dataclass
class ExperimentConfig:
    program: str = ""                # path to a rule file; empty means the packaged R
    profile: str = "toy"
    overrides: dict = field(default_factory=dict)
    machine: str = "incrementer"
    n: int = 3
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    budget: int = 60000
    seed: int = 0
    outputs: list = field(default_factory=lambda: ["trace", "snapshots", "decoded"])
    suite: str = "full"
    feather: bool = True

    def validate(self):
        if self.machine != "incrementer":
            raise ValueError("unknown target machine %r" % self.machine)
        if self.noise.kind not in ("none", "iid", "scripted"):
            raise ValueError("noise kind must be none, iid or scripted")
        if not 0 <= self.noise.eps < 1:
            raise ValueError("eps must be in [0, 1)")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.suite not in SUITES:
            raise ValueError("unknown suite %r" % self.suite)
        gm.g_input(self.n, mc.Q)            # raises if the input does not fit
        return self

    def as_dict(self):
        return dataclasses.asdict(self)


def config_from_dict(d):
    d = dict(d or {})
    nd = d.pop("noise", None) or {}
    unknown = set(d) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    return ExperimentConfig(noise=NoiseSpec(**nd), **d).validate()


def load_config(path=None, **flags):
    """Read a YAML config and apply flag overrides (dotted keys reach into noise)."""
    d = {}
    if path:
        with open(path) as fh:
            d = yaml.safe_load(fh) or {}
    for k, v in flags.items():
        if v is None:
            continue
        if k.startswith("noise."):
            d.setdefault("noise", {})[k[6:]] = v
        else:
            d[k] = v
    return config_from_dict(d)


def load_profile(name, overrides=None):
    """Built-in toy/faithful, or NAME.yaml in the profile directory ($FTTM_PROFILE_DIR)."""
    base = {"toy": pm.TOY, "faithful": pm.FAITHFUL}.get(name)
    if base is None:
        d = os.environ.get(PROFILE_ENV)
        if not d or not (Path(d) / (name + ".yaml")).exists():
            raise ValueError("unknown profile %r (set %s to a directory with %s.yaml)" % (name, PROFILE_ENV, name))
        data = yaml.safe_load((Path(d) / (name + ".yaml")).read_text()) or {}
        parent = {"toy": pm.TOY, "faithful": pm.FAITHFUL}[data.pop("base", "toy")]
        ov = dict(parent.overrides)
        ov.update(data.pop("overrides", {}) or {})
        base = dataclasses.replace(parent, name=name, overrides=ov, **data)
    if overrides:
        ov = dict(base.overrides)
        ov.update(overrides)
        base = dataclasses.replace(base, overrides=ov)
    return base


def _sha(text):
    return hashlib.sha256(text.encode()).hexdigest()


def _canon(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def program_for(cfg):
    if cfg.program:
        return Program.from_text(Path(cfg.program).read_text(), mc.NSYM, mc.PRIMS)
    return mc.build_program()


def spec_for(cfg, program=None):
    prof = load_profile(cfg.profile, cfg.overrides)
    lp = pm.level_params(1, prof)
    return mc.make_spec(program, Z=int(lp.Z), F=int(lp.F), Delta=int(lp.Delta),
                        big_starve=int(3 * lp.F * lp.log2Q), feather=cfg.feather), prof, lp


def manifest_for(cfg):
    program = program_for(cfg)
    prof = load_profile(cfg.profile, cfg.overrides)
    lp = pm.level_params(1, prof)
    m = {
        "schema": 1,
        "config": cfg.as_dict(),
        "config_sha": _sha(_canon(cfg.as_dict())),
        "program_sha": _sha(program.text),
        "program_symbols": len(program),
        "profile": dataclasses.asdict(prof),
        "profile_sha": _sha(_canon(dataclasses.asdict(prof))),
        "waived": list(lp.waived),
        "encoding_level": 2,            # the only level whose pair holds G's input at Q=16
        "oracle": gm.g_oracle(cfg.n),
    }
    m["hash"] = _sha(_canon({k: m[k] for k in ("config_sha", "program_sha", "profile_sha")}))
    return m


# ------------------------------------------------------------------ run

@dataclass
class Bundle:
    manifest: dict
    result: dict
    events: list
    trace: object = None
    snapshots: list = field(default_factory=list)     # (t, pa, Configuration)
    islands: list = field(default_factory=list)
    path: object = None


def _event_json(e):
    return {"t": e.t, "name": e.name, "args": list(e.args), "pos": e.pos}


def execute(cfg, track_islands=True, record=None):
    """Run one experiment in memory."""
    cfg.validate()
    manifest = manifest_for(cfg)
    program = program_for(cfg)
    spec, prof, lp = spec_for(cfg, program)
    record = ("trace" in cfg.outputs) if record is None else record
    r = mc.Runner(spec=spec, program=program, record=record, n=cfg.n)
    snaps = [(0, r.pa, r.cfg.copy())] if ("snapshots" in cfg.outputs or "decoded" in cfg.outputs) else None
    tracker = an.IslandTracker() if track_islands else None

    def on_step(rr):
        if tracker is not None:
            tracker(rr)
        if snaps is not None and rr.events and rr.events[-1].t == rr.t and rr.events[-1].name == "wp_end":
            snaps.append((rr.t, rr.pa, rr.cfg.copy()))

    nz_ = cfg.noise
    sched = nz_.schedule if nz_.kind == "scripted" else ()
    eps = nz_.eps if nz_.kind == "iid" else 0.0
    t0 = time.time()
    res = r.run(cfg.budget, schedule=sched, eps=eps, seed=cfg.seed, burst=nz_.burst, on_step=on_step)
    result = {"steps": res.steps, "faults": res.faults, "work_periods": res.work_periods,
              "output": res.output, "correct": res.output == manifest["oracle"], "stopped": res.stopped,
              "fault_times": list(r.faults), "wp_steps": an.wp_steps(r.events)}
    log.info("run %s: %s in %.1fs", manifest["hash"][:12], result, time.time() - t0)
    return Bundle(manifest, result, r.events, r.trace, snaps or [],
                  tracker.samples if tracker else [])


def bundle_dir(root, manifest, seed_tag=None):
    return Path(root) / manifest["hash"][:16]


def write_bundle(b, root):
    d = bundle_dir(root, b.manifest)
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    files["manifest.json"] = json.dumps(b.manifest, sort_keys=True, indent=1) + "\n"
    files["result.json"] = json.dumps(b.result, sort_keys=True, indent=1) + "\n"
    files["events.jsonl"] = "".join(_canon(_event_json(e)) + "\n" for e in b.events)
    if b.trace is not None:
        fh = io.StringIO()
        write_trace(b.trace, fh)
        files["trace.txt"] = fh.getvalue()
    if b.snapshots:
        files["snapshots.txt"] = "".join("=== %d %d\n%s" % (t, pa, snapshot_text(c)) for t, pa, c in b.snapshots)
    if b.islands:
        files["islands.jsonl"] = "".join(_canon([t, pa, isl, dw]) + "\n" for t, pa, isl, dw in b.islands)
    digest = hashlib.sha256()
    for name in sorted(files):
        (d / name).write_text(files[name])
        digest.update(name.encode() + b"\0" + files[name].encode())
    (d / "bundle.sha256").write_text(digest.hexdigest() + "\n")
    b.path = d
    return d


def read_bundle(path):
    d = Path(path)
    if not (d / "manifest.json").exists():
        raise FileNotFoundError("no manifest in %s" % d)
    man = json.loads((d / "manifest.json").read_text())
    res = json.loads((d / "result.json").read_text())
    evs = [mc.Event(o["t"], o["name"], tuple(o["args"]), o["pos"])
           for o in map(json.loads, (d / "events.jsonl").read_text().splitlines())]
    trace = None
    if (d / "trace.txt").exists():
        with open(d / "trace.txt") as fh:
            trace = read_trace(fh)
    snaps = []
    if (d / "snapshots.txt").exists():
        for chunk in (d / "snapshots.txt").read_text().split("=== ")[1:]:
            head, _, body = chunk.partition("\n")
            t, pa = map(int, head.split())
            snaps.append((t, pa, snapshot_load(body)))
    isl = []
    if (d / "islands.jsonl").exists():
        isl = [(t, pa, [tuple(x) for x in i], dw)
               for t, pa, i, dw in map(json.loads, (d / "islands.jsonl").read_text().splitlines())]
    return Bundle(man, res, evs, trace, snaps, isl, d)


def run(cfg, root="runs"):
    """Execute and write the bundle; returns (bundle, directory)."""
    b = execute(cfg)
    return b, write_bundle(b, root)


# ------------------------------------------------------------------ check

@dataclass
class Report:
    verdicts: list

    @property
    def ok(self):
        return all(v.ok for v in self.verdicts)

    def lines(self):
        return [v.line() for v in self.verdicts]


def codec_fixtures():
    """Small exhaustive and randomized codec checks, independent of any run."""
    out = []
    rep = RepetitionCode(6, 3)
    bad = total = 0
    for x, cw in rep.codewords():
        for L in range(1, rep.Q // 3 + 1):
            for s in range(rep.Q - L + 1):
                w = list(cw)
                for i in range(s, s + L):
                    w[i] ^= 1
                total += 1
                bad += rep.decode(w) != x
    out.append(an.Verdict("codec repetition exhaustive", bad == 0, total))
    rs = BurstRSCode(4, 3)
    rng = random.Random(0)
    fails = 0
    for _ in range(50):
        msg = [rng.randrange(256) for _ in range(rs.msg_len)]
        w = list(rs.encode(msg))
        for _ in range(3):
            s = rng.randrange(rs.Q - 3)
            for i in range(s, s + 4):
                w[i] = rng.randrange(256)
        try:
            fails += rs.decode(w) != tuple(msg)
        except DecodeFailure:
            fails += 1
    out.append(an.Verdict("codec RS bursts", fails == 0, 50))
    return out


def check(bundle, suite="full"):
    """Dispatch a bundle to the analysis checkers."""
    if suite not in SUITES:
        raise ValueError("unknown suite %r" % suite)
    if suite == "codes-only":
        return Report(codec_fixtures())
    cfg = config_from_dict(bundle.manifest["config"])
    program = program_for(cfg)
    spec, prof, lp = spec_for(cfg, program)
    out = []
    need_trace = suite in ("full", "history", "trajectory", "feathering")
    if need_trace and bundle.trace is None:
        raise FileNotFoundError("bundle has no trace")
    faults = bundle.result.get("fault_times", [])
    if suite in ("full", "history"):
        try:
            check_history(bundle.trace)
            out.append(an.Verdict("history", True, bundle.trace.t))
        except Exception as e:
            out.append(an.Verdict("history", False, bundle.trace.t, repr(e)))
    if suite in ("full", "trajectory"):
        out.extend(an.check_trajectory(bundle.trace, mc.make_tau(spec, program), lp))
    if suite in ("full", "feathering"):
        h = bundle.trace.heads()
        out.append(an.check_feathering(h, faults))
        out.append(an.check_big_feathering(an.big_turns(bundle.events), h, spec.F, faults))
        out.append(an.check_feathering_lb(h, 1, faults))
        if suite == "feathering":
            out.append(an.check_escape(h, int(lp.gamma), int(lp.q * lp.T)))
    if suite in ("full", "annotation") and bundle.islands:
        rep = an.validate_annotation(bundle.islands, lp.stain)
        out.append(an.Verdict("annotation", rep.ok, rep.samples, rep.violations[:3]))
    if suite in ("full", "level2"):
        if len(bundle.snapshots) < 2:
            if suite == "level2":
                raise FileNotFoundError("bundle has fewer than two snapshots")
        else:
            snaps = [(t, c, pa) for t, pa, c in bundle.snapshots]
            hist = an.scale_up(snaps, spec.code)
            out.append(an.check_decoded_history(hist))
            out.append(an.check_level2_transition(hist, program, mc.level2_hooks()))
    out.append(an.Verdict("output", bool(bundle.result.get("correct")), 1, bundle.result.get("output")))
    return Report(out)


# ------------------------------------------------------------------ scenarios

@dataclass
class ScenarioScript:
    name: str
    description: str
    expected: dict
    play: object            # callable() -> outcome dict

    def run(self):
        return self.play()


def _bouncer_program():
    return Program([if_(not_(CTRL), [move(1)]), prim("bounce"), move("$d")], None, ("bounce",))


def bouncer_run(feather, width=4, span=12, steps=3000):
    """Head between two wide walls that both ask it to turn back.

    Wall cells carry Drift pointing back into the interval [0, span).  Without the
    turn discipline the head reverses at the first wall cell every time and never
    leaves; with it, repeated turns at one place are refused and the turning point
    creeps outward until the head is past a wall.
    """
    spec = motion.Spec(code=None, feather=feather)

    def bounce(ctx):
        C = ctx.cell("C")
        mv = C["Mv"]
        try:
            motion.go(ctx, spec, -mv if C.get("Drift") == -mv else mv)
        except motion.Starve:
            ctx.vars["d"] = mv
    hooks = {"prims": {"bounce": bounce}}
    prog = _bouncer_program()
    cells = {p: blank(Kind="Stem") for p in range(-width - 40, span + width + 40)}
    for p in range(-width, 0):
        cells[p] = blank(Kind="Stem", Drift=1)
    for p in range(span, span + width):
        cells[p] = blank(Kind="Stem", Drift=-1)
    c = cells[span // 2]
    motion.reset_control(c, Proc="Sim", Mv=1, Pst=0)
    seal(c)
    cfg = Configuration(Tape(1, cells), span // 2, (span // 2, span // 2 + 1))
    tr = HistoryTrace(cfg.copy(), check=False)
    escaped = None
    for t in range(1, steps + 1):
        ctx = Context(cfg.pair(), 1, cfg.adjacent(), None, hooks, ())
        prog.compiled(ctx)
        changes = apply_transition(cfg, ctx.result())
        tr.append(cfg.pos, cfg.cur, changes)
        if escaped is None and not (-width <= cfg.pos < span + width):
            escaped = t
            break
    heads = tr.heads()
    turns = an.turns(heads)
    inside = [x for _, x, _ in turns]
    return {"escaped_at": escaped, "turns": len(turns), "turn_positions": sorted(set(inside)),
            "reach": [min(heads), max(heads)], "heads": heads}


def _need_feather():
    off = bouncer_run(False)
    on = bouncer_run(True)
    lb_off = an.check_feathering(off["heads"])
    lb_on = an.check_feathering_lb(on["heads"])
    return {"captured_without_feathering": off["escaped_at"] is None,
            "turns_without_feathering": off["turns"],
            "turn_positions_without_feathering": off["turn_positions"],
            "1-feathering_without": lb_off.ok,
            "escaped_with_feathering_at": on["escaped_at"],
            "turns_with_feathering": on["turns"],
            "feathering_lb_with": lb_on.ok}


def _crafted_fault(r, shift=5):
    """The normal action with the core of the cell being left behind disturbed."""
    (a, b), d = r.transition()[0]
    left = dict(a if d == 1 else b)
    addr = left.get("Addr")
    left["Addr"] = (addr + shift) % mc.Q if isinstance(addr, int) else shift
    left["Age"] = (left.get("Age") or 0) + 3
    return ((left, b), d) if d == 1 else ((a, left), d)


def _three_islands(start=3000, gap=5):
    r = mc.Runner()
    tr = an.IslandTracker(every=5)
    r.run(start, until_settled=False, on_step=tr)
    for _ in range(3):
        r.fault(None, _crafted_fault(r))
        r.run(r.t + gap, until_settled=False, on_step=tr)
    res = r.run(60000, on_step=tr)
    counts = [len(isl) for t, _, isl, _ in tr.samples if t >= start]
    return {"peak": max(counts), "final": counts[-1], "settled_max": max(counts[-10:]),
            "output": res.output, "heals": sum(e.name == "resume" for e in r.events)}


def _scramble(r, lo, hi, shift=7):
    for p in range(lo, hi):
        c = dict(r.cfg.tape.get(p))
        a = c.get("Addr")
        c["Addr"] = (a + shift) % mc.Q if isinstance(a, int) else 3
        c["Age"] = (c.get("Age") or 0) + 5
        r.cfg.tape.set(p, c)


def _heal_in_rebuild(start=3000, delay=100, seed=0):
    """A damaged stretch forces a rebuild; a burst hits while the rebuild is writing."""
    r = mc.Runner()
    r.run(start, until_settled=False)
    pos = r.control()[0]
    _scramble(r, pos - 12, pos - 2)
    while not any(e.name == "rebuild" for e in r.events):
        r.step()
    t_rb = r.t
    res = r.run(60000, schedule=[t_rb + delay], seed=seed, burst=2)
    names = [(e.t, e.name) for e in r.events if e.t > t_rb + delay]
    return {"rebuild_started": t_rb, "burst_at": t_rb + delay,
            "rebuilt_after_burst": any(n == "rebuilt" for _, n in names),
            "output": res.output, "stopped": res.stopped}


SCENARIOS = {
    "need-feather": ScenarioScript(
        "need-feather", "head between two walls; capture without turn discipline, escape with it",
        {}, _need_feather),
    "3-islands": ScenarioScript(
        "3-islands", "three disturbed cells left behind on one pass, then healed",
        {}, _three_islands),
    "heal-in-rebuild": ScenarioScript(
        "heal-in-rebuild", "burst during a rebuild; the rebuild is restarted and completes",
        {}, _heal_in_rebuild),
}


def scenario(name):
    if name not in SCENARIOS:
        raise KeyError("unknown scenario %r; known: %s" % (name, ", ".join(sorted(SCENARIOS))))
    return SCENARIOS[name]


# ------------------------------------------------------------------ sweep

def trial(cfg, eps, seed, budget):
    """One iid-noise run; success means the oracle output is at cell 0 when the budget ends."""
    c = dataclasses.replace(cfg, noise=NoiseSpec("iid", eps), seed=seed, budget=budget, outputs=[])
    spec, _, _ = spec_for(c)
    r = mc.Runner(spec=spec, n=c.n)
    res = r.run(budget, eps=eps, seed=seed, until_settled=False)
    return res.output == gm.g_oracle(c.n), res.faults


def sweep_epsilon(cfg, eps_list, trials, seed=0, budget=24000, progress=None):
    """Success-rate table [{eps, trials, successes, failure, sigma, faults}]."""
    if trials < 30:
        raise ValueError("at least 30 trials per point")
    rows = []
    for i, eps in enumerate(eps_list):
        ok = nf = 0
        for j in range(trials):
            s, f = trial(cfg, eps, seed * 1000003 + i * 10007 + j, budget)
            ok += s
            nf += f
            if progress:
                progress(eps, j)
        p = 1 - ok / trials
        rows.append({"eps": eps, "trials": trials, "successes": ok, "rate": ok / trials, "failure": p,
                     "sigma": math.sqrt(max(p * (1 - p), 1.0 / trials) / trials), "faults": nf})
    return rows


def trend_ok(rows, k=2.0):
    """Failure rate non-decreasing in eps within k sigma (pairwise)."""
    rows = sorted(rows, key=lambda r: r["eps"])
    for a, b in zip(rows, rows[1:]):
        if a["failure"] - b["failure"] > k * math.hypot(a["sigma"], b["sigma"]):
            return False
    return True


# ------------------------------------------------------------------ CLI

def _dump(obj):
    click.echo(yaml.safe_dump(obj, sort_keys=False, default_flow_style=None).rstrip())


@click.group()
@click.option("-v", "--verbose", count=True)
def cli(verbose):
    """Fault-tolerant Turing machine simulator and checker."""
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")


def _config_opts(f):
    for opt in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True), default=None),
        click.option("--seed", type=int, default=None),
        click.option("--budget", type=int, default=None),
        click.option("--n", type=int, default=None),
        click.option("--profile", default=None),
        click.option("--eps", type=float, default=None),
        click.option("--fault-at", "fault_at", type=int, multiple=True),
        click.option("--burst", type=int, default=None),
        click.option("--no-feather", is_flag=True, default=False),
    ]):
        f = opt(f)
    return f


def _cfg(config_path, seed, budget, n, profile, eps, fault_at, burst, no_feather):
    flags = {"seed": seed, "budget": budget, "n": n, "profile": profile}
    if eps:
        flags["noise.kind"], flags["noise.eps"] = "iid", eps
    if fault_at:
        flags["noise.kind"], flags["noise.schedule"] = "scripted", list(fault_at)
    if burst is not None:
        flags["noise.burst"] = burst
    if no_feather:
        flags["feather"] = False
    return load_config(config_path, **flags)


@cli.command("run")
@_config_opts
@click.option("--out", default="runs", show_default=True)
def run_cmd(out, **kw):
    """Run one experiment and write its bundle."""
    b, d = run(_cfg(**kw), out)
    click.echo(str(d))
    _dump(b.result)
    sys.exit(0 if b.result["correct"] else 1)


@cli.command("check")
@click.argument("bundle", type=click.Path(exists=True))
@click.option("--suite", type=click.Choice(SUITES), default="full", show_default=True)
def check_cmd(bundle, suite):
    """Run a checker suite over a bundle directory."""
    rep = check(read_bundle(bundle), suite)
    for ln in rep.lines():
        click.echo(ln)
    sys.exit(0 if rep.ok else 1)


@cli.command("stratify")
@click.argument("noise_file", type=click.Path(exists=True))
@click.option("--levels", type=int, default=3, show_default=True)
def stratify_cmd(noise_file, levels):
    """Stratify a noise set (lines 'x t') with the toy schedule."""
    E = nz.parse_noise(Path(noise_file).read_text())
    st = nz.stratify(E, nz.TOY_NOISE, levels)
    _dump({"levels": [{"k": k, "points": len(s)} for k, s in enumerate(st.residues)],
           "sparse_level": st.sparse_level, "waived": list(st.waived)})


@cli.command("mc-sparsity")
@click.option("--eps", type=float, default=0.01, show_default=True)
@click.option("--trials", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--levels", type=int, default=3, show_default=True)
def mc_sparsity_cmd(eps, trials, seed, levels):
    """Monte Carlo estimate of level-k ball occupation under iid noise."""
    rows = []
    for k in range(1, levels + 1):
        e = nz.estimate_level_probability(eps, nz.TOY_NOISE, k, trials, seed)
        rows.append({"k": k, "freq": e.freq, "sigma": e.sigma})
    er = nz.erased_fraction(eps, nz.TOY_NOISE, levels, trials, seed)
    rows.append({"erased_by_level": levels, "fraction": er.freq})
    _dump(rows)


@cli.command("scenario")
@click.argument("name", type=click.Choice(sorted(SCENARIOS)))
def scenario_cmd(name):
    """Play a scenario from the library and print its outcome."""
    out = scenario(name).run()
    out.pop("heads", None)
    _dump(out)


@cli.command("sweep")
@_config_opts
@click.option("--eps-list", default="0,1e-4,1e-3,1e-2", show_default=True)
@click.option("--trials", type=int, default=50, show_default=True)
@click.option("--steps", type=int, default=24000, show_default=True)
@click.option("--csv", "csv_path", default=None, type=click.Path())
def sweep_cmd(eps_list, trials, steps, csv_path, **kw):
    """Success rate against the per-step fault probability."""
    cfg = _cfg(**kw)
    rows = sweep_epsilon(cfg, [float(x) for x in eps_list.split(",")], trials, cfg.seed, steps)
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write("eps,trials,successes,failure,sigma\n")
            for r in rows:
                fh.write("%g,%d,%d,%.4f,%.4f\n" % (r["eps"], r["trials"], r["successes"], r["failure"], r["sigma"]))
    _dump({"rows": rows, "monotone_within_2sigma": trend_ok(rows)})


@cli.command("decode")
@click.argument("bundle", type=click.Path(exists=True))
@click.option("--index", type=int, default=-1, help="snapshot index (default: last)")
def decode_cmd(bundle, index):
    """Decode a level-1 snapshot of a bundle to the level-2 configuration."""
    b = read_bundle(bundle)
    if not b.snapshots:
        raise click.ClickException("bundle has no snapshots")
    t, pa, c = b.snapshots[index]
    spec, _, _ = spec_for(config_from_dict(b.manifest["config"]))
    top = an.decode_at(c, spec.code, pa)
    click.echo("t=%d pa=%d" % (t, pa))
    for p, s in top.tape.items():
        if isinstance(s, dict):
            click.echo("%5d %-8s Addr=%s Proc=%s Output=%s" % (p, s.get("Kind"), s.get("Addr"), s.get("Proc"), s.get("Output")))
        else:
            click.echo("%5d %r" % (p, s))


@cli.command("params")
@click.option("--level", "k", type=int, default=1, show_default=True)
@click.option("--profile", default="toy", show_default=True)
def params_cmd(k, profile):
    """Level parameters with the list of waived inequalities."""
    ps = pm.level_params(k, load_profile(profile))
    d = ps.as_dict()
    d.pop("formula")
    _dump({k2: (float(v) if isinstance(v, float) else v) for k2, v in d.items()})


def main():
    cli()


if __name__ == "__main__":
    main()
