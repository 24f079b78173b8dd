"""The machine: program R, the two-level initial configuration and a step runner.

R is one rule program for every level.  At level 1 it dispatches to the native
primitives of `motion`; at level >= 2 (where it is only ever run inside the level-1
simulation) it executes the payload machine G.
"""
import logging
import random
from collections import namedtuple
from dataclasses import dataclass
from importlib import resources

from . import gmachine as gm
from . import motion
from . import stages as sg
from .codes import phi_decode, phi_encode, running_code
from .rules import (CTRL, PAYLOAD, WPB, Context, Program, eq, ge, has_control, if_, is_, move, not_,
                    prim, seal)
from .symbols import blank, is_cell, random_symbol
from .tape import Configuration, HistoryTrace, Tape, apply_transition

log = logging.getLogger(__name__)

Q = sg.Q
NSYM = sg.NR
PRIMS = ("wake", "sim", "heal", "rebuild", "ret")
PROGRAM_FILE = "program_r.rules"


def build_program():
    """R from the builder; the canonical text file must agree with it."""
    upper = [
        if_(not_(CTRL), [move(1)]),
        if_(is_("C.Ret"), [prim("ret"), move(-1)]),
        if_(eq("C.Proc", "Boot"), [PAYLOAD]),
        move(1),
    ]
    lower = [
        if_(not_(CTRL), [prim("wake"), move("$d")]),
        if_(eq("C.Proc", "Sim"), [prim("sim"), if_(is_("$wpb"), [WPB]), move("$d")]),
        if_(eq("C.Proc", "Heal"), [prim("heal"), move("$d")]),
        if_(eq("C.Proc", "Rebuild"), [prim("rebuild"), move("$d")]),
        move(1),
    ]
    return Program([if_(ge("#k", 2), upper, lower)], NSYM, PRIMS)


def program_text():
    return resources.files("fttm").joinpath(PROGRAM_FILE).read_text()


def load_program():
    return Program.from_text(program_text(), NSYM, PRIMS)


def level2_hooks():
    return {"prims": {"ret": motion.ret_prim}, "payload": gm.payload_hook(Q)}


def make_spec(program=None, code=None, **kw):
    prog = program or build_program()
    return motion.Spec(code=code or running_code(Q, 3), rsyms=prog.symbols, hooks2=level2_hooks(), **kw)


# ------------------------------------------------------------------ initial configuration

def level2_config(n=3, left=-96, right=96):
    """Level-2 start: two Booting cells around 0 holding G's input, Stem elsewhere."""
    cells = {}
    for p in range(left, right, Q):
        cells[p] = blank(Kind="Stem")
    cells[-Q] = blank(Kind="Booting", Addr=Q - 1, Payload=(-Q, (gm.BLANK,) * Q, None))
    cells[0] = blank(Kind="Booting", Addr=0, Payload=(0, gm.g_input(n, Q), (0, "a")))
    ctl = cells[-Q]
    ctl["Proc"] = "Boot"
    seal(ctl)
    return Configuration(Tape(Q, cells), -Q, (-Q, 0))


def initial_config(n=3, spec=None, left=-96, right=96):
    """(level-1 configuration, level-2 configuration) at the start of the first work period."""
    spec = spec or make_spec()
    top = level2_config(n, left, right)
    base = top.cur[0]

    def extra(p, c):
        if p == base:
            c = dict(c)
            motion.reset_control(c, Proc="Sim", Ph=1, Ctr=0, Zig=0, Md="ZR", Mv=1, Dg=spec.F, Par=0, Pst=0)
            seal(c)
            return c
        return None
    cfg = phi_encode(top, spec.code, Q, 1, extra)
    return cfg, top


def decode_level2(cfg, spec, pa):
    """Level-2 view of a level-1 configuration whose current pair of colonies starts at pa."""
    keys = [p for p in cfg.tape.cells]
    lo, hi = min(keys), max(keys)
    bases = range(pa - ((pa - lo) // Q) * Q, hi - Q + 2, Q)
    return phi_decode(cfg, spec.code, Q, bases)


# ------------------------------------------------------------------ running

def make_tau(spec=None, program=None):
    """The level-1 transition function cfg -> ((a', b'), d) as a plain callable."""
    program = program or build_program()
    spec = spec or make_spec(program)
    hooks = {"prims": motion.make_prims(spec)}

    def tau(cfg):
        ctx = Context(cfg.pair(), 1, cfg.adjacent(), None, hooks, program.symbols)
        program.compiled(ctx)
        return ctx.result()
    return tau


Event = namedtuple("Event", "t name args pos")


@dataclass
class RunResult:
    steps: int
    faults: int
    work_periods: int
    output: object
    stopped: str = ""


class Runner:
    """Applies R at level 1, one step at a time, with optional injected faults.

    A fault replaces the observed pair by arbitrary symbols and moves the head in a
    random direction.  Events reported by the primitives are kept with their step and
    the absolute position of the control cell.  The runner also follows the base pa of
    the simulated pair (from work-period ends and from healing resumes), which is what
    the annotation of a trace needs.
    """

    def __init__(self, cfg=None, spec=None, program=None, record=False, n=3, pa=None):
        self.program = program or build_program()
        self.spec = spec or make_spec(self.program)
        if cfg is None:
            cfg, top = initial_config(n, self.spec)
            pa = top.cur[0]
        self.cfg = cfg
        self.hooks = {"prims": motion.make_prims(self.spec)}
        self.t = 0
        self.events = []
        self.faults = []
        self.trace = HistoryTrace(cfg.copy(), check=False) if record else None
        self.wp = 0
        self.pa = cfg.cur[0] if pa is None else pa
        self.pa_log = [(0, self.pa)]
        self.origin = None
        self.fit_annot = None
        self.last_annot = (self.pa, 1, 0)
        self.held_front = None      # (stage, front) a restarted stage has already reached

    def transition(self):
        va = self.cfg.pair()
        for s in va:
            if not is_cell(s):
                raise ValueError("current pair holds %r" % (s,))
        ctx = Context(va, 1, self.cfg.adjacent(), None, self.hooks, self.program.symbols)
        self.program.compiled(ctx)
        side = ctx.side
        return ctx.result(), ctx.events, side

    def _note(self, e, pos):
        name, args = e[0], tuple(e[1:])
        self.events.append(Event(self.t, name, args, pos))
        if name in ("wake", "alarm"):
            self.origin = pos
        elif name == "rebuild":
            center, from_heal = args
            self.origin = (self.origin + center) if (from_heal and self.origin is not None) else pos
        elif name == "fit" and self.origin is not None:
            self.fit_annot = (self.origin + args[0], args[1], args[2])
        elif name == "resume" and self.origin is not None:
            fit, self.fit_annot = self.fit_annot, None
            self._set_pa(self.origin + args[3])
            self.held_front = (args[0], fit[2]) if fit is not None and fit[1] == args[0] else None
        elif name == "wp_end":
            self.wp += 1
            self._set_pa(self.pa + sg.shift_after(args[0]))

    def _set_pa(self, pa):
        if pa != self.pa:
            self.pa = pa
            self.pa_log.append((self.t, pa))

    def step(self):
        cur = self.cfg.cur
        action, events, side = self.transition()
        changes = apply_transition(self.cfg, action)
        self.t += 1
        pos = cur[side] if side is not None else cur[0]
        for e in events:
            self._note(e, pos)
        if self.trace is not None:
            self.trace.append(self.cfg.pos, self.cfg.cur, changes)
        return changes

    def fault(self, rng, action=None):
        """Arbitrary symbols in the current pair and an arbitrary move (or the given action)."""
        if action is None:
            a, b = random_symbol(rng), random_symbol(rng)
            action = ((a, b), rng.choice((-1, 1)))
        changes = apply_transition(self.cfg, action, fault=True)
        self.t += 1
        self.faults.append(self.t)
        self.events.append(Event(self.t, "fault", (), self.cfg.pos))
        if self.trace is not None:
            self.trace.append(self.cfg.pos, self.cfg.cur, changes, fault=True)
        return changes

    def control(self):
        """(position, control cell) of the valid control record in the current pair, if any."""
        for p in self.cfg.cur:
            c = self.cfg.tape.get(p)
            if has_control(c):
                return p, c
        return None, None

    def annotation(self):
        """(pa, stage, front) the current configuration is read against.

        From the control record while simulating; during healing the healer's own fit,
        otherwise the last simulation state seen.
        """
        _, c = self.control()
        if c is not None and c.get("Proc") == "Sim" and c.get("Ph") in sg.STAGES:
            s, f = c["Ph"], c.get("Ctr")
            if self.held_front is not None:
                hs, hf = self.held_front
                if hs != s or not isinstance(f, int):
                    self.held_front = None
                else:
                    # a restarted sweep re-processes cells up to where the stage had got to
                    f = max(f, hf) if sg.STAGES[s].dir == 1 else min(f, hf)
            self.last_annot = (self.pa, s, f)
            return self.last_annot
        if self.fit_annot is not None:
            return self.fit_annot
        return self.last_annot

    def output(self, pos=0):
        c = self.cfg.tape.get(pos)
        return c.get("Output") if is_cell(c) else None

    def settled(self):
        """A work period that started after the last fault has ended."""
        last = self.faults[-1] if self.faults else 0
        start = None
        for e in self.events:
            if e.t <= last:
                continue
            if e.name == "wp_start" and start is None:
                start = e.t
            elif e.name == "wp_end" and start is not None:
                return True
        return False

    def run(self, max_steps, schedule=(), eps=0.0, seed=0, burst=1, until_settled=True, on_step=None):
        """Run up to max_steps; schedule lists fault-burst times, eps adds iid faults per step."""
        rng = random.Random(seed)
        todo = sorted(schedule)
        stopped = "budget"
        while self.t < max_steps:
            if todo and self.t >= todo[0]:
                todo.pop(0)
                for _ in range(burst):
                    self.fault(rng)
                continue
            if eps and rng.random() < eps:
                self.fault(rng)
                continue
            self.step()
            if on_step is not None:
                on_step(self)
            if until_settled and not todo and not eps and self.settled() and self.output(0) is not None:
                stopped = "settled"
                break
        return RunResult(self.t, len(self.faults), self.wp, self.output(0), stopped)
