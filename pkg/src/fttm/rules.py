"""Rule language: a small prefix-notation DSL over the observed cell pair.

A program is a sequence of statements:

    IF <cond> THEN <stmt>* [ELSE <stmt>*] END
    SET <ref> <expr>        assignment to a field of L, R, C (control cell) or O (other cell)
    LET $v <expr>           evaluation-local variable
    MOVE <expr>             terminal: relocate the control record to the carrier, seal it
    WPB                     Work <- R(Index) on the control cell
    PAYLOAD                 terminal: native payload step (level >= 2)
    @name                   native primitive acting on the evaluation context

Conditions are EQ/NE/LT/LE/GT/GE of two expressions, AND/OR/NOT, ALPHA (pair is
adjacent), CTRL (a valid control record is present) and IS <expr>.  Expressions are
literals (ints, nil, true, false, 'word), field refs such as C.Age, #params (#k is the
level), $vars and ADD/SUB.  Every operator has fixed arity, so the token stream can be
consumed one token at a time by a pushdown interpreter.

Two evaluation routes are kept: a compiled one (generated Python) and a streaming one
(the interpreter that the machine also runs on its Work track).
"""
import copy
import logging
import zlib

from .symbols import CONTROL_FIELDS, DEFAULTS, check_field

log = logging.getLogger(__name__)

KEYWORDS = {"IF", "THEN", "ELSE", "END", "SET", "LET", "MOVE", "WPB", "PAYLOAD"}
COND_ARITY = {"EQ": 2, "NE": 2, "LT": 2, "LE": 2, "GT": 2, "GE": 2, "AND": 2, "OR": 2,
              "NOT": 1, "ALPHA": 0, "CTRL": 0, "IS": 1}
EXPR_ARITY = {"ADD": 2, "SUB": 2}
SIDES = ("L", "R", "C", "O")
BLANK_WORK = "~"


class RuleSyntaxError(ValueError):
    pass


# ------------------------------------------------------------------ checksums

SMALL_CONTROL = tuple(f for f in CONTROL_FIELDS if f not in ("Acc", "Aux", "Chk"))


def _crepr(v):
    """repr with dict entries in key order, so checksums do not depend on insertion order."""
    if isinstance(v, dict):
        return "{" + ",".join("%r:%s" % (k, _crepr(v[k])) for k in sorted(v)) + "}"
    if isinstance(v, tuple):
        return "(" + ",".join(_crepr(x) for x in v) + ")"
    return repr(v)


def pack(data):
    """Stage data with a precomputed checksum, so sealing a record stays cheap."""
    return ("pk", zlib.crc32(_crepr(data).encode()), data)


def pack_append(packed, item):
    if not is_packed(packed):
        return pack((item,))
    return ("pk", zlib.crc32(_crepr(item).encode(), packed[1]), packed[2] + (item,))


def is_packed(v):
    return isinstance(v, tuple) and len(v) == 3 and v[0] == "pk" and isinstance(v[1], int)


def unpack(v):
    return v[2] if is_packed(v) else None


def _sig(v):
    if v is None:
        return 0
    if is_packed(v):
        return v[1]
    return zlib.crc32(_crepr(v).encode()) ^ 0x5A5A


def control_checksum(cell):
    small = tuple(cell.get(f) for f in SMALL_CONTROL)
    return zlib.crc32(repr(small).encode(), _sig(cell.get("Acc")) ^ (_sig(cell.get("Aux")) << 1 & 0xFFFFFFFF))


def has_control(cell):
    return (isinstance(cell, dict) and cell.get("Head") is True
            and cell.get("Chk") == control_checksum(cell))


def control_side(L, R):
    if has_control(L):
        return 0
    if has_control(R):
        return 1
    return None


def clear_control(cell):
    for f in CONTROL_FIELDS:
        cell[f] = DEFAULTS[f]


def seal(cell):
    cell["Head"] = True
    cell["Chk"] = control_checksum(cell)


# ------------------------------------------------------------------ tokens and AST

def _lit_token(v):
    if v is None:
        return "nil"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str) and v and not any(ch.isspace() for ch in v):
        return "'" + v
    raise RuleSyntaxError("literal %r has no token form" % (v,))


def _value_token(tok):
    """AST node for a value token, or None if tok is not a value."""
    if tok == "nil":
        return ("lit", None)
    if tok == "true":
        return ("lit", True)
    if tok == "false":
        return ("lit", False)
    if tok.startswith("'") and len(tok) > 1:
        return ("lit", tok[1:])
    if tok.lstrip("-").isdigit():
        return ("lit", int(tok))
    if tok.startswith("#") and len(tok) > 1:
        return ("param", tok[1:])
    if tok.startswith("$") and len(tok) > 1:
        return ("var", tok[1:])
    if len(tok) > 2 and tok[1] == "." and tok[0] in "LRCO":
        return ("ref", tok[0], check_field(tok[2:]))
    return None


def _expr_tokens(e, out):
    kind = e[0]
    if kind == "lit":
        out.append(_lit_token(e[1]))
    elif kind == "param":
        out.append("#" + e[1])
    elif kind == "var":
        out.append("$" + e[1])
    elif kind == "ref":
        out.append(e[1] + "." + e[2])
    elif kind in ("add", "sub"):
        out.append(kind.upper())
        _expr_tokens(e[1], out)
        _expr_tokens(e[2], out)
    else:
        raise RuleSyntaxError("bad expression node %r" % (e,))


def _cond_tokens(c, out):
    op = c[0].upper()
    out.append(op)
    if op in ("AND", "OR"):
        _cond_tokens(c[1], out)
        _cond_tokens(c[2], out)
    elif op == "NOT":
        _cond_tokens(c[1], out)
    elif op == "IS":
        _expr_tokens(c[1], out)
    elif op in ("ALPHA", "CTRL"):
        pass
    else:
        _expr_tokens(c[1], out)
        _expr_tokens(c[2], out)


def _stmt_tokens(s, out):
    kind = s[0]
    if kind == "if":
        out.append("IF")
        _cond_tokens(s[1], out)
        out.append("THEN")
        for t in s[2]:
            _stmt_tokens(t, out)
        if s[3] is not None:
            out.append("ELSE")
            for t in s[3]:
                _stmt_tokens(t, out)
        out.append("END")
    elif kind == "set":
        out.append("SET")
        out.append(s[1][1] + "." + s[1][2])
        _expr_tokens(s[2], out)
    elif kind == "let":
        out.extend(["LET", "$" + s[1]])
        _expr_tokens(s[2], out)
    elif kind == "move":
        out.append("MOVE")
        _expr_tokens(s[1], out)
    elif kind == "wpb":
        out.append("WPB")
    elif kind == "payload":
        out.append("PAYLOAD")
    elif kind == "prim":
        out.append("@" + s[1])
    else:
        raise RuleSyntaxError("bad statement node %r" % (s,))


class _Parser:
    def __init__(self, tokens, prims=None):
        self.toks = tokens
        self.i = 0
        self.prims = prims

    def next(self):
        if self.i >= len(self.toks):
            raise RuleSyntaxError("unexpected end of program")
        t = self.toks[self.i]
        self.i += 1
        return t

    def expr(self):
        t = self.next()
        if t in EXPR_ARITY:
            return (t.lower(), self.expr(), self.expr())
        v = _value_token(t)
        if v is None:
            raise RuleSyntaxError("token %d: expected an expression, got %r" % (self.i - 1, t))
        return v

    def cond(self):
        t = self.next()
        if t not in COND_ARITY:
            raise RuleSyntaxError("token %d: expected a condition, got %r" % (self.i - 1, t))
        op = t.lower()
        if t in ("AND", "OR"):
            return (op, self.cond(), self.cond())
        if t == "NOT":
            return (op, self.cond())
        if t == "IS":
            return (op, self.expr())
        if t in ("ALPHA", "CTRL"):
            return (op,)
        return (op, self.expr(), self.expr())

    def block(self, stops):
        out = []
        while True:
            if self.i >= len(self.toks):
                if stops:
                    raise RuleSyntaxError("missing %s" % "/".join(sorted(stops)))
                return tuple(out), None
            t = self.toks[self.i]
            if t in stops:
                self.i += 1
                return tuple(out), t
            out.append(self.stmt())

    def stmt(self):
        t = self.next()
        if t == "IF":
            c = self.cond()
            if self.next() != "THEN":
                raise RuleSyntaxError("token %d: expected THEN" % (self.i - 1))
            then, stop = self.block({"ELSE", "END"})
            els = None
            if stop == "ELSE":
                els, _ = self.block({"END"})
            return ("if", c, then, els)
        if t == "SET":
            ref = _value_token(self.next())
            if ref is None or ref[0] != "ref":
                raise RuleSyntaxError("token %d: SET needs a field reference" % (self.i - 1))
            return ("set", ref, self.expr())
        if t == "LET":
            v = _value_token(self.next())
            if v is None or v[0] != "var":
                raise RuleSyntaxError("token %d: LET needs a $variable" % (self.i - 1))
            return ("let", v[1], self.expr())
        if t == "MOVE":
            return ("move", self.expr())
        if t == "WPB":
            return ("wpb",)
        if t == "PAYLOAD":
            return ("payload",)
        if t.startswith("@") and len(t) > 1:
            if self.prims is not None and t[1:] not in self.prims:
                raise RuleSyntaxError("unknown primitive %r" % t)
            return ("prim", t[1:])
        raise RuleSyntaxError("token %d: unexpected %r" % (self.i - 1, t))


def parse(text, prims=None):
    p = _Parser(text.split(), prims)
    stmts, _ = p.block(set())
    return stmts


def serialize(stmts):
    out = []
    for s in stmts:
        _stmt_tokens(s, out)
    return " ".join(out)


# ------------------------------------------------------------------ builder

def lit(v):
    return ("lit", v)


def ref(spec):
    side, _, f = spec.partition(".")
    if side not in SIDES:
        raise RuleSyntaxError("bad side %r" % side)
    return ("ref", side, check_field(f))


def _e(x):
    if isinstance(x, tuple):
        return x
    if isinstance(x, str) and len(x) > 2 and x[1] == "." and x[0] in SIDES:
        return ref(x)
    if isinstance(x, str) and x[:1] in "#$":
        return _value_token(x)
    return lit(x)


def eq(a, b):
    return ("eq", _e(a), _e(b))


def ne(a, b):
    return ("ne", _e(a), _e(b))


def lt(a, b):
    return ("lt", _e(a), _e(b))


def ge(a, b):
    return ("ge", _e(a), _e(b))


def and_(*cs):
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = ("and", c, out)
    return out


def or_(*cs):
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = ("or", c, out)
    return out


def not_(c):
    return ("not", c)


def is_(x):
    return ("is", _e(x))


ALPHA = ("alpha",)
CTRL = ("ctrl",)


def add(a, b):
    return ("add", _e(a), _e(b))


def sub(a, b):
    return ("sub", _e(a), _e(b))


def if_(c, then, els=None):
    return ("if", c, tuple(then), None if els is None else tuple(els))


def set_(target, value):
    return ("set", ref(target), _e(value))


def let(var, value):
    return ("let", var.lstrip("$"), _e(value))


def move(d):
    return ("move", _e(d))


def prim(name):
    return ("prim", name)


WPB = ("wpb",)
PAYLOAD = ("payload",)


# ------------------------------------------------------------------ programs

class Program:
    """Immutable rule program with its serialized form R split into program symbols."""

    def __init__(self, stmts, nsym=None, prims=None):
        self.stmts = tuple(stmts)
        self.text = serialize(self.stmts)
        self.tokens = tuple(self.text.split())
        if parse(self.text, prims) != self.stmts:
            raise RuleSyntaxError("program does not round-trip through its text")
        self.nsym = nsym
        self.symbols = split_symbols(self.tokens, nsym)
        self._compiled = None

    @classmethod
    def from_text(cls, text, nsym=None, prims=None):
        return cls(parse(text, prims), nsym, prims)

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Program) and self.stmts == other.stmts

    def __hash__(self):
        return hash(self.text)

    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = compile_program(self.stmts)
        return self._compiled


def split_symbols(tokens, nsym=None):
    """R as a sequence of program symbols: single tokens, or nsym near-equal token groups."""
    if nsym is None:
        return tuple(tokens)
    n = len(tokens)
    if nsym < 1:
        raise ValueError("nsym must be >= 1")
    size = max(1, -(-n // nsym))
    out = tuple(" ".join(tokens[i:i + size]) for i in range(0, n, size))
    if len(out) > nsym:
        raise ValueError("program needs %d symbols, only %d allowed" % (len(out), nsym))
    return out + ("",) * (nsym - len(out))


def as_program(R):
    return R if isinstance(R, Program) else Program.from_text(R)


# ------------------------------------------------------------------ evaluation context

def _num(x):
    return x if isinstance(x, int) and not isinstance(x, bool) else 0


def _eq(a, b):
    return a is b or (type(a) is type(b) and a == b)


def _cmp(a, b):
    ok = all(isinstance(x, int) and not isinstance(x, bool) for x in (a, b))
    return ok


class Context:
    """Mutable evaluation state for one application of the transition function."""

    __slots__ = ("cells", "k", "alpha", "params", "hooks", "vars", "d", "done", "side",
                 "rsyms", "status", "events")

    def __init__(self, va, k, alpha, params=None, hooks=None, rsyms=()):
        L, R = va
        self.cells = [dict(L), dict(R)]
        self.k = k
        self.alpha = bool(alpha)
        self.params = params or {}
        self.hooks = hooks or {}
        self.vars = {}
        self.d = None
        self.done = False
        self.status = None
        self.side = control_side(self.cells[0], self.cells[1])
        self.rsyms = rsyms
        self.events = []

    def idx(self, side):
        if side == "L":
            return 0
        if side == "R":
            return 1
        c = 0 if self.side is None else self.side
        return c if side == "C" else 1 - c

    def cell(self, side):
        return self.cells[self.idx(side)]

    def get(self, side, f):
        return self.cells[self.idx(side)].get(f)

    def set(self, side, f, v):
        self.cells[self.idx(side)][f] = v

    def param(self, name):
        if name == "k":
            return self.k
        return self.params.get(name)

    def prim(self, name):
        fn = self.hooks.get("prims", {}).get(name)
        if fn is None:
            raise RuleSyntaxError("primitive @%s is not registered" % name)
        fn(self)

    def wpb(self):
        c = self.cell("C")
        i = c.get("Index")
        if isinstance(i, int) and not isinstance(i, bool) and 1 <= i <= len(self.rsyms):
            c["Work"] = self.rsyms[i - 1]
        else:
            log.debug("WriteProgramBit with Index %r outside 1..%d", i, len(self.rsyms))
            c["Work"] = BLANK_WORK

    def move(self, d):
        if d not in (-1, 1):
            log.debug("MOVE with direction %r; using +1", d)
            d = 1
        carrier = 1 if d == 1 else 0
        other = 1 - carrier
        if self.side is not None:
            src = self.cells[self.side]
            dst = self.cells[carrier]
            if dst is not src:
                for f in CONTROL_FIELDS:
                    dst[f] = src[f]
            seal(dst)
            clear_control(self.cells[other])
        else:
            for c in self.cells:
                if c.get("Head") is not DEFAULTS["Head"]:
                    clear_control(c)
        self.d = d
        self.done = True

    def payload(self):
        fn = self.hooks.get("payload")
        if fn is None:
            raise RuleSyntaxError("PAYLOAD needs a payload hook")
        fn(self)
        if not self.done:
            self.move(self.d if self.d is not None else 1)

    def result(self):
        if not self.done:
            self.move(1)
        return (self.cells[0], self.cells[1]), self.d


# ------------------------------------------------------------------ compiled route

def _gen_expr(e):
    kind = e[0]
    if kind == "lit":
        return repr(e[1])
    if kind == "ref":
        return "ctx.get(%r, %r)" % (e[1], e[2])
    if kind == "param":
        return "ctx.param(%r)" % e[1]
    if kind == "var":
        return "ctx.vars.get(%r)" % e[1]
    if kind == "add":
        return "(_num(%s) + _num(%s))" % (_gen_expr(e[1]), _gen_expr(e[2]))
    if kind == "sub":
        return "(_num(%s) - _num(%s))" % (_gen_expr(e[1]), _gen_expr(e[2]))
    raise RuleSyntaxError(repr(e))


_PYCMP = {"lt": "<", "le": "<=", "gt": ">", "ge": ">="}


def _gen_cond(c):
    op = c[0]
    if op == "and":
        return "(%s and %s)" % (_gen_cond(c[1]), _gen_cond(c[2]))
    if op == "or":
        return "(%s or %s)" % (_gen_cond(c[1]), _gen_cond(c[2]))
    if op == "not":
        return "(not %s)" % _gen_cond(c[1])
    if op == "alpha":
        return "ctx.alpha"
    if op == "ctrl":
        return "(ctx.side is not None)"
    if op == "is":
        return "bool(%s)" % _gen_expr(c[1])
    a, b = _gen_expr(c[1]), _gen_expr(c[2])
    if op == "eq":
        return "_eq(%s, %s)" % (a, b)
    if op == "ne":
        return "(not _eq(%s, %s))" % (a, b)
    return "_ord(%s, %s, %r)" % (a, b, op)


def _ord(a, b, op):
    if not _cmp(a, b):
        return False
    return {"lt": a < b, "le": a <= b, "gt": a > b, "ge": a >= b}[op]


def _gen_block(stmts, ind, out):
    if not stmts:
        out.append(ind + "pass")
        return
    for s in stmts:
        kind = s[0]
        if kind == "if":
            out.append(ind + "if %s:" % _gen_cond(s[1]))
            _gen_block(s[2], ind + "    ", out)
            if s[3] is not None:
                out.append(ind + "else:")
                _gen_block(s[3], ind + "    ", out)
        elif kind == "set":
            out.append(ind + "ctx.set(%r, %r, %s)" % (s[1][1], s[1][2], _gen_expr(s[2])))
        elif kind == "let":
            out.append(ind + "ctx.vars[%r] = %s" % (s[1], _gen_expr(s[2])))
        elif kind == "move":
            out.append(ind + "ctx.move(%s)" % _gen_expr(s[1]))
            out.append(ind + "return")
        elif kind == "wpb":
            out.append(ind + "ctx.wpb()")
        elif kind == "payload":
            out.append(ind + "ctx.payload()")
            out.append(ind + "return")
        elif kind == "prim":
            out.append(ind + "ctx.prim(%r)" % s[1])


def compile_source(stmts):
    out = ["def _tau(ctx):"]
    _gen_block(stmts, "    ", out)
    return "\n".join(out) + "\n"


def compile_program(stmts):
    ns = {"_num": _num, "_eq": _eq, "_ord": _ord}
    exec(compile(compile_source(stmts), "<rules>", "exec"), ns)
    return ns["_tau"]


def eval_rules(R, k, va, alpha, params=None, hooks=None, route="compiled"):
    """tau_{R,k}(va, alpha) -> ((a', b'), d)."""
    prog = as_program(R)
    for s in va:
        if not isinstance(s, dict):
            raise ValueError("transition function input must be a cell, got %r" % (s,))
    if route == "stream":
        it = StreamInterp(k, va, alpha, params, hooks, prog.symbols)
        it.feed(prog.tokens)
        return it.finish()
    ctx = Context(va, k, alpha, params, hooks, prog.symbols)
    prog.compiled(ctx)
    return ctx.result()


# ------------------------------------------------------------------ streaming route

class StreamInterp:
    """Pushdown interpreter consuming the program one token at a time.

    State: a frame stack for IF nesting, an operand stack for the prefix expression
    being read, and (when skipping an inactive branch) a nesting depth.  After a
    terminal instruction every further token is ignored.  With defer_payload the
    interpreter stops at PAYLOAD with status "payload" instead of running the hook.
    """

    def __init__(self, k, va, alpha, params=None, hooks=None, rsyms=(), defer_payload=False):
        self.ctx = Context(va, k, alpha, params, hooks, rsyms)
        self.frames = []        # "then" / "else" for active branches
        self.skip = None        # None or [depth, purpose] with purpose "else" or "end"
        self.pending = None     # statement waiting for operands: [kind, extra]
        self.ops = []           # operand stack of [op, arity, args]
        self.steps = 0
        self.defer_payload = defer_payload

    def clone(self):
        new = copy.copy(self)
        new.ctx = copy.copy(self.ctx)
        new.ctx.cells = [dict(c) for c in self.ctx.cells]
        new.ctx.vars = dict(self.ctx.vars)
        new.ctx.events = list(self.ctx.events)
        new.frames = list(self.frames)
        new.skip = None if self.skip is None else list(self.skip)
        new.pending = None if self.pending is None else list(self.pending)
        new.ops = [[o[0], o[1], list(o[2])] for o in self.ops]
        return new

    def to_state(self):
        """Plain-data snapshot (tuples, dicts, scalars) suitable for storing on a tape."""
        c = self.ctx
        return ("interp", c.k, (dict(c.cells[0]), dict(c.cells[1])), c.alpha, c.side, c.d, c.done, c.status,
                tuple(sorted(c.vars.items())), tuple(self.frames),
                None if self.skip is None else tuple(self.skip),
                None if self.pending is None else tuple(self.pending),
                tuple((o[0], o[1], tuple(o[2])) for o in self.ops), self.steps, self.defer_payload)

    @classmethod
    def from_state(cls, state, params=None, hooks=None, rsyms=()):
        (_, k, cells, alpha, side, d, done, status, vars_, frames, skip, pending, ops, steps,
         defer) = state
        it = cls(k, cells, alpha, params, hooks, rsyms, defer)
        c = it.ctx
        c.side, c.d, c.done, c.status = side, d, done, status
        c.vars = dict(vars_)
        it.frames = list(frames)
        it.skip = None if skip is None else list(skip)
        it.pending = None if pending is None else list(pending)
        it.ops = [[o[0], o[1], list(o[2])] for o in ops]
        it.steps = steps
        return it

    def __repr__(self):
        return "StreamInterp%r" % (self.to_state(),)

    @property
    def done(self):
        return self.ctx.done or self.ctx.status is not None

    def feed(self, tokens):
        for t in tokens:
            if self.done:
                return
            self.steps += 1
            self._token(t)

    def finish(self):
        if self.pending is not None or self.ops or (self.frames and not self.done):
            if not self.done:
                raise RuleSyntaxError("program ended inside a statement")
        return self.ctx.result()

    # -- token dispatch
    def _token(self, t):
        if self.skip is not None:
            depth, purpose = self.skip
            if t == "IF":
                self.skip[0] += 1
            elif t == "END":
                if depth == 0:
                    self.skip = None
                else:
                    self.skip[0] -= 1
            elif t == "ELSE" and depth == 0 and purpose == "else":
                self.skip = None
                self.frames.append("else")
            return
        if self.pending is not None:
            self._operand_token(t)
            return
        if t == "IF":
            self.pending = ["if", None]
            self.ops = [["cond", 1, []]]
        elif t == "ELSE":
            if not self.frames or self.frames[-1] != "then":
                raise RuleSyntaxError("ELSE outside an active THEN branch")
            self.frames.pop()
            self.skip = [0, "end"]
        elif t == "END":
            if not self.frames:
                raise RuleSyntaxError("unbalanced END")
            self.frames.pop()
        elif t == "SET":
            self.pending = ["set", None]
        elif t == "LET":
            self.pending = ["let", None]
        elif t == "MOVE":
            self.pending = ["move", None]
            self.ops = [["expr", 1, []]]
        elif t == "WPB":
            self.ctx.wpb()
        elif t == "PAYLOAD":
            if self.defer_payload:
                self.ctx.status = "payload"
            else:
                self.ctx.payload()
        elif t.startswith("@"):
            self.ctx.prim(t[1:])
        else:
            raise RuleSyntaxError("unexpected token %r" % t)

    def _operand_token(self, t):
        kind = self.pending[0]
        if kind in ("set", "let") and self.pending[1] is None:
            v = _value_token(t)
            if v is None or v[0] != ("ref" if kind == "set" else "var"):
                raise RuleSyntaxError("bad %s target %r" % (kind.upper(), t))
            self.pending[1] = v
            self.ops = [["expr", 1, []]]
            return
        if kind == "if" and self.pending[1] is not None:
            if t != "THEN":
                raise RuleSyntaxError("expected THEN, got %r" % t)
            val = self.pending[1][0]
            self.pending = None
            if val:
                self.frames.append("then")
            else:
                self.skip = [0, "else"]
            return
        top = self.ops[-1]
        want_cond = top[0] in ("cond", "AND", "OR", "NOT")
        if want_cond:
            if t not in COND_ARITY:
                raise RuleSyntaxError("expected a condition, got %r" % t)
            ar = COND_ARITY[t]
            if ar == 0:
                self._push_value(self.ctx.alpha if t == "ALPHA" else self.ctx.side is not None)
            else:
                self.ops.append([t, ar, []])
            return
        if t in EXPR_ARITY:
            self.ops.append([t, 2, []])
            return
        v = _value_token(t)
        if v is None:
            raise RuleSyntaxError("expected an expression, got %r" % t)
        self._push_value(self._value(v))

    def _value(self, v):
        kind = v[0]
        if kind == "lit":
            return v[1]
        if kind == "ref":
            return self.ctx.get(v[1], v[2])
        if kind == "param":
            return self.ctx.param(v[1])
        return self.ctx.vars.get(v[1])

    def _push_value(self, val):
        while True:
            top = self.ops[-1]
            top[2].append(val)
            if len(top[2]) < top[1]:
                return
            self.ops.pop()
            op, _, args = top
            if op in ("cond", "expr"):
                self._complete(args[0])
                return
            val = _apply(op, args)


    def _complete(self, val):
        kind, extra = self.pending
        self.ops = []
        if kind == "if":
            self.pending[1] = (val,)
            return
        self.pending = None
        if kind == "set":
            self.ctx.set(extra[1], extra[2], val)
        elif kind == "let":
            self.ctx.vars[extra[1]] = val
        elif kind == "move":
            self.ctx.move(val)


def _apply(op, args):
    if op == "ADD":
        return _num(args[0]) + _num(args[1])
    if op == "SUB":
        return _num(args[0]) - _num(args[1])
    if op == "AND":
        return bool(args[0]) and bool(args[1])
    if op == "OR":
        return bool(args[0]) or bool(args[1])
    if op == "NOT":
        return not args[0]
    if op == "IS":
        return bool(args[0])
    if op == "EQ":
        return _eq(args[0], args[1])
    if op == "NE":
        return not _eq(args[0], args[1])
    return _ord(args[0], args[1], op.lower())


# ------------------------------------------------------------------ self-simulation

def header_cells(k, va, alpha):
    """Work-track suffix written after R: 0^{k+1}, the two observed symbols, alpha."""
    return ("0" * (k + 1), va[0], va[1], bool(alpha))


def write_program_track(R, k, va, alpha, hooks=None):
    """Stage 1 of self-simulation: one WriteProgramBit per Index, then the header.

    Returns (track, sweeps) where sweeps counts the WriteProgramBit applications.
    """
    prog = as_program(R)
    track = []
    for i in range(1, len(prog.symbols) + 1):
        ctx = Context(({"Index": i, "Head": False}, {"Head": False}), k, alpha, None, hooks, prog.symbols)
        ctx.wpb()
        track.append(ctx.cells[0]["Work"])
    return tuple(track) + header_cells(k, va, alpha), len(prog.symbols)


def track_interpreter(track, nprog, params=None, hooks=None, defer_payload=False):
    """Start the streaming interpreter from a Work track's header (level k+1)."""
    zeros, a, b, alpha = track[nprog:nprog + 4]
    return StreamInterp(len(zeros), (a, b), alpha, params, hooks, track[:nprog], defer_payload)


def interpret_on_track(R, k, va, alpha, params=None, hooks=None):
    """Two-stage self-simulation; equals eval_rules(R, k + 1, va, alpha)."""
    prog = as_program(R)
    track, _ = write_program_track(prog, k, va, alpha, hooks)
    it = track_interpreter(track, len(prog.symbols), params, hooks)
    for word in track[:len(prog.symbols)]:
        it.feed(word.split())
    return it.finish()


def step_count(R, k, va, alpha=True, params=None, hooks=None):
    """Tokens consumed by the streaming interpreter before it stops."""
    prog = as_program(R)
    it = StreamInterp(k, va, alpha, params, hooks, prog.symbols)
    it.feed(prog.tokens)
    it.finish()
    return it.steps
