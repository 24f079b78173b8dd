"""Cell symbols: the closed field schema, the Vac/Bad sentinels and the New states.

A symbol is a plain dict keyed by field name.  Symbols stored on a tape or in a
trace are never mutated; transitions build fresh dicts.
"""
import json
import random as _random

KINDS = ("New", "Booting", "Stem", "Member0", "Member1", "Bridge", "Outer")
PROCS = ("Sim", "Boot", "Heal", "Rebuild", "Idle")
SPECIAL_BIGDIG = ("w", "d-1", "d+1")  # omega, delta_{-1}, delta_{+1}


class _Sentinel:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_sentinel, (self.name,))


VAC = _Sentinel("Vac")
BAD = _Sentinel("Bad")


def _sentinel(name):
    return VAC if name == "Vac" else BAD


class Field:
    """Declared field: name, default and a generator of arbitrary legal values."""

    def __init__(self, name, default=None, kind="opaque", values=None, lo=0, hi=None, core=False):
        self.name = name
        self.default = default
        self.kind = kind
        self.values = values
        self.lo = lo
        self.hi = hi
        self.core = core

    def sample(self, rng, params=None):
        if self.kind == "enum":
            return rng.choice(self.values)
        if self.kind == "bool":
            return rng.choice((None, False, True))
        if self.kind == "int":
            hi = self.hi
            if callable(hi):
                hi = hi(params)
            if hi is None:
                hi = 64
            return rng.choice((None, rng.randint(self.lo, hi)))
        # opaque payload fields get a garbage token that no rule produces
        return rng.choice((None, ("junk", rng.randrange(1 << 30))))


def _q(p):
    return (p.Q - 1) if p is not None else 15


def _f(p):
    return ([None, -1] + list(range(0, (p.F if p is not None else 2) + 1)) + list(SPECIAL_BIGDIG))


SCHEMA_VERSION = 2

FIELDS = [
    Field("Kind", "Stem", "enum", KINDS, core=True),
    Field("Addr", None, "int", hi=_q, core=True),
    Field("Age", None, "int", hi=40, core=True),
    Field("Sweep", None, "int", hi=80, core=True),
    Field("Drift", None, "enum", (None, -1, 1), core=True),
    Field("Replace", None, "enum", (None, "new0", "new1"), core=True),
    Field("Pass", 0, "enum", (-1, 0, 1)),
    Field("BigDigression", None, "bigdig", core=True),
    Field("FrontAddr", None, "int", hi=40, core=True),
    Field("Info"),
    Field("Hold1"),
    Field("Hold2"),
    Field("Hold3"),
    Field("Compliant1", None, "bool"),
    Field("Compliant2", None, "bool"),
    Field("Compliant3", None, "bool"),
    Field("Payload"),
    Field("Rebuild.Sweep", None, "int", hi=8, core=True),
    Field("Rebuild.Addr", None, "int", lo=-80, hi=80, core=True),
    Field("Rebuild.Half", None, "enum", (None, -1, 1), core=True),
    Field("Rebuild.Base", None, "enum", (None, 1), core=True),
    Field("Output"),
    Field("Work"),
    Field("Track"),
    Field("Index", None, "int", hi=4000),
    # head-carried control record; lives in the cell that stays in the pair
    Field("Head", False, "enum", (False, True)),
    Field("Proc", None, "enum", (None,) + PROCS),
    Field("Ph", None, "int", hi=60),
    Field("J", None, "int", hi=3),
    Field("Ctr", None, "int", lo=-40, hi=4000),
    Field("Dir", None, "enum", (None, -1, 1)),
    Field("Zig", None, "int", lo=-12, hi=12),
    Field("Acc"),
    Field("Aux"),
    Field("Md", None, "enum", (None, "F", "ZA", "ZB", "ZR", "DG", "DR", "G", "GO")),
    Field("Mv", None, "enum", (None, -1, 1)),
    Field("Dg", None, "int", hi=8),
    Field("Par", None, "int", hi=1),
    Field("Pst", None, "int", hi=40),
    Field("Ret", None, "bool"),
    Field("Chk", None, "int", hi=(1 << 32) - 1),
]

FIELD_NAMES = tuple(f.name for f in FIELDS)
FIELD_INDEX = {n: i for i, n in enumerate(FIELD_NAMES)}
CORE_FIELDS = tuple(f.name for f in FIELDS if f.core)
CONTROL_FIELDS = ("Head", "Proc", "Ph", "J", "Ctr", "Dir", "Zig", "Acc", "Aux", "Md", "Mv", "Dg", "Par",
                  "Pst", "Ret", "Chk")
_BY_NAME = {f.name: f for f in FIELDS}
DEFAULTS = {f.name: f.default for f in FIELDS}


def check_field(name):
    if name not in _BY_NAME:
        raise KeyError("unknown field %r" % name)
    return name


def blank(**kw):
    """A default symbol with the given overrides."""
    s = dict(DEFAULTS)
    for k, v in kw.items():
        s[check_field(k)] = v
    return s


def new_state(i):
    """new_0 or new_1: the two New states differ only in Pass."""
    return blank(Kind="New", Pass=i)


NEW0 = new_state(0)
NEW1 = new_state(1)


def is_new(s):
    return isinstance(s, dict) and s.get("Kind") == "New" and all(
        s[n] == DEFAULTS[n] for n in FIELD_NAMES if n not in ("Kind", "Pass"))


def is_cell(s):
    return isinstance(s, dict)


def with_fields(s, **kw):
    t = dict(s)
    for k, v in kw.items():
        t[check_field(k)] = v
    return t


def random_symbol(rng, params=None):
    """Arbitrary legal (non-Vac, non-Bad) symbol; each field drawn from its domain."""
    s = {}
    for f in FIELDS:
        if f.kind == "bigdig":
            s[f.name] = rng.choice(_f(params))
        else:
            s[f.name] = f.sample(rng, params)
    if s["Pass"] is None:
        s["Pass"] = 0
    return s


# ---------------------------------------------------------------- serialization

def _to_json(v):
    if isinstance(v, tuple):
        return {"t": [_to_json(x) for x in v]}
    if isinstance(v, list):
        raise TypeError("lists are not allowed inside symbols; use tuples")
    if isinstance(v, dict):
        return {"d": [[k, _to_json(x)] for k, x in sorted(v.items())]}
    if isinstance(v, (bytes, bytearray)):
        return {"b": bytes(v).hex()}
    return v


def _from_json(v):
    if isinstance(v, dict):
        if "t" in v:
            return tuple(_from_json(x) for x in v["t"])
        if "d" in v:
            return {k: _from_json(x) for k, x in v["d"]}
        if "b" in v:
            return bytes.fromhex(v["b"])
    return v


def encode_symbol(s):
    """Flat field list in schema order; Vac and Bad are reserved strings."""
    if s is VAC:
        return "Vac"
    if s is BAD:
        return "Bad"
    return [_to_json(s.get(n, DEFAULTS[n])) for n in FIELD_NAMES]


def decode_symbol(obj):
    if obj == "Vac":
        return VAC
    if obj == "Bad":
        return BAD
    if len(obj) != len(FIELD_NAMES):
        raise ValueError("symbol has %d fields, schema has %d" % (len(obj), len(FIELD_NAMES)))
    return {n: _from_json(v) for n, v in zip(FIELD_NAMES, obj)}


def symbol_text(s):
    return json.dumps(encode_symbol(s), separators=(",", ":"), sort_keys=False)


def rng_for(seed):
    return _random.Random(seed)
