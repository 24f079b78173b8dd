"""Block codes for colonies: repetition and Reed-Solomon burst codes, padding, compliance,
and the configuration code that spreads big cells over colonies of small ones."""
import itertools
import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .symbols import BAD, VAC, blank, decode_symbol, encode_symbol, is_cell
from .tape import Configuration, Tape


class DecodeFailure(Exception):
    pass


class CodeParamError(ValueError):
    pass


def burst_cover(positions, beta):
    """Fewest intervals of length <= beta covering the positions (greedy is optimal)."""
    n, end = 0, None
    for p in sorted(positions):
        if end is None or p >= end:
            n += 1
            end = p + beta
    return n


def diff_positions(a, b):
    return [i for i, (x, y) in enumerate(zip(a, b)) if x != y]


# ------------------------------------------------------------------ repetition

class RepetitionCode:
    """x -> x repeated `fold` times; positionwise majority decoding."""

    def __init__(self, Q, fold=3, beta=None):
        if fold not in (3, 5):
            raise CodeParamError("fold must be 3 or 5")
        if Q % fold:
            raise CodeParamError("Q=%d not divisible by %d" % (Q, fold))
        self.Q, self.fold, self.m = Q, fold, Q // fold
        self.beta = self.m if beta is None else beta
        if self.beta > self.m:
            raise CodeParamError("beta=%d exceeds Q/%d" % (self.beta, fold))
        self.t = (fold - 1) // 2

    def encode(self, x):
        x = tuple(x)
        if len(x) != self.m:
            raise CodeParamError("message length %d != %d" % (len(x), self.m))
        return x * self.fold

    def decode(self, y):
        y = tuple(y)
        if len(y) != self.Q:
            raise CodeParamError("word length %d != %d" % (len(y), self.Q))
        out = []
        for i in range(self.m):
            votes = Counter(y[i + j * self.m] for j in range(self.fold))
            v, c = votes.most_common(1)[0]
            if 2 * c <= self.fold:
                raise DecodeFailure("no majority at position %d" % i)
            out.append(v)
        return tuple(out)

    def codewords(self, alphabet=(0, 1)):
        for x in itertools.product(alphabet, repeat=self.m):
            yield x, self.encode(x)

    def decode_bits_batch(self, words):
        """Binary words as integers (bit i = position i); numpy majority in bit-parallel form."""
        w = np.asarray(words, dtype=np.int64)
        mask = (1 << self.m) - 1
        parts = [(w >> (j * self.m)) & mask for j in range(self.fold)]
        if self.fold == 3:
            a, b, c = parts
            return (a & b) | (a & c) | (b & c)
        # 5-way majority: at least 3 of the 5 bits set
        out = np.zeros_like(w)
        for trio in itertools.combinations(parts, 3):
            out |= trio[0] & trio[1] & trio[2]
        return out

    def encode_bits(self, x):
        return sum(x << (j * self.m) for j in range(self.fold))


# ------------------------------------------------------------------ GF(2^l)

_PRIM = {2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x89, 8: 0x11D, 9: 0x211, 10: 0x409,
         11: 0x805, 12: 0x1053, 13: 0x201B, 14: 0x4443, 15: 0x8003, 16: 0x1100B}


class GF:
    def __init__(self, l):
        if l not in _PRIM:
            raise CodeParamError("no primitive polynomial for l=%d" % l)
        self.l, self.size = l, 1 << l
        n = self.size - 1
        self.exp = [0] * (2 * n)
        self.log = [0] * self.size
        x = 1
        for i in range(n):
            self.exp[i] = x
            self.log[x] = i
            x <<= 1
            if x & self.size:
                x ^= _PRIM[l]
        for i in range(n, 2 * n):
            self.exp[i] = self.exp[i - n]
        self.n = n

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError
        if a == 0:
            return 0
        return self.exp[(self.log[a] - self.log[b]) % self.n]

    def inv(self, a):
        return self.exp[(self.n - self.log[a]) % self.n]

    def pow_a(self, e):
        return self.exp[e % self.n]

    def poly_eval(self, p, x):
        """p lists coefficients from the highest degree down."""
        y = 0
        for c in p:
            y = self.mul(y, x) ^ c
        return y

    def poly_mul(self, p, q):
        r = [0] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            if a:
                for j, b in enumerate(q):
                    r[i + j] ^= self.mul(a, b)
        return r


class RSCode:
    """Shortened systematic Reed-Solomon code of length n with nsym check symbols."""

    def __init__(self, l, n, nsym):
        self.gf = GF(l)
        if n > self.gf.n:
            raise CodeParamError("length %d exceeds 2^%d - 1" % (n, l))
        if not 0 < nsym < n:
            raise CodeParamError("need 0 < nsym < n")
        self.n, self.nsym, self.k = n, nsym, n - nsym
        g = [1]
        for i in range(nsym):
            g = self.gf.poly_mul(g, [1, self.gf.pow_a(i)])
        self.gen = g

    def encode(self, msg):
        msg = list(msg)
        if len(msg) != self.k:
            raise CodeParamError("message length %d != %d" % (len(msg), self.k))
        if any(not 0 <= s < self.gf.size for s in msg):
            raise CodeParamError("symbol out of field range")
        rem = msg + [0] * self.nsym
        for i in range(self.k):
            c = rem[i]
            if c:
                for j in range(1, len(self.gen)):
                    rem[i + j] ^= self.gf.mul(self.gen[j], c)
        return tuple(msg + rem[self.k:])

    def syndromes(self, word):
        return [self.gf.poly_eval(word, self.gf.pow_a(i)) for i in range(self.nsym)]

    def decode(self, word):
        """Corrects up to nsym // 2 symbol errors; raises DecodeFailure otherwise."""
        gf = self.gf
        word = list(word)
        if len(word) != self.n:
            raise CodeParamError("word length %d != %d" % (len(word), self.n))
        if any(not 0 <= s < gf.size for s in word):
            raise DecodeFailure("symbol out of field range")
        synd = self.syndromes(word)
        if not any(synd):
            return tuple(word[:self.k])
        # Berlekamp-Massey; polynomials stored lowest degree first
        lam, prev = [1], [1]
        L, m, b = 0, 1, 1
        for i in range(self.nsym):
            d = synd[i]
            for j in range(1, L + 1):
                if j < len(lam):
                    d ^= gf.mul(lam[j], synd[i - j])
            if d == 0:
                m += 1
                continue
            coef = gf.div(d, b)
            shifted = [0] * m + [gf.mul(coef, c) for c in prev]
            new = [(lam[j] if j < len(lam) else 0) ^ (shifted[j] if j < len(shifted) else 0)
                   for j in range(max(len(lam), len(shifted)))]
            if 2 * L <= i:
                prev, L, b, m = lam, i + 1 - L, d, 1
            else:
                m += 1
            lam = new
        while len(lam) > 1 and lam[-1] == 0:
            lam.pop()
        if len(lam) - 1 != L or 2 * L > self.nsym:
            raise DecodeFailure("error locator inconsistent")
        # Chien search over the positions actually present (shortened code)
        locs = []
        for pos in range(self.n):
            deg = self.n - 1 - pos
            xinv = gf.pow_a(-deg)
            v = 0
            for c in reversed(lam):
                v = gf.mul(v, xinv) ^ c
            if v == 0:
                locs.append((pos, deg))
        if len(locs) != L:
            raise DecodeFailure("error locator has %d roots in range, degree %d" % (len(locs), L))
        # Forney: omega = S * lambda mod x^nsym
        omega = [0] * self.nsym
        for i, s in enumerate(synd):
            if s:
                for j, c in enumerate(lam):
                    if i + j < self.nsym:
                        omega[i + j] ^= gf.mul(s, c)
        dlam = [lam[j] if j % 2 == 1 else 0 for j in range(1, len(lam))]
        for pos, deg in locs:
            X = gf.pow_a(deg)
            xinv = gf.inv(X)
            num = 0
            for c in reversed(omega):
                num = gf.mul(num, xinv) ^ c
            den = 0
            for c in reversed(dlam):
                den = gf.mul(den, xinv) ^ c
            if den == 0:
                raise DecodeFailure("zero derivative")
            word[pos] ^= gf.mul(X, gf.div(num, den))
        if any(self.syndromes(word)):
            raise DecodeFailure("residual syndrome")
        return tuple(word[:self.k])


class BurstRSCode:
    """(beta, t)-burst-correcting code over cells of `cell_bits` bits.

    Each field symbol spans span = l // cell_bits cells; a burst of beta cells touches at
    most ceil((beta-1)/span) + 1 symbols, and the check-symbol count covers t such bursts.
    The word may be split into `segments` independently coded blocks; a burst meeting two
    blocks counts once in each, so every block still sees at most t bursts.
    """

    def __init__(self, beta, t, l=8, cell_bits=8, k=None, segments=1):
        if l % cell_bits:
            raise CodeParamError("cell_bits must divide l")
        self.beta, self.t, self.l, self.cell_bits = beta, t, l, cell_bits
        self.span = l // cell_bits
        self.touch = -(-(beta - 1) // self.span) + 1 if beta > 0 else 0
        self.nsym = 2 * t * self.touch
        self.k = k if k is not None else max(1, 2 * self.nsym)
        self.segments = segments
        self.rs = RSCode(l, self.k + self.nsym, self.nsym)
        self.block_cells = self.rs.n * self.span
        self.Q = self.block_cells * segments
        self.msg_len = self.k * segments

    def _cells(self, syms):
        out = []
        m = (1 << self.cell_bits) - 1
        for s in syms:
            for j in range(self.span):
                out.append((s >> (self.cell_bits * (self.span - 1 - j))) & m)
        return out

    def _syms(self, cells):
        out = []
        for i in range(0, len(cells), self.span):
            v = 0
            for c in cells[i:i + self.span]:
                v = (v << self.cell_bits) | c
            out.append(v)
        return out

    def encode(self, msg):
        msg = list(msg)
        if len(msg) != self.msg_len:
            raise CodeParamError("message length %d != %d" % (len(msg), self.msg_len))
        out = []
        for s in range(self.segments):
            out += self._cells(self.rs.encode(msg[s * self.k:(s + 1) * self.k]))
        return tuple(out)

    def decode(self, word):
        word = list(word)
        if len(word) != self.Q:
            raise CodeParamError("word length %d != %d" % (len(word), self.Q))
        lim = 1 << self.cell_bits
        if any(not (isinstance(c, int) and 0 <= c < lim) for c in word):
            raise DecodeFailure("cell value outside the alphabet")
        out = []
        for s in range(self.segments):
            blk = word[s * self.block_cells:(s + 1) * self.block_cells]
            out += self.rs.decode(self._syms(blk))
        return tuple(out)


# ------------------------------------------------------------------ padding, compliance

class PsiCode:
    """PadLen zero cells on both sides of the inner codeword; pads are ignored on decode."""

    def __init__(self, inner, padlen, zero=0):
        self.inner, self.padlen, self.zero = inner, padlen, zero
        self.Q = inner.Q + 2 * padlen

    def encode(self, a):
        z = (self.zero,) * self.padlen
        return z + tuple(self.inner.encode(a)) + z

    def strip(self, word):
        word = tuple(word)
        if len(word) != self.Q:
            raise CodeParamError("word length %d != %d" % (len(word), self.Q))
        return word[self.padlen:self.Q - self.padlen]

    def decode(self, word):
        return self.inner.decode(self.strip(word))


@dataclass
class ComplianceReport:
    compliant: bool
    r: int
    bursts: object          # fewest bursts to the nearest codeword found (None if none)
    codeword: object
    ambiguous: bool = False
    exact: bool = True


def compliance_check(word, code, r, beta=None, alphabet=None, brute_limit=4096):
    """Is word within r bursts (length <= beta) of a codeword?

    Exact by enumeration for small repetition codes; otherwise the decoder's answer is the
    witness (exact=False in the report).
    """
    beta = code.beta if beta is None else beta
    word = tuple(word)
    if isinstance(code, RepetitionCode):
        alph = sorted(set(alphabet or ()) | set(word), key=repr)
        if len(alph) ** code.m <= brute_limit:
            scored = [(burst_cover(diff_positions(word, c), beta), c) for _, c in code.codewords(alph)]
            best = min(n for n, _ in scored)
            ties = [c for n, c in scored if n == best]
            # ambiguous: more than one nearest codeword, all equally acceptable
            return ComplianceReport(best <= r, r, best, ties[0], ambiguous=len(ties) > 1)
    try:
        c = code.encode(code.decode(word))
    except DecodeFailure:
        return ComplianceReport(False, r, None, None, exact=False)
    n = burst_cover(diff_positions(word, c), beta)
    return ComplianceReport(n <= r, r, n, c, exact=False)


# ------------------------------------------------------------------ symbols as messages

NEW_TAGS = ("~new0", "~new1")
VAC_TAG = "~vac"


def symbol_to_message(sym, m):
    """Split a big-cell symbol into m hashable chunks; New and Vac get constant patterns."""
    if sym is VAC:
        return (VAC_TAG,) * m
    if sym is BAD:
        raise CodeParamError("Bad has no encoding")
    if sym.get("Kind") == "New" and sym == blank(Kind="New", Pass=sym["Pass"]) and sym["Pass"] in (0, 1):
        return (NEW_TAGS[sym["Pass"]],) * m
    text = json.dumps(encode_symbol(sym), separators=(",", ":"))
    step = -(-len(text) // m)
    return tuple(text[i * step:(i + 1) * step] for i in range(m))


def message_to_symbol(msg):
    msg = tuple(msg)
    if all(x == VAC_TAG for x in msg):
        return VAC
    for i, tag in enumerate(NEW_TAGS):
        if all(x == tag for x in msg):
            return blank(Kind="New", Pass=i)
    try:
        return decode_symbol(json.loads("".join(msg)))
    except (ValueError, TypeError):
        raise DecodeFailure("chunks do not form a symbol")


class SymbolCode:
    """Whole-symbol code: chunking followed by a psi code over the chunks."""

    def __init__(self, psi):
        self.psi = psi
        self.Q = psi.Q
        self.m = psi.inner.m

    def encode(self, sym):
        return self.psi.encode(symbol_to_message(sym, self.m))

    def decode(self, word):
        return message_to_symbol(self.psi.decode(word))


def running_code(Q=16, padlen=3):
    """Five-fold repetition inside PadLen pads: (beta, 2)-burst-correcting on the interior."""
    return SymbolCode(PsiCode(RepetitionCode(Q - 2 * padlen, 5), padlen))


# ------------------------------------------------------------------ configurations

def phi_encode(src, code, Q, B1=1, extra=None):
    """Spread each big cell of src over a colony of Q small cells holding its codeword.

    The current pair of src must be (pos, pos + B2).  Small cells get Info, Addr, Age=0,
    Sweep=0, Pass=0; Kind is Member0/Member1 on the current pair and Outer elsewhere;
    Drift points toward the current pair.  `extra(p, cell) -> dict` may add fields.
    """
    B2 = src.tape.B
    if B2 != Q * B1:
        raise CodeParamError("B2/B1 must equal Q")
    if src.cur != (src.pos, src.pos + B2):
        raise CodeParamError("source current pair %r is not (pos, pos + B)" % (src.cur,))
    cells = {}
    for p, sym in src.tape.items():
        word = code.encode(sym)
        if p == src.cur[0]:
            kind, drift = "Member0", None
        elif p == src.cur[1]:
            kind, drift = "Member1", None
        else:
            kind, drift = "Outer", (1 if p < src.cur[0] else -1)
        for a in range(Q):
            pos = p + a * B1
            c = blank(Info=word[a], Addr=a, Age=0, Sweep=0, Kind=kind, Drift=drift, Pass=0)
            if extra is not None:
                c.update(extra(pos, c) or {})
            cells[pos] = c
    return Configuration(Tape(B1, cells), src.pos, (src.pos, src.pos + B1))


def colony_words(cfg, base, Q, B1=1):
    """Info track of the colony starting at base (None where a cell is missing)."""
    out = []
    for a in range(Q):
        c = cfg.tape.get(base + a * B1)
        out.append(c["Info"] if is_cell(c) else None)
    return tuple(out)


def phi_decode(cfg, code, Q, bases, B1=1):
    """Decode the colonies at the given base positions into a big-cell configuration."""
    B2 = Q * B1
    cells = {}
    for b in bases:
        try:
            cells[b] = code.decode(colony_words(cfg, b, Q, B1))
        except DecodeFailure:
            cells[b] = BAD
    cells = {p: s for p, s in cells.items() if s is not VAC}
    return Configuration(Tape(B2, cells), cfg.pos, (cfg.pos, cfg.pos + B2))
