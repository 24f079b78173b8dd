"""Target machine G (a unary incrementer) and the payload step built on it.

The G tape of a cell pair is the concatenation of the two cells' Payload segments.
A segment payload is (base, symbols, head) with head = (local index, state) or None.
"""

BLANK = "_"
START = "S"
ONE = "1"
HALT = "h"

# (state, read) -> (state', write, move)
G_DELTA = {
    ("a", START): ("a", START, 1),
    ("a", ONE): ("a", ONE, 1),
    ("a", BLANK): ("b", ONE, -1),
    ("b", ONE): ("b", ONE, -1),
    ("b", START): (HALT, START, 0),
}


def g_input(n, width=16):
    """Segment holding the start marker followed by n ones."""
    if n + 1 > width:
        raise ValueError("input of length %d does not fit a segment of %d" % (n, width))
    return (START,) + (ONE,) * n + (BLANK,) * (width - 1 - n)


def g_run(tape, idx, state, max_steps):
    """Run G on a finite window; stops at halt, after max_steps, or at the window edge.

    Returns (tape, idx, state, steps, reason) with reason in halt/limit/edge.
    """
    tape = list(tape)
    steps = 0
    while True:
        if state == HALT:
            return tuple(tape), idx, state, steps, "halt"
        if steps >= max_steps:
            return tuple(tape), idx, state, steps, "limit"
        key = (state, tape[idx])
        if key not in G_DELTA:
            # no rule: treat as halting in place
            return tuple(tape), idx, HALT, steps, "halt"
        state, tape[idx], mv = G_DELTA[key]
        steps += 1
        nxt = idx + mv
        if not 0 <= nxt < len(tape):
            return tuple(tape), idx, state, steps, "edge"
        idx = nxt


def g_output(tape, zero):
    """The word from G cell 0 up to the first blank."""
    out = []
    for s in tape[zero:]:
        if s == BLANK:
            break
        out.append(s)
    return "".join(out)


def g_oracle(n, max_steps=10000):
    """Native unbounded run of G on input n; returns the output word."""
    tape = list(g_input(n, n + 3))
    idx, state = 0, "a"
    for _ in range(max_steps):
        if state == HALT:
            return g_output(tape, 0)
        state, tape[idx], mv = G_DELTA[(state, tape[idx])]
        idx += mv
        if idx == len(tape):
            tape.append(BLANK)
    raise RuntimeError("G did not halt")


def pair_tape(L, R, Q):
    """Flatten the Payload segments of a cell pair: (tape, bases, head) with combined head index."""
    tape, bases, head = [], [], None
    for side, cell in enumerate((L, R)):
        pl = cell.get("Payload") if isinstance(cell, dict) else None
        if isinstance(pl, tuple) and len(pl) == 3 and isinstance(pl[1], tuple) and len(pl[1]) == Q:
            base, seg, h = pl
            if h is not None and head is None:
                head = (side * Q + h[0], h[1])
        else:
            base, seg = None, (BLANK,) * Q
        tape.extend(seg)
        bases.append(base)
    return tape, bases, head


def direction_of(idx, Q):
    """Simulated head in the outer half of a colony pulls the pair; otherwise stay (d = 0)."""
    if idx < Q // 2:
        return -1
    if idx >= Q + Q // 2:
        return 1
    return 0


def payload_finish(cells, tape, bases, idx, state, Q):
    """Write the G window back into the pair; returns the pair direction in {-1, 0, 1}.

    cells is a mutable [L, R]; Output goes to the cell whose segment holds G cell 0.
    """
    for side in (0, 1):
        seg = tuple(tape[side * Q:(side + 1) * Q])
        h = None
        if idx is not None and side * Q <= idx < (side + 1) * Q:
            h = (idx - side * Q, state)
        base = bases[side]
        if base is None:
            base = (bases[1 - side] - Q if side == 0 else bases[0] + Q) if bases[1 - side] is not None else None
        cells[side]["Payload"] = (base, seg, h)
    if state == HALT:
        for side in (0, 1):
            base = bases[side]
            if base is not None and base <= 0 < base + Q:
                zero = side * Q - base
                cells[side]["Output"] = g_output(tape, zero)
    return direction_of(idx if idx is not None else Q, Q)


def payload_step(cells, Q, max_steps=None):
    """One PAYLOAD action on a cell pair: run G for up to Q steps; returns d in {-1, 0, 1}."""
    tape, bases, head = pair_tape(cells[0], cells[1], Q)
    if head is None:
        return payload_finish(cells, tape, bases, None, None, Q)
    tape, idx, state, _, _ = g_run(tape, head[0], head[1], Q if max_steps is None else max_steps)
    return payload_finish(cells, tape, bases, idx, state, Q)


def payload_hook(Q):
    """PAYLOAD hook for the rule engine: d = 0 becomes +1 with Ret set (a later step returns)."""
    def hook(ctx):
        cells = ctx.cells
        d = payload_step(cells, Q)
        c = cells[ctx.idx("C")]
        if d == 0:
            c["Ret"] = True
            d = 1
        ctx.move(d)
    return hook
