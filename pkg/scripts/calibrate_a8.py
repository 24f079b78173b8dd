"""Pin the work-period constant c in steps <= c*|R|*Q*F*Z^2 (tests/fixtures/golden_a8.json)."""
import json
import sys
from pathlib import Path

from fttm import analysis as an
from fttm import machine as mc
from fttm.params import TOY_L1


def measure():
    r = mc.Runner()
    r.run(21000, until_settled=False)
    steps = an.wp_steps(r.events)
    P = TOY_L1
    denom = len(mc.build_program()) * P.Q * P.F * P.Z ** 2
    return {"wp_steps": steps, "R": len(mc.build_program()), "Q": P.Q, "F": P.F, "Z": P.Z,
            "denominator": denom, "c": max(steps) / denom}


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/golden_a8.json"
    m = measure()
    Path(out).write_text(json.dumps(m, indent=1) + "\n")
    print(json.dumps(m))
