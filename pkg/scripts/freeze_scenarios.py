"""Record scenario outcomes as goldens (tests/fixtures/scenarios.json)."""
import json
import sys
from pathlib import Path

from fttm.harness import SCENARIOS


def outcomes():
    out = {}
    for name, sc in sorted(SCENARIOS.items()):
        o = sc.run()
        out[name] = {k: v for k, v in o.items() if k != "heads"}
    return out


if __name__ == "__main__":
    path = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/scenarios.json"
    o = outcomes()
    Path(path).write_text(json.dumps(o, indent=1, sort_keys=True) + "\n")
    print(json.dumps(o, sort_keys=True))
