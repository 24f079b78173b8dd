"""Regenerate tests/fixtures/codec_golden.json (message, codeword) pairs."""
import json
import random
import sys
from pathlib import Path

from fttm.codes import BurstRSCode, RepetitionCode, running_code
from fttm.symbols import NEW0, NEW1, blank, encode_symbol


def main(out):
    rng = random.Random(2024)
    rs = BurstRSCode(4, 3)
    rs1 = BurstRSCode(4, 3, l=8, cell_bits=1, k=20)
    rep = RepetitionCode(30, 3)
    data = {
        "rs_b4_t3_l8": [],
        "rs_b4_t3_bits": [],
        "rep3_q30": [],
        "running": [],
    }
    for _ in range(5):
        m = [rng.randrange(256) for _ in range(rs.msg_len)]
        data["rs_b4_t3_l8"].append([m, list(rs.encode(m))])
        m = [rng.randrange(256) for _ in range(rs1.msg_len)]
        data["rs_b4_t3_bits"].append([m, list(rs1.encode(m))])
        m = [rng.randrange(2) for _ in range(rep.m)]
        data["rep3_q30"].append([m, list(rep.encode(m))])
    rc = running_code()
    for s in (NEW0, NEW1, blank(Kind="Booting", Addr=0, Info=("S", 1, 1, 1))):
        data["running"].append([encode_symbol(s), list(rc.encode(s))])
    Path(out).write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/codec_golden.json")
