#!/usr/bin/env python3
"""Regenerate the committed replay transcript for the vectorized clamp
walkthrough: the first recorded response has a syntax error, the second is
the corrected, one-instruction-shorter candidate.

Usage: python scripts/make_transcript.py [out.jsonl]
"""

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from peepseek.agent import write_transcript
from peepseek.extract import digest
from peepseek.ir import parse_module


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else REPO / "fixtures" / "clamp_replay_transcript.jsonl"
    fixtures = REPO / "fixtures"
    seq = parse_module((fixtures / "clamp_vec_seq.ll").read_text()).functions[0]
    bad = (fixtures / "clamp_vec_bad.ll").read_text()
    good = (fixtures / "clamp_vec_opt.ll").read_text()
    hexdigest = digest(seq).hex
    write_transcript(out, [
        (hexdigest, 0,
         "Here is an optimized version:\n\n```llvm\n" + bad.rstrip("\n") + "\n```\n"),
        (hexdigest, 1,
         "Apologies for the invalid instruction. Corrected version:\n\n```llvm\n"
         + good.rstrip("\n") + "\n```\n"),
    ])
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
