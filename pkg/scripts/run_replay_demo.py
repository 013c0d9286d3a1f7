#!/usr/bin/env python3
"""End-to-end demo on the committed clamp corpus.

Extracts sequences from the vectorized clamp module, replays the recorded
agent responses (first attempt has a syntax error, second verifies), and
prints the resulting finding plus run counters. Everything runs offline
with the builtin equivalence oracle.

Usage: python scripts/run_replay_demo.py [workdir]
"""

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from peepseek.agent import AgentConfig
from peepseek.pipeline import PipelineConfig, run, self_check


def main() -> int:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="peepseek-demo-"))
    workdir.mkdir(parents=True, exist_ok=True)
    cfg = PipelineConfig(
        corpus=[str(REPO / "fixtures" / "corpus")],
        agent=AgentConfig(
            backend="scripted-replay",
            transcript_path=str(REPO / "fixtures" / "clamp_replay_transcript.jsonl"),
        ),
        verifier="builtin",
        deterministic=True,
        digest_file=str(workdir / "digests.bin"),
        findings_file=str(workdir / "findings.jsonl"),
        stats_file=str(workdir / "stats.json"),
    )
    stats = run(cfg)
    print(stats.to_json())
    for line in (workdir / "findings.jsonl").read_text().splitlines():
        record = json.loads(line)
        print(f"finding #{record['id']} "
              f"({record['metrics_before']['instruction_count']} -> "
              f"{record['metrics_after']['instruction_count']} instructions, "
              f"{record['verifier']} verified)")
        print("--- original ---")
        print(record["original_ir"])
        print("--- optimized ---")
        print(record["candidate_ir"])
    failures = self_check(cfg, cfg.findings_file)
    print("self-check:", "ok" if not failures else failures)
    print(f"artifacts in {workdir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
