"""Command-line interface.

Subcommands: extract, optimize, run, verify, replay, report.
Exit codes: 0 success, 1 fatal configuration/IO error, 2 corpus unreadable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from .agent import AgentConfig
from .catalog import DigestSet, iter_findings, load_digests, flush_digests
from .errors import ParseError, PeepseekError, StorageError, ToolError
from .extract import ExtractConfig, ExtractStats, InstrSeq, WrappedFunction, digest, extract
from .ir.parser import parse_module
from .pipeline import (
    CorpusError, PipelineConfig, SequenceOutcome, process_sequence, run,
    self_check, verify_pair, _corpus_files,
)
from .tools import ToolConfig, module_text_for_tools


def load_config(path: str) -> PipelineConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    agent_raw = raw.pop("agent", {})
    tools_raw = raw.pop("tools", {})
    agent = AgentConfig(
        backend=agent_raw.get("backend", "scripted-replay"),
        endpoint=agent_raw.get("endpoint", ""),
        model=agent_raw.get("model", ""),
        api_key_env=agent_raw.get("api_key_env", "PEEPSEEK_API_KEY"),
        transcript_path=agent_raw.get("transcript", ""),
        max_reattempts=raw.get("max_reattempts", 2),
        timeout_s=agent_raw.get("timeout", 60.0),
        temperature=agent_raw.get("temperature", 0.0),
        requests_per_second=agent_raw.get("requests_per_second", 0.0),
        backoff_base_s=agent_raw.get("backoff_base", 1.0),
    )
    tools = ToolConfig(
        opt_path=tools_raw.get("opt", "opt"),
        llc_path=tools_raw.get("llc", "llc"),
        mca_path=tools_raw.get("llvm_mca", "llvm-mca"),
        alive_tv_path=tools_raw.get("alive_tv", "alive-tv"),
        target_triple=tools_raw.get("triple", "x86_64-unknown-unknown"),
        cpu=tools_raw.get("cpu", "btver2"),
        timeout_s=tools_raw.get("timeout", 60.0),
        keep_temps=tools_raw.get("keep_temps", False),
        alive_flags=tuple(tools_raw.get("alive_flags", ["--disable-undef-input"])),
    )
    return PipelineConfig(
        corpus=list(raw.get("corpus", [])),
        agent=agent,
        tools=tools,
        max_reattempts=raw.get("max_reattempts", 2),
        interestingness=raw.get("interestingness", "count-only"),
        verifier=raw.get("verifier", "builtin"),
        workers=raw.get("workers", 1),
        deterministic=raw.get("deterministic", False),
        digest_file=raw.get("digest_file", ""),
        findings_file=raw.get("findings_file", "findings.jsonl"),
        stats_file=raw.get("stats_file", ""),
        sequence_cap=raw.get("sequence_cap", 16),
        filter_optimizable=raw.get("filter_optimizable", False),
        memory_dependence=raw.get("memory_dependence", "off"),
        preprocess_mode=raw.get("preprocess", "auto"),
        per_sequence_budget_s=raw.get("per_sequence_budget", 600.0),
        oracle_budget=raw.get("oracle_budget", 65536),
        oracle_seed=raw.get("oracle_seed", 0),
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peepseek",
        description="Mine instruction sequences from LLVM IR and hunt for "
                    "verified peephole improvements.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="emit wrapped instruction sequences as .ll files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--dedup-file", default="")
    p.add_argument("--out", default="extracted")
    p.add_argument("--sequence-cap", type=int, default=16)
    p.add_argument("--memory-dependence", choices=["off", "conservative"], default="off")

    p = sub.add_parser("optimize", help="run the agent loop on one wrapped function")
    p.add_argument("func")
    p.add_argument("--agent", choices=["http", "replay"], default="replay")
    p.add_argument("--transcript", default="")
    p.add_argument("--endpoint", default="")
    p.add_argument("--model", default="")
    p.add_argument("--verifier", choices=["external", "builtin", "external-then-builtin"],
                   default="external-then-builtin")
    p.add_argument("--max-reattempts", type=int, default=2)
    p.add_argument("--findings", default="")

    p = sub.add_parser("run", help="full pipeline over a corpus")
    p.add_argument("corpus", nargs="*")
    p.add_argument("--config", required=True)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--self-check", action="store_true")

    p = sub.add_parser("verify", help="standalone refinement check of a src/tgt pair")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("--oracle", choices=["builtin", "external"], default="builtin")

    p = sub.add_parser("replay", help="deterministic scripted run over a corpus")
    p.add_argument("corpus", nargs="+")
    p.add_argument("--transcript", required=True)
    p.add_argument("--findings", default="findings.jsonl")
    p.add_argument("--stats", default="")
    p.add_argument("--dedup-file", default="")
    p.add_argument("--verifier", choices=["external", "builtin", "external-then-builtin"],
                   default="builtin")
    p.add_argument("--preprocess", choices=["auto", "external", "builtin"],
                   default="auto")
    p.add_argument("--max-reattempts", type=int, default=2)

    p = sub.add_parser("report", help="render findings and emit re-validation pairs")
    p.add_argument("findings")
    p.add_argument("--pairs-dir", default="")
    return parser


def _cmd_extract(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dedup = DigestSet(load_digests(args.dedup_file) if args.dedup_file else ())
    cfg = ExtractConfig(seq_len_cap=args.sequence_cap,
                        memory_dependence=args.memory_dependence)
    stats = ExtractStats()
    manifest = []
    counter = 0
    for path in _corpus_files(args.paths):
        try:
            module = parse_module(path.read_text(encoding="utf-8"), str(path))
        except ParseError as e:
            print(f"skipping {path}: {e}", file=sys.stderr)
            continue
        for wrapped in extract(module, dedup, cfg, stats):
            counter += 1
            name = f"seq_{counter:05d}.ll"
            (out_dir / name).write_text(wrapped.canonical_text, encoding="utf-8")
            manifest.append({
                "file": name,
                "digest": digest(wrapped).hex,
                "source": {
                    "corpus_file": wrapped.origin.source[0],
                    "function": wrapped.origin.source[1],
                    "block": wrapped.origin.source[2],
                },
            })
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.dedup_file:
        flush_digests(args.dedup_file, dedup.snapshot())
    print(f"extracted {counter} unique sequences "
          f"(seen {stats.sequences_seen}, deduped {stats.deduped}, "
          f"wrap errors {stats.wrap_errors}, over cap {stats.over_cap})")
    return 0


def _print_outcome(outcome: SequenceOutcome) -> None:
    print(f"outcome: {outcome.state}")
    if outcome.finding_id:
        print(f"finding id: {outcome.finding_id}")
    for attempt, verdict in outcome.attempts:
        print(f"  attempt {attempt}: {verdict}")
    if outcome.detail:
        print(f"detail: {outcome.detail}")


def _cmd_optimize(args) -> int:
    func = parse_module(Path(args.func).read_text(encoding="utf-8"),
                        args.func).functions[0]
    origin = InstrSeq((args.func, func.name, func.blocks[0].label), (), ())
    wrapped = WrappedFunction(func, origin)
    backend_kind = "http-api" if args.agent == "http" else "scripted-replay"
    cfg = PipelineConfig(
        agent=AgentConfig(backend=backend_kind, endpoint=args.endpoint,
                          model=args.model, transcript_path=args.transcript,
                          max_reattempts=args.max_reattempts),
        verifier=args.verifier,
        max_reattempts=args.max_reattempts,
        findings_file=args.findings or "findings.jsonl",
    )
    from .agent import make_backend
    from .catalog import FindingsLog
    backend = make_backend(cfg.agent)
    log = FindingsLog(cfg.findings_file) if args.findings else None
    outcome, _ = process_sequence(wrapped, cfg, backend, log)
    _print_outcome(outcome)
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.corpus:
        cfg.corpus = list(args.corpus)
    if args.deterministic:
        cfg.deterministic = True
    stats = run(cfg)
    print(stats.to_json(), end="")
    if args.self_check:
        failures = self_check(cfg, cfg.findings_file)
        if failures:
            for fid, problem in failures:
                print(f"self-check failure on finding {fid}: {problem}", file=sys.stderr)
            return 1
        print(f"self-check: all {stats.findings} findings re-verified")
    return 0


def _cmd_verify(args) -> int:
    src_fn = parse_module(Path(args.src).read_text(encoding="utf-8"), args.src).functions[0]
    tgt_fn = parse_module(Path(args.tgt).read_text(encoding="utf-8"), args.tgt).functions[0]
    cfg = PipelineConfig(verifier="external" if args.oracle == "external" else "builtin")
    verdict = verify_pair(cfg, src_fn, tgt_fn)
    print(f"verdict: {verdict.outcome} ({verdict.verifier})")
    if verdict.counterexample:
        print(verdict.counterexample)
    if verdict.message:
        print(verdict.message)
    return 0


def _cmd_replay(args) -> int:
    cfg = PipelineConfig(
        corpus=list(args.corpus),
        agent=AgentConfig(backend="scripted-replay", transcript_path=args.transcript,
                          max_reattempts=args.max_reattempts),
        verifier=args.verifier,
        preprocess_mode=args.preprocess,
        max_reattempts=args.max_reattempts,
        deterministic=True,
        digest_file=args.dedup_file,
        findings_file=args.findings,
        stats_file=args.stats,
    )
    stats = run(cfg)
    print(stats.to_json(), end="")
    return 0


def _cmd_report(args) -> int:
    pairs_dir = Path(args.pairs_dir) if args.pairs_dir else None
    if pairs_dir:
        pairs_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for record in iter_findings(args.findings):
        count += 1
        prov = record.get("provenance", {})
        before = record.get("metrics_before", {})
        after = record.get("metrics_after", {})
        print(f"=== finding #{record.get('id')} "
              f"[{record.get('verifier')} verified, "
              f"{record.get('attempts_used')} attempt(s)] ===")
        print(f"from {prov.get('corpus_file')} @{prov.get('function')} "
              f"block {prov.get('block')}")
        cycles_before = before.get("total_cycles")
        cycles_after = after.get("total_cycles")
        cycle_note = (f", cycles {cycles_before} -> {cycles_after}"
                      if cycles_before is not None and cycles_after is not None else "")
        print(f"instructions {before.get('instruction_count')} -> "
              f"{after.get('instruction_count')}{cycle_note}")
        print("--- original ---")
        print(record.get("original_ir", "").rstrip())
        print("--- optimized ---")
        print(record.get("candidate_ir", "").rstrip())
        print()
        if pairs_dir:
            src_fn = parse_module(record["original_ir"]).functions[0]
            tgt_fn = parse_module(record["candidate_ir"]).functions[0]
            pair_text = (module_text_for_tools(src_fn, rename_to="src")
                         + "\n" + module_text_for_tools(tgt_fn, rename_to="tgt"))
            (pairs_dir / f"finding_{record.get('id', count):04d}.ll").write_text(
                pair_text, encoding="utf-8")
    print(f"{count} finding(s)")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "extract": _cmd_extract,
        "optimize": _cmd_optimize,
        "run": _cmd_run,
        "verify": _cmd_verify,
        "replay": _cmd_replay,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except CorpusError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ParseError, StorageError, ToolError, PeepseekError, OSError,
            tomllib.TOMLDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
