"""End-to-end orchestration: corpus ingestion, extraction, the agent loop
with feedback, the verification cascade (syntax, interestingness,
refinement), and findings recording.

The cascade never invokes refinement on an uninteresting candidate, an
uninteresting echo is a dead end rather than a retry, and only syntax
errors, refuted candidates, and fixable verifier errors consume the retry
budget.
"""

from __future__ import annotations

import dataclasses
import datetime
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger("peepseek")

from .agent import (
    AgentConfig, Candidate, Feedback, FEEDBACK_TEMPLATE_ID,
    INITIAL_TEMPLATE_ID, build_feedback_prompt, build_initial_prompt,
    make_backend, parse_candidate,
)
from .catalog import (
    DigestSet, Finding, FindingsLog, RunStats, flush_digests, iter_findings,
    load_digests,
)
from .equiv import SignatureMismatch, check_equivalence, format_counterexample
from .errors import (
    AgentError, ExtractionError, ParseError, PeepseekError, ToolError,
)
from .extract import ExtractConfig, ExtractStats, WrappedFunction, extract
from .interest import judge, measure
from .interp import unsupported_reason
from .ir.parser import parse_module
from .ir.printer import print_function
from .ir.types import Function
from .tools import (
    ToolConfig, estimate_cycles, module_text_for_tools, preprocess,
    preprocess_builtin,
)


class CorpusError(PeepseekError):
    """A corpus path does not exist or cannot be read."""


@dataclass
class PipelineConfig:
    corpus: list = field(default_factory=list)
    agent: AgentConfig = field(default_factory=AgentConfig)
    tools: ToolConfig = field(default_factory=ToolConfig)
    max_reattempts: int = 2
    interestingness: str = "count-only"        # count-only | count+cycles
    verifier: str = "builtin"                  # external | builtin | external-then-builtin
    workers: int = 1
    deterministic: bool = False
    digest_file: str = ""
    findings_file: str = "findings.jsonl"
    stats_file: str = ""
    sequence_cap: int = 16
    filter_optimizable: bool = False
    memory_dependence: str = "off"
    preprocess_mode: str = "auto"              # auto | external | builtin
    per_sequence_budget_s: float = 600.0
    oracle_budget: int = 65536
    oracle_seed: int = 0

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.per_sequence_budget_s <= 0:
            raise ValueError("per-sequence budget must be > 0")


@dataclass
class SequenceOutcome:
    state: str        # finding | not-interesting | syntax-failed-final |
                      # incorrect-final | unsupported | timeout | agent-failed
    finding_id: int | None = None
    attempts: list = field(default_factory=list)   # (attempt, verdict) pairs
    detail: str = ""


@dataclass
class VerifyOutcome:
    outcome: str          # correct | incorrect | verifier-error | timeout | unsupported
    counterexample: str = ""
    message: str = ""
    verifier: str = ""    # external | builtin


def canonical_compare_text(func: Function) -> str:
    """Naming-noise-free text: fixed function name, positional locals."""
    return print_function(dataclasses.replace(func, name="src"),
                          normalize_names=True)


def external_validator_available(tools: ToolConfig) -> bool:
    return shutil.which(tools.alive_tv_path) is not None


def external_optimizer_available(tools: ToolConfig) -> bool:
    return shutil.which(tools.opt_path) is not None


def verify_pair(cfg: PipelineConfig, src_fn: Function, tgt_fn: Function) -> VerifyOutcome:
    """Refinement check through the configured verifier."""
    mode = cfg.verifier
    if mode in ("external", "external-then-builtin") and external_validator_available(cfg.tools):
        from .tools import verify_refinement
        verdict = verify_refinement(
            cfg.tools,
            module_text_for_tools(src_fn, rename_to="src"),
            module_text_for_tools(tgt_fn, rename_to="tgt"))
        if verdict.outcome == "timeout" and mode == "external-then-builtin":
            fallback = _verify_builtin(cfg, src_fn, tgt_fn)
            if fallback.outcome != "unsupported":
                return fallback
        return VerifyOutcome(verdict.outcome, verdict.counterexample,
                             verdict.message, "external")
    if mode == "external":
        raise ToolError("spawn", f"{cfg.tools.alive_tv_path} not found and verifier=external")
    return _verify_builtin(cfg, src_fn, tgt_fn)


def _verify_builtin(cfg: PipelineConfig, src_fn: Function, tgt_fn: Function) -> VerifyOutcome:
    try:
        report = check_equivalence(src_fn, tgt_fn,
                                   budget=cfg.oracle_budget, seed=cfg.oracle_seed)
    except SignatureMismatch as e:
        return VerifyOutcome("verifier-error", message=str(e), verifier="builtin")
    if report.verdict == "equivalent":
        return VerifyOutcome("correct", verifier="builtin")
    if report.verdict == "not-equivalent":
        return VerifyOutcome("incorrect",
                             counterexample=format_counterexample(src_fn, report),
                             verifier="builtin")
    return VerifyOutcome("unsupported",
                         message=f"builtin oracle cannot evaluate: {report.unsupported_what}",
                         verifier="builtin")


def _do_preprocess(cfg: PipelineConfig, ir_text: str):
    if cfg.preprocess_mode == "builtin":
        return preprocess_builtin(ir_text)
    if cfg.preprocess_mode == "external" or external_optimizer_available(cfg.tools):
        return preprocess(cfg.tools, ir_text)
    return preprocess_builtin(ir_text)


def _pick_function(text: str) -> Function | None:
    try:
        module = parse_module(text, "candidate.ll")
    except ParseError:
        return None
    if not module.functions:
        return None
    for f in module.functions:
        if f.name == "src":
            return f
    return module.functions[0]


def _make_estimator(cfg: PipelineConfig):
    if cfg.interestingness != "count+cycles":
        return None
    if shutil.which(cfg.tools.llc_path) is None or shutil.which(cfg.tools.mca_path) is None:
        return None
    def estimator(func: Function) -> int:
        return estimate_cycles(cfg.tools, module_text_for_tools(func)).total_cycles
    return estimator


def _oracle_only(cfg: PipelineConfig) -> bool:
    if cfg.verifier == "builtin":
        return True
    return (cfg.verifier == "external-then-builtin"
            and not external_validator_available(cfg.tools))


def process_sequence(wrapped: WrappedFunction, cfg: PipelineConfig, backend,
                     findings_log: FindingsLog | None = None,
                     clock=time.monotonic) -> tuple[SequenceOutcome, dict]:
    """Drive one wrapped function through the agent/verification loop.

    Returns the terminal outcome plus a dict of counter deltas so callers
    can aggregate stats off the worker threads.
    """
    deltas: dict[str, int] = {}

    def bump(key: str, n: int = 1):
        deltas[key] = deltas.get(key, 0) + n

    original_fn = wrapped.func
    if _oracle_only(cfg):
        reason = unsupported_reason(original_fn)
        if reason is not None:
            bump("unsupported")
            return SequenceOutcome("unsupported", detail=reason), deltas

    estimator = _make_estimator(cfg)
    original_canon = canonical_compare_text(original_fn)
    original_metrics = measure(original_fn, estimator)
    deadline = clock() + cfg.per_sequence_budget_s

    candidate: Candidate | None = None
    feedback: Feedback | None = None
    attempts: list = []
    last_failure = ""
    template_id = INITIAL_TEMPLATE_ID

    for attempt in range(cfg.max_reattempts + 1):
        if clock() > deadline:
            bump("timeouts")
            return SequenceOutcome("timeout", attempts=attempts,
                                   detail="per-sequence budget exceeded"), deltas
        if attempt == 0:
            prompt = build_initial_prompt(wrapped)
            template_id = INITIAL_TEMPLATE_ID
        else:
            prompt = build_feedback_prompt(wrapped, candidate, feedback)
            template_id = FEEDBACK_TEMPLATE_ID
        try:
            response = backend.complete(prompt)
        except AgentError as e:
            bump("agent_failures")
            return SequenceOutcome("agent-failed", attempts=attempts,
                                   detail=f"{e.kind}: {e.detail}"), deltas
        bump("agent_calls")
        try:
            candidate = parse_candidate(response, attempt)
        except ExtractionError as e:
            bump("extraction_failures")
            return SequenceOutcome("agent-failed", attempts=attempts,
                                   detail=e.kind), deltas

        pre = _do_preprocess(cfg, candidate.ir_text)
        if pre.outcome == "syntax-error":
            bump("syntax_errors")
            attempts.append((attempt, "syntax-error"))
            feedback = Feedback("syntax-error", pre.message)
            last_failure = "syntax"
            continue

        candidate_fn = _pick_function(pre.text)
        if candidate_fn is None:
            bump("syntax_errors")
            attempts.append((attempt, "syntax-error"))
            feedback = Feedback("syntax-error",
                                "the optimizer output contains no function definition")
            last_failure = "syntax"
            continue

        candidate_canon = canonical_compare_text(candidate_fn)
        candidate_metrics = measure(candidate_fn, estimator)
        decision = judge(original_metrics, candidate_metrics,
                         texts_differ=candidate_canon != original_canon)
        if not decision.interesting:
            bump("not_interesting")
            attempts.append((attempt, "not-interesting"))
            return SequenceOutcome("not-interesting", attempts=attempts), deltas

        verdict = verify_pair(cfg, original_fn, candidate_fn)
        if verdict.outcome == "correct":
            attempts.append((attempt, "verified"))
            finding = Finding(
                original_ir=print_function(original_fn, normalize_names=True),
                candidate_ir=print_function(candidate_fn, normalize_names=True),
                provenance={
                    "corpus_file": wrapped.origin.source[0],
                    "function": wrapped.origin.source[1],
                    "block": wrapped.origin.source[2],
                },
                attempts_used=attempt + 1,
                verdict_chain=[f"attempt{a}: {v}" for a, v in attempts],
                metrics_before=original_metrics,
                metrics_after=candidate_metrics,
                verifier=verdict.verifier,
                prompt_template_id=template_id,
                model_id=cfg.agent.model or cfg.agent.backend,
                created_at="" if cfg.deterministic else
                datetime.datetime.now(datetime.timezone.utc).isoformat(),
            )
            finding_id = findings_log.record(finding) if findings_log else 0
            bump("findings")
            return SequenceOutcome("finding", finding_id=finding_id,
                                   attempts=attempts), deltas
        if verdict.outcome == "incorrect":
            bump("incorrect")
            attempts.append((attempt, "incorrect"))
            feedback = Feedback("incorrect", verdict.counterexample)
            last_failure = "incorrect"
            continue
        if verdict.outcome == "timeout":
            bump("timeouts")
            attempts.append((attempt, "verifier-timeout"))
            return SequenceOutcome("timeout", attempts=attempts,
                                   detail=verdict.message), deltas
        # verifier-error and oracle-unsupported candidates are fixable:
        # the message goes back to the agent
        bump("verifier_errors")
        attempts.append((attempt, "verifier-error"))
        feedback = Feedback("verifier-error", verdict.message or verdict.counterexample)
        last_failure = "verifier"

    if last_failure == "syntax":
        bump("syntax_failed_final")
        return SequenceOutcome("syntax-failed-final", attempts=attempts), deltas
    bump("incorrect_final")
    return SequenceOutcome("incorrect-final", attempts=attempts), deltas


def _corpus_files(paths) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.rglob("*.ll")))
        elif p.is_file():
            files.append(p)
        else:
            raise CorpusError(f"corpus path does not exist: {p}")
    return files


def run(cfg: PipelineConfig) -> RunStats:
    """Full pipeline over the corpus; returns aggregated counters."""
    stats = RunStats()
    files = _corpus_files(cfg.corpus)
    dedup = DigestSet(load_digests(cfg.digest_file) if cfg.digest_file else (),
                      backing_path=cfg.digest_file or None)

    findings_log = FindingsLog(cfg.findings_file)
    with open(cfg.findings_file, "w", encoding="utf-8"):
        pass  # each run owns its findings file

    extract_cfg = ExtractConfig(
        seq_len_cap=cfg.sequence_cap,
        memory_dependence=cfg.memory_dependence,
        check_optimizable=cfg.filter_optimizable,
        preprocessor=(lambda text: preprocess(cfg.tools, text))
        if cfg.filter_optimizable else None,
    )
    estats = ExtractStats()
    backend = make_backend(cfg.agent)

    try:
        wrapped_all: list[WrappedFunction] = []
        for path in files:
            try:
                module = parse_module(path.read_text(encoding="utf-8"), str(path))
            except ParseError as e:
                logger.warning("skipping unparseable corpus file %s: %s", path, e)
                stats.parse_failures += 1
                continue
            except OSError as e:
                raise CorpusError(f"cannot read {path}: {e}") from e
            stats.files_scanned += 1
            wrapped_all.extend(extract(module, dedup, extract_cfg, estats))

        stats.sequences_seen = estats.sequences_seen
        stats.deduped = estats.deduped
        stats.filtered_optimizable = estats.filtered_optimizable
        stats.wrap_errors = estats.wrap_errors
        stats.over_cap = estats.over_cap

        def handle(wrapped: WrappedFunction) -> dict:
            _, deltas = process_sequence(wrapped, cfg, backend, findings_log)
            return deltas

        if cfg.workers == 1:
            all_deltas = [handle(w) for w in wrapped_all]
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                all_deltas = list(pool.map(handle, wrapped_all))
        for deltas in all_deltas:
            for key, n in deltas.items():
                setattr(stats, key, getattr(stats, key) + n)
    finally:
        # dedup coverage survives interrupts and mid-run failures
        if cfg.digest_file:
            flush_digests(cfg.digest_file, dedup.snapshot())

    if cfg.stats_file:
        with open(cfg.stats_file, "w", encoding="utf-8") as fh:
            fh.write(stats.to_json())
    return stats


def self_check(cfg: PipelineConfig, findings_path: str) -> list[tuple[int, str]]:
    """Re-verify every stored finding pair; returns (id, problem) failures."""
    failures = []
    for record in iter_findings(findings_path):
        try:
            src_fn = parse_module(record["original_ir"]).functions[0]
            tgt_fn = parse_module(record["candidate_ir"]).functions[0]
        except (ParseError, IndexError) as e:
            failures.append((record.get("id", 0), f"stored pair unparseable: {e}"))
            continue
        verdict = verify_pair(cfg, src_fn, tgt_fn)
        if verdict.outcome != "correct":
            failures.append((record.get("id", 0),
                             f"re-verification returned {verdict.outcome}"))
    return failures
