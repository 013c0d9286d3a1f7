"""Persistence: the global digest set, the findings log, and run counters."""

from __future__ import annotations

import json
import os
import struct
import threading
from dataclasses import dataclass, asdict

from .errors import StorageError
from .interest import Metrics

DIGEST_MAGIC = b"PSDIGST1"
DIGEST_SIZE = 32
_HEADER = struct.Struct("<8sQ")


FLUSH_EVERY_N_INSERTS = 10_000


class DigestSet:
    """In-memory set of 32-byte digests with linearizable contains-or-insert.

    When constructed with a backing path, the set is rewritten to disk
    every FLUSH_EVERY_N_INSERTS insertions; callers still flush once more
    on shutdown.
    """

    def __init__(self, initial=(), backing_path=None):
        self._set: set[bytes] = set(initial)
        self._lock = threading.Lock()
        self._backing_path = backing_path
        self._inserts_since_flush = 0

    def __len__(self) -> int:
        return len(self._set)

    def __contains__(self, digest: bytes) -> bool:
        with self._lock:
            return digest in self._set

    def add_if_new(self, digest: bytes) -> bool:
        """Atomically insert; True when the digest was not present before."""
        with self._lock:
            if digest in self._set:
                return False
            self._set.add(digest)
            self._inserts_since_flush += 1
            if (self._backing_path is not None
                    and self._inserts_since_flush >= FLUSH_EVERY_N_INSERTS):
                flush_digests(self._backing_path, self._set)
                self._inserts_since_flush = 0
            return True

    def snapshot(self) -> set[bytes]:
        with self._lock:
            return set(self._set)


def load_digests(path) -> set[bytes]:
    """Read a digest file; returns the empty set when the file is absent."""
    if not os.path.exists(path):
        return set()
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise StorageError("corrupt-header", f"{path}: short header")
        magic, count = _HEADER.unpack(header)
        if magic != DIGEST_MAGIC:
            raise StorageError("corrupt-header", f"{path}: bad magic {magic!r}")
        body = fh.read()
    if len(body) != count * DIGEST_SIZE:
        raise StorageError(
            "truncated",
            f"{path}: header says {count} digests, body holds {len(body) // DIGEST_SIZE}")
    return {body[i:i + DIGEST_SIZE] for i in range(0, len(body), DIGEST_SIZE)}


def flush_digests(path, digests) -> None:
    """Write the full set, sorted, with a count header. Atomic via rename."""
    entries = sorted(digests)
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(_HEADER.pack(DIGEST_MAGIC, len(entries)))
            for d in entries:
                if len(d) != DIGEST_SIZE:
                    raise StorageError("io", f"digest of size {len(d)} != {DIGEST_SIZE}")
                fh.write(d)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as e:
        raise StorageError("io", str(e)) from e


@dataclass
class Finding:
    """A verified (original, optimized) pair plus the evidence trail."""

    original_ir: str
    candidate_ir: str
    provenance: dict                    # corpus_file / function / block
    attempts_used: int
    verdict_chain: list[str]
    metrics_before: Metrics
    metrics_after: Metrics
    verifier: str                       # external | builtin
    prompt_template_id: str
    model_id: str
    created_at: str = ""
    id: int = 0

    def to_json_line(self) -> str:
        payload = {
            "id": self.id,
            "original_ir": self.original_ir,
            "candidate_ir": self.candidate_ir,
            "provenance": self.provenance,
            "attempts_used": self.attempts_used,
            "verdict_chain": self.verdict_chain,
            "metrics_before": self.metrics_before.to_json(),
            "metrics_after": self.metrics_after.to_json(),
            "verifier": self.verifier,
            "prompt_template_id": self.prompt_template_id,
            "model_id": self.model_id,
            "created_at": self.created_at,
        }
        return json.dumps(payload, sort_keys=True)


class FindingsLog:
    """Append-only JSON Lines store; record() is durable and linearizable."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._next_id = 1

    def record(self, finding: Finding) -> int:
        with self._lock:
            finding.id = self._next_id
            line = finding.to_json_line() + "\n"
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as e:
                raise StorageError("io", str(e)) from e
            self._next_id += 1
            return finding.id


def iter_findings(path):
    """Yield findings file records as dicts."""
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as e:
                    raise StorageError("io", f"{path}:{line_no}: {e}") from e
    except OSError as e:
        raise StorageError("io", str(e)) from e


@dataclass
class RunStats:
    """Counters aggregated over one pipeline run.

    Partition: sequences_seen = deduped + filtered_optimizable + wrap_errors
    + over_cap + the terminal-outcome counters (findings, not_interesting,
    incorrect_final, syntax_failed_final, timeouts, extraction_failures,
    agent_failures, unsupported).
    """

    files_scanned: int = 0
    parse_failures: int = 0
    sequences_seen: int = 0
    deduped: int = 0
    filtered_optimizable: int = 0
    wrap_errors: int = 0
    over_cap: int = 0
    unsupported: int = 0
    agent_calls: int = 0
    agent_failures: int = 0
    extraction_failures: int = 0
    syntax_errors: int = 0
    syntax_failed_final: int = 0
    not_interesting: int = 0
    incorrect: int = 0
    incorrect_final: int = 0
    verifier_errors: int = 0
    timeouts: int = 0
    findings: int = 0

    def terminal_total(self) -> int:
        return (self.findings + self.not_interesting + self.incorrect_final
                + self.syntax_failed_final + self.timeouts
                + self.extraction_failures + self.agent_failures
                + self.unsupported)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"
