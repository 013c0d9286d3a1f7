"""Optimizer-agent bridge: prompt construction, completion backends, and
candidate extraction.

Two backends: an OpenAI-style chat-completions HTTP API, and a scripted
replay backend that serves recorded responses keyed by the digest of the
function embedded in the prompt (not the full prompt text, so templates
can evolve without re-recording transcripts).
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass

from .errors import AgentError, ExtractionError
from .extract import WrappedFunction, digest

INITIAL_TEMPLATE_ID = "initial-v1"
FEEDBACK_TEMPLATE_ID = "feedback-v1"

FEEDBACK_LABELS = {
    "syntax-error": "the candidate was rejected by the IR parser",
    "incorrect": "the candidate is not a correct replacement",
    "verifier-error": "the verifier could not process the candidate",
}


@dataclass(frozen=True)
class PromptText:
    text: str
    kind: str                    # initial | feedback
    function_digest: str         # hex digest of the embedded original


@dataclass(frozen=True)
class Feedback:
    kind: str                    # syntax-error | incorrect | verifier-error
    payload: str


@dataclass(frozen=True)
class Candidate:
    ir_text: str
    attempt: int
    raw_response: str


@dataclass
class AgentConfig:
    backend: str = "scripted-replay"     # http-api | scripted-replay
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "PEEPSEEK_API_KEY"
    transcript_path: str = ""
    max_reattempts: int = 2
    timeout_s: float = 60.0
    temperature: float = 0.0
    requests_per_second: float = 0.0     # 0 disables throttling
    backoff_base_s: float = 1.0

    def __post_init__(self):
        if self.max_reattempts < 0:
            raise ValueError("max_reattempts must be >= 0")


_INITIAL_TEMPLATE = """\
You are optimizing LLVM IR at the instruction-sequence level.

Rewrite the function below as an equivalent (or refining) function that
is more efficient: fewer instructions, or cheaper ones. Keep exactly the
same function name and signature. Return the function unchanged if it is
already optimal.

```llvm
{function}
```

Reply with exactly one fenced code block containing only the complete
rewritten function definition.
"""

_FEEDBACK_TEMPLATE = """\
Your previous candidate was rejected: {label}.

The original function to optimize:

```llvm
{function}
```

Your rejected candidate:

```llvm
{candidate}
```

{payload_header}:

```
{payload}
```

Produce a corrected candidate that is still more efficient than the
original. Keep exactly the same function name and signature. Reply with
exactly one fenced code block containing only the complete function.
"""


def build_initial_prompt(wrapped: WrappedFunction) -> PromptText:
    text = _INITIAL_TEMPLATE.format(function=wrapped.text.rstrip("\n"))
    return PromptText(text, "initial", digest(wrapped).hex)


def build_feedback_prompt(wrapped: WrappedFunction, candidate: Candidate,
                          fb: Feedback) -> PromptText:
    label = FEEDBACK_LABELS.get(fb.kind, fb.kind)
    headers = {
        "syntax-error": "Parser diagnostic",
        "incorrect": "Counterexample demonstrating the incorrectness",
        "verifier-error": "Verifier message",
    }
    payload = fb.payload if fb.payload.strip() else "(no details)"
    text = _FEEDBACK_TEMPLATE.format(
        label=label,
        function=wrapped.text.rstrip("\n"),
        candidate=candidate.ir_text.rstrip("\n"),
        payload_header=headers.get(fb.kind, "Details"),
        payload=payload,
    )
    return PromptText(text, "feedback", digest(wrapped).hex)


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*[ \t\r]*\n(.*?)```", re.DOTALL)


def parse_candidate(response: str, attempt: int) -> Candidate:
    """First fenced code block, or the whole response when unfenced."""
    m = _FENCE_RE.search(response)
    ir_text = (m.group(1) if m else response).strip()
    if "define " not in ir_text:
        raise ExtractionError("no-ir-found")
    return Candidate(ir_text, attempt, response)


# -- backends -----------------------------------------------------------


class ReplayBackend:
    """Serves recorded responses for a digest, in recorded order."""

    def __init__(self, transcript_path: str):
        self.transcript_path = transcript_path
        self.calls = 0
        self._queues: dict[str, deque] = {}
        self._lock = threading.Lock()
        records = []
        with open(transcript_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        records.sort(key=lambda r: r.get("attempt", 0))
        for rec in records:
            self._queues.setdefault(rec["function_digest"], deque()).append(
                rec["response"])

    def complete(self, prompt: PromptText) -> str:
        with self._lock:
            self.calls += 1
            queue = self._queues.get(prompt.function_digest)
            if not queue:
                raise AgentError("exhausted-transcript",
                                 f"no recorded response for {prompt.function_digest}")
            return queue.popleft()


class _TokenBucket:
    """Process-wide throttle shared by every HTTP backend."""

    def __init__(self):
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self, rate: float):
        if rate <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_free - now
            self._next_free = max(now, self._next_free) + 1.0 / rate
        if wait > 0:
            time.sleep(wait)


_HTTP_LIMITER = _TokenBucket()


class HttpBackend:
    """OpenAI-style chat-completions client."""

    def __init__(self, cfg: AgentConfig):
        if not cfg.endpoint:
            raise AgentError("transport", "http backend requires an endpoint")
        self.cfg = cfg
        self.calls = 0
        import requests
        self._requests = requests
        self._session = requests.Session()

    def complete(self, prompt: PromptText) -> str:
        cfg = self.cfg
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": cfg.temperature,
        }
        last_status = None
        for attempt in range(3):
            _HTTP_LIMITER.acquire(cfg.requests_per_second)
            self.calls += 1
            try:
                resp = self._session.post(
                    cfg.endpoint, headers=headers, json=payload,
                    timeout=cfg.timeout_s)
            except self._requests.Timeout as e:
                raise AgentError("timeout", str(e)) from e
            except self._requests.RequestException as e:
                raise AgentError("transport", str(e)) from e
            if resp.status_code == 429:
                last_status = 429
                time.sleep(cfg.backoff_base_s * (2 ** attempt))
                continue
            if resp.status_code != 200:
                raise AgentError("transport",
                                 f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as e:
                raise AgentError("transport", f"malformed response: {e}") from e
        raise AgentError("rate-limited", f"gave up after 3 tries (HTTP {last_status})")


def make_backend(cfg: AgentConfig):
    if cfg.backend == "scripted-replay":
        if not cfg.transcript_path:
            raise AgentError("exhausted-transcript", "replay backend requires a transcript")
        return ReplayBackend(cfg.transcript_path)
    if cfg.backend == "http-api":
        return HttpBackend(cfg)
    raise ValueError(f"unknown agent backend: {cfg.backend}")


def complete(backend, prompt: PromptText) -> str:
    return backend.complete(prompt)


def write_transcript(path, records) -> None:
    """records: iterable of (function_digest_hex, attempt, response)."""
    with open(path, "w", encoding="utf-8") as fh:
        for digest_hex, attempt, response in records:
            fh.write(json.dumps({
                "function_digest": digest_hex,
                "attempt": attempt,
                "response": response,
            }, sort_keys=True) + "\n")
