"""Subprocess adapters for the external optimizer, cycle estimator, and
translation validator, plus the builtin parser-backed preprocessing used
when no external optimizer is available.

Invocation contracts:
  opt      -passes=default<O3> -S in.ll -o out.ll
  llc      -O3 -mtriple=<triple> -mcpu=<cpu> in.ll -o out.s
  llvm-mca -mtriple=<triple> -mcpu=<cpu> out.s           (parses "Total Cycles:")
  alive-tv --disable-undef-input src.ll tgt.ll           (flags configurable)

Adapters never mutate their inputs; every invocation gets a private temp
directory, removed on success and retained with keep_temps.
"""

from __future__ import annotations

import dataclasses
import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass

from .errors import ParseError, ToolError
from .ir.parser import parse_module
from .ir.printer import print_function
from .ir.types import Function, Module

TIMEOUT_GRACE_S = 1.0


@dataclass
class ToolConfig:
    opt_path: str = "opt"
    llc_path: str = "llc"
    mca_path: str = "llvm-mca"
    alive_tv_path: str = "alive-tv"
    target_triple: str = "x86_64-unknown-unknown"
    cpu: str = "btver2"
    timeout_s: float = 60.0
    keep_temps: bool = False
    alive_flags: tuple[str, ...] = ("--disable-undef-input",)

    def available(self, path: str) -> bool:
        return shutil.which(path) is not None


@dataclass(frozen=True)
class PreprocessResult:
    outcome: str           # optimized | syntax-error
    text: str = ""
    message: str = ""


@dataclass(frozen=True)
class CycleEstimate:
    total_cycles: int


@dataclass(frozen=True)
class RefinementVerdict:
    outcome: str           # correct | incorrect | verifier-error | timeout
    counterexample: str = ""
    message: str = ""


class _TempDir:
    def __init__(self, keep: bool):
        self.keep = keep
        self.path = tempfile.mkdtemp(prefix="peepseek-")

    def __enter__(self):
        return self.path

    def __exit__(self, exc_type, exc, tb):
        if not self.keep:
            shutil.rmtree(self.path, ignore_errors=True)
        return False


def _run(argv: list[str], timeout_s: float) -> subprocess.CompletedProcess:
    try:
        return subprocess.run(
            argv, capture_output=True, text=True,
            timeout=timeout_s + TIMEOUT_GRACE_S)
    except FileNotFoundError as e:
        raise ToolError("spawn", f"{argv[0]}: {e}") from e
    except subprocess.TimeoutExpired as e:
        raise ToolError("timeout", f"{argv[0]} exceeded {timeout_s}s") from e


def intrinsic_declares(module: Module) -> list[str]:
    """Synthesized declarations for intrinsics called without one, so the
    emitted module is self-contained for external tools."""
    declared = set(re.findall(r"declare\b[^\n]*@([\w.$-]+)", module.preamble_text))
    defined = {f.name for f in module.functions}
    out = []
    seen = set()
    for f in module.functions:
        for bb in f.blocks:
            for inst in bb.instructions:
                callee = inst.callee
                if (inst.opcode != "call" or callee is None
                        or callee in declared or callee in defined
                        or callee in seen):
                    continue
                seen.add(callee)
                ret = inst.type_args[0].render()
                args = ", ".join(ty.render() for ty in inst.type_args[1:])
                out.append(f"declare {ret} @{callee}({args})")
    return out


def module_text_for_tools(func: Function, rename_to: str | None = None) -> str:
    """Canonical, self-contained module text for one function."""
    if rename_to is not None and func.name != rename_to:
        func = dataclasses.replace(func, name=rename_to)
    module = Module((func,))
    parts = intrinsic_declares(module)
    head = "\n".join(parts) + "\n\n" if parts else ""
    return head + print_function(func, normalize_names=True)


def _self_contained(ir_text: str) -> str:
    """Re-emit parseable input with synthesized intrinsic declares; raw
    input passes through untouched so the tool reports its own diagnostics."""
    try:
        module = parse_module(ir_text)
    except ParseError:
        return ir_text
    parts = [module.preamble_text] if module.preamble_text else []
    parts.extend(intrinsic_declares(module))
    parts.extend(print_function(f) for f in module.functions)
    return "\n\n".join(parts)


def preprocess(cfg: ToolConfig, ir_text: str) -> PreprocessResult:
    """Aggressively optimize + canonicalize; a rejected input returns the
    tool's diagnostic verbatim (that text becomes agent feedback)."""
    with _TempDir(cfg.keep_temps) as tmp:
        src = os.path.join(tmp, "in.ll")
        dst = os.path.join(tmp, "out.ll")
        with open(src, "w", encoding="utf-8") as fh:
            fh.write(_self_contained(ir_text))
        proc = _run([cfg.opt_path, "-passes=default<O3>", "-S", src, "-o", dst],
                    cfg.timeout_s)
        if proc.returncode != 0:
            return PreprocessResult("syntax-error", message=proc.stderr)
        with open(dst, encoding="utf-8") as fh:
            return PreprocessResult("optimized", text=fh.read())


def preprocess_builtin(ir_text: str) -> PreprocessResult:
    """Parser-backed stand-in: syntax checking without canonicalization."""
    try:
        module = parse_module(ir_text, "candidate.ll")
    except ParseError as e:
        return PreprocessResult("syntax-error", message=e.diagnostic())
    if not module.functions:
        return PreprocessResult(
            "syntax-error", message="candidate.ll:1:1: error: no function definition found")
    from .ir.printer import print_module
    return PreprocessResult("optimized", text=print_module(module))


_TOTAL_CYCLES_RE = re.compile(r"Total Cycles:\s*(\d+)")


def estimate_cycles(cfg: ToolConfig, ir_text: str) -> CycleEstimate:
    """Lower to machine code for (triple, cpu) and statically estimate."""
    with _TempDir(cfg.keep_temps) as tmp:
        src = os.path.join(tmp, "in.ll")
        asm = os.path.join(tmp, "out.s")
        with open(src, "w", encoding="utf-8") as fh:
            fh.write(_self_contained(ir_text))
        lowered = _run(
            [cfg.llc_path, "-O3", f"-mtriple={cfg.target_triple}",
             f"-mcpu={cfg.cpu}", src, "-o", asm],
            cfg.timeout_s)
        if lowered.returncode != 0:
            raise ToolError("lowering-failed", lowered.stderr.strip()[:1000])
        mca = _run(
            [cfg.mca_path, f"-mtriple={cfg.target_triple}", f"-mcpu={cfg.cpu}", asm],
            cfg.timeout_s)
        if mca.returncode != 0:
            raise ToolError("parse-failed", mca.stderr.strip()[:1000])
        m = _TOTAL_CYCLES_RE.search(mca.stdout)
        if not m:
            raise ToolError("parse-failed", "no 'Total Cycles:' field in estimator output")
        return CycleEstimate(int(m.group(1)))


def verify_refinement(cfg: ToolConfig, src_text: str, tgt_text: str) -> RefinementVerdict:
    """Ask the translation validator whether tgt refines src."""
    try:
        src_fn = parse_module(src_text).functions[0]
        tgt_fn = parse_module(tgt_text).functions[0]
    except (ParseError, IndexError) as e:
        return RefinementVerdict("verifier-error", message=f"input does not parse: {e}")
    with _TempDir(cfg.keep_temps) as tmp:
        src_path = os.path.join(tmp, "src.ll")
        tgt_path = os.path.join(tmp, "tgt.ll")
        with open(src_path, "w", encoding="utf-8") as fh:
            fh.write(module_text_for_tools(src_fn, rename_to="src"))
        with open(tgt_path, "w", encoding="utf-8") as fh:
            fh.write(module_text_for_tools(tgt_fn, rename_to="tgt"))
        try:
            proc = _run([cfg.alive_tv_path, *cfg.alive_flags, src_path, tgt_path],
                        cfg.timeout_s)
        except ToolError as e:
            if e.kind == "timeout":
                return RefinementVerdict("timeout", message=str(e))
            raise
    output = proc.stdout + ("\n" + proc.stderr if proc.stderr else "")
    if "seems to be correct" in output:
        return RefinementVerdict("correct")
    if "doesn't verify" in output:
        idx = output.find("ERROR:")
        block = output[idx:].strip() if idx >= 0 else output.strip()
        return RefinementVerdict("incorrect", counterexample=block or output.strip())
    if "ERROR:" in output or proc.returncode != 0:
        return RefinementVerdict("verifier-error", message=output.strip()[:2000])
    return RefinementVerdict("verifier-error",
                             message=f"unrecognized validator output: {output.strip()[:500]}")
