from __future__ import annotations

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"
CORPUS = FIXTURES / "corpus"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_function(name: str):
    from peepseek.ir import parse_module
    return parse_module(fixture_text(name), name).functions[0]


# every committed .ll fixture that must parse cleanly
PARSEABLE_FIXTURES = [
    "clamp_scalar_src.ll",
    "clamp_scalar_tgt.ll",
    "corpus/clamp_loop_module.ll",
    "clamp_vec_seq.ll",
    "clamp_vec_opt.ll",
    "load_merge_src.ll",
    "load_merge_tgt.ll",
    "redundant_umax_src.ll",
    "redundant_umax_tgt.ll",
    "nan_guard_src.ll",
    "nan_guard_tgt.ll",
]
