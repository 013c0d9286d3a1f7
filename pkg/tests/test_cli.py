from __future__ import annotations

import json
from pathlib import Path

import pytest

from peepseek.cli import load_config, main

from conftest import CORPUS, FIXTURES

TRANSCRIPT = str(FIXTURES / "clamp_replay_transcript.jsonl")


def write_config(tmp_path: Path, **extra) -> Path:
    lines = [
        f'corpus = ["{CORPUS}"]',
        'verifier = "builtin"',
        "deterministic = true",
        f'findings_file = "{tmp_path / "findings.jsonl"}"',
        f'stats_file = "{tmp_path / "stats.json"}"',
        "",
        "[agent]",
        'backend = "scripted-replay"',
        f'transcript = "{TRANSCRIPT}"',
    ]
    for key, value in extra.items():
        lines.insert(0, f"{key} = {value}")
    path = tmp_path / "cfg.toml"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_verify_builtin_correct(capsys):
    rc = main(["verify", str(FIXTURES / "clamp_scalar_src.ll"),
               str(FIXTURES / "clamp_scalar_tgt.ll"), "--oracle", "builtin"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "verdict: correct (builtin)" in out


def test_verify_builtin_incorrect(tmp_path, capsys):
    src = tmp_path / "src.ll"
    tgt = tmp_path / "tgt.ll"
    src.write_text("define i8 @src(i8 %x, i8 %y) { entry: %r = add i8 %x, %y  ret i8 %r }")
    tgt.write_text("define i8 @tgt(i8 %x, i8 %y) { entry: %r = or i8 %x, %y  ret i8 %r }")
    rc = main(["verify", str(src), str(tgt)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "verdict: incorrect" in out
    assert "Counterexample" in out


def test_extract_writes_files_and_manifest(tmp_path, capsys):
    out_dir = tmp_path / "seqs"
    rc = main(["extract", str(CORPUS), "--out", str(out_dir),
               "--dedup-file", str(tmp_path / "d.bin")])
    assert rc == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert len(manifest) == 4
    for entry in manifest:
        assert (out_dir / entry["file"]).exists()
        assert len(entry["digest"]) == 64
        assert entry["source"]["function"] == "clamp"
    assert "extracted 4 unique sequences" in capsys.readouterr().out


def test_replay_produces_findings(tmp_path, capsys):
    findings = tmp_path / "f.jsonl"
    rc = main(["replay", str(CORPUS), "--transcript", TRANSCRIPT,
               "--findings", str(findings), "--stats", str(tmp_path / "s.json")])
    assert rc == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["findings"] == 1
    assert stats["agent_calls"] == 2
    assert findings.exists()


def test_run_with_config(tmp_path, capsys):
    cfg_path = write_config(tmp_path)
    rc = main(["run", "--config", str(cfg_path)])
    assert rc == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["findings"] == 1
    assert (tmp_path / "stats.json").exists()


def test_run_self_check(tmp_path, capsys):
    cfg_path = write_config(tmp_path)
    rc = main(["run", "--config", str(cfg_path), "--self-check"])
    assert rc == 0
    assert "self-check: all 1 findings re-verified" in capsys.readouterr().out


def test_run_missing_corpus_exit_2(tmp_path, capsys):
    cfg_path = write_config(tmp_path)
    rc = main(["run", "--config", str(cfg_path), str(tmp_path / "missing-dir")])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_run_bad_config_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("corpus = [unterminated")
    rc = main(["run", "--config", str(bad)])
    assert rc == 1


def test_run_unwritable_findings_exit_1(tmp_path):
    cfg_path = write_config(tmp_path)
    text = cfg_path.read_text().replace(
        str(tmp_path / "findings.jsonl"), "/nonexistent-dir/findings.jsonl")
    cfg_path.write_text(text)
    rc = main(["run", "--config", str(cfg_path)])
    assert rc == 1


def test_optimize_single_function(tmp_path, capsys):
    rc = main(["optimize", str(FIXTURES / "clamp_vec_seq.ll"),
               "--agent", "replay", "--transcript", TRANSCRIPT,
               "--verifier", "builtin"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "outcome: finding" in out
    assert "attempt 0: syntax-error" in out
    assert "attempt 1: verified" in out


def test_report_renders_and_writes_pairs(tmp_path, capsys):
    findings = tmp_path / "f.jsonl"
    main(["replay", str(CORPUS), "--transcript", TRANSCRIPT,
          "--findings", str(findings)])
    capsys.readouterr()
    pairs = tmp_path / "pairs"
    rc = main(["report", str(findings), "--pairs-dir", str(pairs)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "finding #1" in out
    assert "instructions 4 -> 3" in out
    pair_file = pairs / "finding_0001.ll"
    text = pair_file.read_text()
    assert "@src" in text and "@tgt" in text and "declare" in text


def test_verify_external_without_tool_exit_1(tmp_path, capsys, monkeypatch):
    import shutil as _shutil
    if _shutil.which("alive-tv"):
        pytest.skip("external validator installed")
    rc = main(["verify", str(FIXTURES / "clamp_scalar_src.ll"),
               str(FIXTURES / "clamp_scalar_tgt.ll"), "--oracle", "external"])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_replay_empty_corpus_exit_0(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(["replay", str(empty), "--transcript", TRANSCRIPT,
               "--findings", str(tmp_path / "f.jsonl")])
    assert rc == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["sequences_seen"] == 0
    assert stats["findings"] == 0


def test_load_config_round_trips_fields(tmp_path):
    cfg_path = write_config(tmp_path, workers=3, max_reattempts=1)
    cfg = load_config(str(cfg_path))
    assert cfg.workers == 3
    assert cfg.max_reattempts == 1
    assert cfg.agent.max_reattempts == 1
    assert cfg.verifier == "builtin"
    assert cfg.agent.backend == "scripted-replay"
    assert cfg.tools.cpu == "btver2"
    assert cfg.tools.target_triple == "x86_64-unknown-unknown"
