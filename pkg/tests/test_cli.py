from __future__ import annotations

import json

import pytest

from ebf.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_verify_safe_exit_zero(corpus_dir, capsys, tmp_path):
    code, out, _ = run_cli(capsys, "verify", str(corpus_dir / "safe_loop.mcl"),
                           "--max-execs", "500", "--rng-seed", "1")
    assert code == 0
    assert "verdict: VerificationSuccessful" in out


def test_verify_buggy_exit_one(corpus_dir, capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, _ = run_cli(capsys, "verify", str(corpus_dir / "oob_index.mcl"),
                           "--memory-safety", "--max-execs", "300",
                           "--rng-seed", "1", "--out", str(out_path))
    assert code == 1
    doc = json.loads(out_path.read_text())
    assert doc["verdict"] == "VerificationFailed"
    assert doc["bugs"][0]["kind"] == "OutOfBounds"
    assert out_path.with_suffix(".txt").exists()


def test_verify_inconclusive_exit_two(corpus_dir, capsys):
    code, out, _ = run_cli(capsys, "verify", str(corpus_dir / "late_bug.mcl"),
                           "--mode", "bmc", "--unreach-call",
                           "--max-execs", "100", "--rng-seed", "1")
    assert code == 2


def test_tool_error_exit_three(capsys, tmp_path):
    code, _, err = run_cli(capsys, "verify", str(tmp_path / "missing.mcl"))
    assert code == 3
    bad = tmp_path / "bad.mcl"
    bad.write_text("void main() { x = 1; }")
    code, _, err = run_cli(capsys, "verify", str(bad))
    assert code == 3
    assert "x" in err


def test_paper_named_property_flags(corpus_dir, capsys):
    code, out, _ = run_cli(capsys, "verify", str(corpus_dir / "racy_counter.mcl"),
                           "--data-races-check", "--max-execs", "2000",
                           "--rng-seed", "20220815")
    assert code == 1
    code2, out2, _ = run_cli(capsys, "verify", str(corpus_dir / "overflow_loop.mcl"),
                             "--overflow-check", "--max-execs", "200",
                             "--rng-seed", "1")
    assert code2 == 1
    assert "SignedOverflow" in out2


def test_dump_goto(corpus_dir, capsys):
    code, out, _ = run_cli(capsys, "verify", str(corpus_dir / "safe_loop.mcl"),
                           "--dump-goto")
    assert code == 0
    assert "COND_GOTO" in out
    assert "safe_loop.mcl" in out


def test_stable_report_byte_identical(corpus_dir, capsys, tmp_path):
    args = ["verify", str(corpus_dir / "account.mcl"), "--data-races-check",
            "--max-execs", "1000", "--rng-seed", "20220815", "--stable-report"]
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run_cli(capsys, *args, "--out", str(a))
    run_cli(capsys, *args, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_bench_subset(corpus_dir, capsys, tmp_path):
    out = tmp_path / "results.csv"
    code, printed, _ = run_cli(capsys, "bench", str(corpus_dir),
                               "--modes", "bmc",
                               "--max-execs", "200",
                               "--rng-seed", "7",
                               "--out", str(out), "--stable")
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0].startswith("task,mode,found")
    assert "TOTAL,bmc" in text
    assert out.with_suffix(".md").exists()
    assert "tasks with a bug found" in printed


def test_bench_rejects_unknown_mode(capsys):
    code, _, err = run_cli(capsys, "bench", "--modes", "magic")
    assert code == 3
    assert "magic" in err
