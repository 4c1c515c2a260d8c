from __future__ import annotations

import json

import pytest

from ebf.interp import PropertySet
from ebf.lang import SourceProgram
from ebf.pipeline import (MODE_BMC, MODE_FUZZ, MODE_HYBRID, PipelineConfig,
                          VERDICT_FAILED, VERDICT_INCONCLUSIVE,
                          VERDICT_SUCCESS, dump_goto, exit_code, read_report,
                          report_to_json, verify, write_report)

from conftest import task_source


def cfg_for(task, mode, **kw):
    return task.pipeline_config(mode, rng_seed=20220815, **kw)


def test_hybrid_handoff_on_gated_bug(corpus_tasks):
    task = corpus_tasks["deep_magic"]
    src = task_source(task)
    hybrid = verify(src, cfg_for(task, MODE_HYBRID))
    assert hybrid.verdict == VERDICT_FAILED
    assert {b.kind for b in hybrid.bugs} == {"DataRace"}
    fuzz_only = verify(src, cfg_for(task, MODE_FUZZ))
    assert fuzz_only.verdict != VERDICT_FAILED, \
        "the gate value is outside what blind mutation reaches in budget"


def test_late_bug_phase_attribution(corpus_tasks):
    task = corpus_tasks["late_bug"]
    src = task_source(task)
    bmc_only = verify(src, cfg_for(task, MODE_BMC))
    assert bmc_only.verdict == VERDICT_INCONCLUSIVE
    assert bmc_only.stats["bound_hit"] is True
    hybrid = verify(src, cfg_for(task, MODE_HYBRID))
    assert hybrid.verdict == VERDICT_FAILED
    assert all(b.phase == "fuzz" for b in hybrid.bugs)


def test_safe_program_verdict(corpus_tasks):
    task = corpus_tasks["safe_loop"]
    report = verify(task_source(task), cfg_for(task, MODE_HYBRID))
    assert report.verdict == VERDICT_SUCCESS
    assert report.stats["bound_hit"] is False
    assert report.bugs == ()


def test_bmc_counterexample_reported_even_without_fuzz_repro(corpus_tasks):
    task = corpus_tasks["deadlock_pair"]
    report = verify(task_source(task), cfg_for(task, MODE_BMC))
    assert report.verdict == VERDICT_FAILED
    assert report.bugs[0].kind == "Deadlock"
    assert report.bugs[0].phase == "bmc"


def test_report_round_trip(tmp_path, corpus_tasks):
    task = corpus_tasks["racy_counter"]
    report = verify(task_source(task), cfg_for(task, MODE_HYBRID, stable=True))
    out = tmp_path / "report.json"
    write_report(report, out)
    assert read_report(out) == report
    assert out.with_suffix(".txt").exists()


def test_report_bugs_sorted_and_stable(corpus_tasks):
    task = corpus_tasks["racy_counter"]
    report = verify(task_source(task), cfg_for(task, MODE_HYBRID, stable=True))
    keys = [b.sort_key() for b in report.bugs]
    assert keys == sorted(keys)
    doc = json.loads(report_to_json(report))
    assert list(doc.keys()) == ["verdict", "bugs", "stats"]
    assert list(doc["stats"].keys()) == [
        "bmc_seconds", "bmc_states", "bound_hit", "fuzz_seconds",
        "fuzz_execs", "coverage_edges", "unique_crashes", "peak_mem_bytes"]
    assert doc["stats"]["bmc_seconds"] == 0
    assert doc["stats"]["peak_mem_bytes"] == 0


def test_stable_reports_byte_identical(corpus_tasks):
    task = corpus_tasks["account"]
    src = task_source(task)
    a = report_to_json(verify(src, cfg_for(task, MODE_HYBRID, stable=True)))
    b = report_to_json(verify(src, cfg_for(task, MODE_HYBRID, stable=True)))
    assert a == b


def test_exit_codes(corpus_tasks):
    safe = verify(task_source(corpus_tasks["safe_threads"]),
                  cfg_for(corpus_tasks["safe_threads"], MODE_HYBRID))
    assert exit_code(safe) == 0
    buggy = verify(task_source(corpus_tasks["oob_index"]),
                   cfg_for(corpus_tasks["oob_index"], MODE_HYBRID))
    assert exit_code(buggy) == 1
    inconclusive = verify(task_source(corpus_tasks["late_bug"]),
                          cfg_for(corpus_tasks["late_bug"], MODE_BMC))
    assert exit_code(inconclusive) == 2


def test_artifacts_written(tmp_path, corpus_tasks):
    task = corpus_tasks["use_after_free"]
    cfg = PipelineConfig(mode=MODE_HYBRID, props=task.property_set(),
                         max_execs=task.max_execs, rng_seed=1,
                         artifacts_dir=tmp_path / "art")
    report = verify(task_source(task), cfg)
    crash_bins = list((tmp_path / "art" / "crashes").glob("crash-*.bin"))
    assert crash_bins
    for b in report.bugs:
        assert b.input_file is not None
        assert (tmp_path / "art" / "crashes" / b.input_file).exists()
        assert (tmp_path / "art" / "crashes" / b.trace_file).exists()
        sidecar = json.loads((tmp_path / "art" / "crashes" /
                              b.input_file.replace(".bin", ".json")).read_text())
        assert sidecar["kind"] == b.kind
    seeds = list((tmp_path / "art" / "seeds").glob("seed-*.bin"))
    assert len(seeds) == len(set(s.read_bytes() for s in seeds)) >= 1


def test_extra_seed_dir_loaded(tmp_path, corpus_tasks):
    task = corpus_tasks["assert_direct"]
    # plant the magic value as an external seed: found immediately
    from ebf.seeds import SeedInput
    (tmp_path / "magic.bin").write_bytes(SeedInput.from_values([300]).data)
    cfg = PipelineConfig(mode=MODE_FUZZ, props=task.property_set(),
                         max_execs=200, rng_seed=99, extra_seed_dir=tmp_path)
    report = verify(task_source(task), cfg)
    assert report.verdict == VERDICT_FAILED
    assert report.bugs[0].kind == "ReachError"


def test_no_instrument_mode(corpus_tasks):
    from ebf.instrument import InstrumentationConfig
    task = corpus_tasks["racy_counter"]
    cfg = PipelineConfig(mode=MODE_FUZZ, props=task.property_set(),
                         instrument=InstrumentationConfig(enabled=False),
                         max_execs=3000, rng_seed=20220815)
    report = verify(task_source(task), cfg)
    # without delay points the schedule region is inert: only the leak shows
    assert {b.kind for b in report.bugs} <= {"ThreadLeak"}


def test_dump_goto_smoke():
    src = SourceProgram("mini.mcl", "int x; void main() { x = 1; }")
    text = dump_goto(src)
    assert "main:" in text and "ASSIGN" in text and "mini.mcl:1" in text


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(mode="nope")
    with pytest.raises(ValueError):
        PipelineConfig(max_execs=None, time_budget=None)
