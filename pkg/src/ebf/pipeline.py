"""Three-phase orchestration: bounded check, seed handoff, fuzzing.

Hybrid mode runs the bounded checker on the unwound program first.  A
violation both enters the report directly (it replays by construction)
and becomes the fuzzer's starting corpus via seed extraction; otherwise
random fallback seeds in [0, 300] start the fuzzer.  The fuzzing phase
always executes the instrumented, NON-unwound program: unwinding exists
to cap the bounded search, while the fuzzer runs natively and can reach
behavior beyond the bound.

Verdicts: VerificationFailed iff any bug was found (every reported bug
replays from its stored input); VerificationSuccessful when the bounded
space closed without truncation and fuzzing saturated; Inconclusive when
budgets ran out with the unwinding bound hit or coverage still growing.
"""

from __future__ import annotations

import json
import resource
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import bmc as bmc_mod
from .bmc import BmcConfig, Counterexample, Verdict, extract_seeds, fallback_seeds
from .fuzz import CrashSet, FuzzBudget, SeedQueue, fuzz_loop
from .goto import GotoProgram, UnwindBound, dump, lower, unwind
from .instrument import InstrumentationConfig, inject
from .interp import (DEFAULT_STEP_BUDGET, BugReport, PropertySet, format_trace,
                     run)
from .lang import Ast, LangError, SourceProgram, parse
from .seeds import SeedInput

MODE_HYBRID = "hybrid"
MODE_BMC = "bmc"
MODE_FUZZ = "fuzz"

VERDICT_FAILED = "VerificationFailed"
VERDICT_SUCCESS = "VerificationSuccessful"
VERDICT_INCONCLUSIVE = "Inconclusive"

BMC_TIME_SHARE = 0.4  # hybrid wall-time split: bounded phase gets 40%
DEFAULT_MAX_EXECS = 20_000
GROWTH_WINDOW = 0.75  # novelty in the last quarter of execs = still growing

STAT_FIELDS = ("bmc_seconds", "bmc_states", "bound_hit", "fuzz_seconds",
               "fuzz_execs", "coverage_edges", "unique_crashes",
               "peak_mem_bytes")
VOLATILE_STATS = ("bmc_seconds", "fuzz_seconds", "peak_mem_bytes")


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = MODE_HYBRID
    props: PropertySet = PropertySet()
    bmc: BmcConfig = BmcConfig()
    instrument: InstrumentationConfig = InstrumentationConfig()
    max_execs: Optional[int] = DEFAULT_MAX_EXECS
    time_budget: Optional[float] = None
    fallback_seed_count: int = 10
    rng_seed: int = 0
    step_budget: int = DEFAULT_STEP_BUDGET
    stable_report: bool = False
    artifacts_dir: Optional[Path] = None
    extra_seed_dir: Optional[Path] = None

    def __post_init__(self):
        if self.mode not in (MODE_HYBRID, MODE_BMC, MODE_FUZZ):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_execs is None and self.time_budget is None:
            raise ValueError("need max_execs or time_budget")


@dataclass(frozen=True)
class ReportBug:
    kind: str
    file: str
    line: int
    second_file: Optional[str]
    second_line: Optional[int]
    input_file: Optional[str]
    trace_file: Optional[str]
    phase: str

    def sort_key(self) -> tuple:
        return (self.kind, self.file, self.line,
                self.second_line if self.second_line is not None else -1)


@dataclass(frozen=True)
class VerificationReport:
    verdict: str
    bugs: tuple
    stats: dict


@dataclass
class _Finding:
    bug: BugReport
    phase: str
    seed: SeedInput
    cov_digest: str


def _dedup_key(bug: BugReport) -> tuple:
    return bug.key()


def _load_extra_seeds(seed_dir: Path) -> list:
    seeds = []
    for path in sorted(seed_dir.glob("*.bin")):
        try:
            seeds.append(SeedInput.repair(path.read_bytes()))
        except ValueError:
            continue
    return seeds


class Pipeline:
    def __init__(self, source: SourceProgram, cfg: PipelineConfig):
        self.source = source
        self.cfg = cfg
        self.ast: Ast = parse(source)
        self.plain: GotoProgram = lower(self.ast)
        if cfg.instrument.enabled:
            self.fuzz_target = inject(self.plain, cfg.instrument)
        else:
            self.fuzz_target = self.plain
        # Replay always goes through the instrumented program so schedule
        # bytes mean the same thing everywhere.
        self.replay_target = (self.fuzz_target if cfg.instrument.enabled
                              else inject(self.plain, InstrumentationConfig()))
        self.findings: dict = {}
        self.stats = {k: 0 for k in STAT_FIELDS}
        self.stats["bound_hit"] = False
        self.corpus: list = []
        self.queue: Optional[SeedQueue] = None
        self.fuzz_stats = None
        self._bmc_exhausted = False

    # -- phases --

    def run_bmc(self) -> Verdict:
        cfg = self.cfg
        budget = cfg.bmc.time_budget
        if cfg.time_budget is not None:
            share = cfg.time_budget * BMC_TIME_SHARE
            budget = min(budget, share) if budget is not None else share
        bcfg = replace(cfg.bmc, time_budget=budget)
        unwound = unwind(self.plain, bcfg.unwind)
        t0 = time.monotonic()
        verdict = bmc_mod.check(unwound, cfg.props, bcfg)
        self.stats["bmc_seconds"] = time.monotonic() - t0
        self.stats["bmc_states"] = verdict.states
        self.stats["bound_hit"] = verdict.bound_hit
        if verdict.is_violation:
            seed = extract_seeds(verdict.counterexample, self.replay_target, cfg.props)
            st = run(self.replay_target, seed, budget=cfg.step_budget,
                     props=cfg.props, record_trace=True)
            if st.bug is not None:
                self._add_finding(st.bug, "bmc", seed, st.coverage.digest())
            self.corpus = [seed]
        return verdict

    def run_fuzz(self, seconds: Optional[float]) -> None:
        cfg = self.cfg
        if not self.corpus:
            self.corpus = fallback_seeds(cfg.fallback_seed_count, cfg.rng_seed)
        if cfg.extra_seed_dir is not None and cfg.extra_seed_dir.is_dir():
            self.corpus.extend(_load_extra_seeds(cfg.extra_seed_dir))
        budget = FuzzBudget(max_execs=cfg.max_execs, seconds=seconds)
        t0 = time.monotonic()
        queue, crashes, fstats = fuzz_loop(
            self.fuzz_target, self.corpus, budget, cfg.rng_seed,
            props=cfg.props, step_budget=cfg.step_budget)
        self.stats["fuzz_seconds"] = time.monotonic() - t0
        self.stats["fuzz_execs"] = fstats.execs
        self.stats["coverage_edges"] = fstats.coverage_edges
        self.fuzz_stats = fstats
        self.queue = queue
        for entry in crashes:
            # Re-run with tracing on: deterministic, so the same bug falls out.
            st = run(self.fuzz_target, entry.seed, budget=cfg.step_budget,
                     props=cfg.props, record_trace=True)
            if st.bug is not None:
                self._add_finding(st.bug, "fuzz", entry.seed, entry.cov_digest)

    def _add_finding(self, bug: BugReport, phase: str, seed: SeedInput,
                     cov_digest: str) -> None:
        key = _dedup_key(bug)
        if key not in self.findings:
            self.findings[key] = _Finding(bug, phase, seed, cov_digest)

    # -- assembly --

    def verdict(self) -> str:
        if self.findings:
            return VERDICT_FAILED
        growing = False
        if self.fuzz_stats is not None and self.fuzz_stats.execs > 0:
            growing = (self.fuzz_stats.last_novel_exec
                       > GROWTH_WINDOW * self.fuzz_stats.execs)
        exhausted = self._bmc_exhausted
        if self.stats["bound_hit"] or growing or exhausted:
            return VERDICT_INCONCLUSIVE
        return VERDICT_SUCCESS

    def report(self) -> VerificationReport:
        bugs = []
        art = self.cfg.artifacts_dir
        for finding in self.findings.values():
            name = f"crash-{finding.bug.kind}-{finding.cov_digest}"
            input_file = trace_file = None
            if art is not None:
                input_file = f"{name}.bin"
                trace_file = f"{name}.trace"
            second = finding.bug.second_loc
            bugs.append(ReportBug(
                kind=finding.bug.kind,
                file=self.source.path,
                line=finding.bug.loc.line,
                second_file=self.source.path if second is not None else None,
                second_line=second.line if second is not None else None,
                input_file=input_file,
                trace_file=trace_file,
                phase=finding.phase,
            ))
        bugs.sort(key=lambda b: b.sort_key())
        stats = dict(self.stats)
        stats["unique_crashes"] = len(self.findings)
        stats["peak_mem_bytes"] = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
        if self.cfg.stable_report:
            for k in VOLATILE_STATS:
                stats[k] = 0
        return VerificationReport(self.verdict(), tuple(bugs), stats)

    def write_artifacts(self) -> None:
        art = self.cfg.artifacts_dir
        if art is None:
            return
        art.mkdir(parents=True, exist_ok=True)
        seeds_dir = art / "seeds"
        seeds_dir.mkdir(exist_ok=True)
        for i, seed in enumerate(self.corpus):
            (seeds_dir / f"seed-{i:04d}.bin").write_bytes(seed.data)
        crashes_dir = art / "crashes"
        crashes_dir.mkdir(exist_ok=True)
        for finding in self.findings.values():
            name = f"crash-{finding.bug.kind}-{finding.cov_digest}"
            (crashes_dir / f"{name}.bin").write_bytes(finding.seed.data)
            st = run(self.fuzz_target if finding.phase == "fuzz" else self.replay_target,
                     finding.seed, budget=self.cfg.step_budget,
                     props=self.cfg.props, record_trace=True)
            (crashes_dir / f"{name}.trace").write_text(
                format_trace(st.trace, self.source.path) + "\n", encoding="utf-8")
            sidecar = {
                "kind": finding.bug.kind,
                "file": self.source.path,
                "line": finding.bug.loc.line,
                "trace": f"{name}.trace",
            }
            (crashes_dir / f"{name}.json").write_text(
                json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")


def verify(source: SourceProgram, cfg: PipelineConfig) -> VerificationReport:
    """Run the configured pipeline over one source program."""
    pipe = Pipeline(source, cfg)
    t_start = time.monotonic()

    if cfg.mode in (MODE_HYBRID, MODE_BMC):
        verdict = pipe.run_bmc()
        pipe._bmc_exhausted = verdict.status == bmc_mod.EXHAUSTED

    if cfg.mode in (MODE_HYBRID, MODE_FUZZ):
        seconds = None
        if cfg.time_budget is not None:
            seconds = max(0.5, cfg.time_budget - (time.monotonic() - t_start))
        pipe.run_fuzz(seconds)

    pipe.write_artifacts()
    return pipe.report()


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def report_to_json(r: VerificationReport) -> str:
    """Stable-field-order JSON; byte-identical for identical reports."""
    doc = {
        "verdict": r.verdict,
        "bugs": [
            {
                "kind": b.kind,
                "file": b.file,
                "line": b.line,
                "second_file": b.second_file,
                "second_line": b.second_line,
                "input_file": b.input_file,
                "trace_file": b.trace_file,
                "phase": b.phase,
            }
            for b in r.bugs
        ],
        "stats": {k: _stat_json(r.stats.get(k)) for k in STAT_FIELDS},
    }
    return json.dumps(doc, indent=2) + "\n"


def _stat_json(v):
    if isinstance(v, float):
        return round(v, 3)
    return v


def report_summary(r: VerificationReport) -> str:
    lines = [f"verdict: {r.verdict}", f"bugs: {len(r.bugs)}"]
    for b in r.bugs:
        where = f"{b.file}:{b.line}"
        if b.second_line is not None:
            where += f" / {b.second_file}:{b.second_line}"
        lines.append(f"  {b.kind} at {where} [{b.phase}]")
    for k in STAT_FIELDS:
        lines.append(f"{k}: {_stat_json(r.stats.get(k))}")
    return "\n".join(lines) + "\n"


def write_report(r: VerificationReport, path: Path) -> None:
    """JSON report plus a sibling .txt human summary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_to_json(r), encoding="utf-8")
    path.with_suffix(".txt").write_text(report_summary(r), encoding="utf-8")


def read_report(path: Path) -> VerificationReport:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    bugs = tuple(
        ReportBug(b["kind"], b["file"], b["line"], b["second_file"],
                  b["second_line"], b["input_file"], b["trace_file"], b["phase"])
        for b in doc["bugs"])
    return VerificationReport(doc["verdict"], bugs, doc["stats"])


def exit_code(r: VerificationReport) -> int:
    if r.verdict == VERDICT_SUCCESS:
        return 0
    if r.verdict == VERDICT_FAILED:
        return 1
    return 2


def dump_goto(source: SourceProgram) -> str:
    return dump(lower(parse(source)), source.path)
