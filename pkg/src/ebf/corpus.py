"""Bundled benchmark tasks and the mode-comparison harness.

Each task is one ``.mcl`` file plus a ``.yml`` sidecar declaring the
expected outcome and per-task knobs::

    expected_bug: true
    kinds: [DataRace, ThreadLeak]   # any of these counts as the bug
    properties: [data_races]        # detector families to arm
    max_execs: 10000                # recommended fuzz budget
    threads: 3                      # static thread count (incl. main)
    nondets: 0                      # static nondet-site count
    loops_within_bound: true        # all loops terminate within k=20
    bmc_domain: [...]               # optional nondet-domain override
    unwind: 20                      # optional bound override

``run_suite`` runs every (task, mode) cell with a pinned rng seed and
equal per-task budgets across modes, and emits a CSV plus a markdown
summary with per-mode totals: tasks with a bug found, total seconds,
peak memory.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import yaml

from .bmc import BmcConfig
from .goto import UnwindBound
from .interp import PropertySet
from .pipeline import (MODE_BMC, MODE_FUZZ, MODE_HYBRID, PipelineConfig,
                       VERDICT_FAILED, VerificationReport, verify)
from .lang import SourceProgram

ALL_MODES = (MODE_BMC, MODE_FUZZ, MODE_HYBRID)
DEFAULT_RNG_SEED = 20220815


@dataclass(frozen=True)
class BenchmarkTask:
    name: str
    path: Path
    expected_bug: bool
    kinds: tuple
    properties: tuple
    max_execs: int
    threads: int
    nondets: int
    loops_within_bound: bool
    bmc_domain: Optional[tuple] = None
    unwind: int = 20

    def property_set(self) -> PropertySet:
        return PropertySet.only(*self.properties)

    def bmc_config(self) -> BmcConfig:
        cfg = BmcConfig(unwind=UnwindBound(self.unwind))
        if self.bmc_domain is not None:
            cfg = replace(cfg, domain=self.bmc_domain)
        return cfg

    def pipeline_config(self, mode: str, rng_seed: int,
                        max_execs: Optional[int] = None,
                        time_budget: Optional[float] = None,
                        stable: bool = False) -> PipelineConfig:
        return PipelineConfig(
            mode=mode,
            props=self.property_set(),
            bmc=self.bmc_config(),
            max_execs=max_execs if max_execs is not None else self.max_execs,
            time_budget=time_budget,
            rng_seed=rng_seed,
            stable_report=stable,
        )


def bundled_dir() -> Path:
    return Path(__file__).parent / "tasks"


def load_task(mcl_path: Path) -> BenchmarkTask:
    mcl_path = Path(mcl_path)
    sidecar = mcl_path.with_suffix(".yml")
    meta = yaml.safe_load(sidecar.read_text(encoding="utf-8"))
    return BenchmarkTask(
        name=mcl_path.stem,
        path=mcl_path,
        expected_bug=bool(meta["expected_bug"]),
        kinds=tuple(meta.get("kinds", ())),
        properties=tuple(meta["properties"]),
        max_execs=int(meta.get("max_execs", 2000)),
        threads=int(meta.get("threads", 1)),
        nondets=int(meta.get("nondets", 0)),
        loops_within_bound=bool(meta.get("loops_within_bound", True)),
        bmc_domain=tuple(meta["bmc_domain"]) if "bmc_domain" in meta else None,
        unwind=int(meta.get("unwind", 20)),
    )


def load_corpus(directory: Optional[Path] = None) -> list:
    directory = Path(directory) if directory is not None else bundled_dir()
    tasks = [load_task(p) for p in sorted(directory.glob("*.mcl"))]
    if not tasks:
        raise FileNotFoundError(f"no .mcl tasks in {directory}")
    return tasks


@dataclass(frozen=True)
class ComparisonRow:
    task: str
    mode: str
    found: bool
    kinds: tuple
    verdict: str
    seconds: float
    execs: int
    peak_mem_bytes: int


def _run_cell(args) -> ComparisonRow:
    task_path, mode, rng_seed, max_execs, time_budget = args
    task = load_task(Path(task_path))
    source = SourceProgram(str(task.path),
                           task.path.read_text(encoding="utf-8"))
    cfg = task.pipeline_config(mode, rng_seed, max_execs, time_budget)
    report = verify(source, cfg)
    kinds = tuple(sorted({b.kind for b in report.bugs}))
    return ComparisonRow(
        task=task.name,
        mode=mode,
        found=report.verdict == VERDICT_FAILED,
        kinds=kinds,
        verdict=report.verdict,
        seconds=float(report.stats["bmc_seconds"]) + float(report.stats["fuzz_seconds"]),
        execs=int(report.stats["fuzz_execs"]),
        peak_mem_bytes=int(report.stats["peak_mem_bytes"]),
    )


def run_suite(tasks: list, modes: tuple = ALL_MODES,
              rng_seed: int = DEFAULT_RNG_SEED,
              max_execs: Optional[int] = None,
              time_budget: Optional[float] = None,
              jobs: int = 1) -> tuple:
    """Run every (task, mode) cell; returns (rows, summary dict).

    Budgets are equal across modes per task; `max_execs`/`time_budget`
    override the tasks' recommended budgets.  Cells are independent, so
    `jobs` may parallelize across them without touching determinism
    within a cell.
    """
    cells = [(str(t.path), mode, rng_seed, max_execs, time_budget)
             for t in tasks for mode in modes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    summary = {}
    for mode in modes:
        mode_rows = [r for r in rows if r.mode == mode]
        summary[mode] = {
            "tasks_found": sum(1 for r in mode_rows if r.found),
            "total_seconds": round(sum(r.seconds for r in mode_rows), 3),
            "peak_mem_bytes": max((r.peak_mem_bytes for r in mode_rows), default=0),
        }
    return rows, summary


def rows_to_csv(rows: list, summary: dict, stable: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task", "mode", "found", "kinds", "verdict", "seconds",
                "execs", "peak_mem_bytes"])
    for r in sorted(rows, key=lambda r: (r.task, r.mode)):
        w.writerow([
            r.task, r.mode, int(r.found), "+".join(r.kinds), r.verdict,
            0.0 if stable else round(r.seconds, 3),
            r.execs,
            0 if stable else r.peak_mem_bytes,
        ])
    for mode in sorted(summary):
        s = summary[mode]
        w.writerow(["TOTAL", mode, s["tasks_found"], "", "",
                    0.0 if stable else s["total_seconds"], "",
                    0 if stable else s["peak_mem_bytes"]])
    return buf.getvalue()


def rows_to_markdown(rows: list, summary: dict) -> str:
    lines = ["| task | mode | found | kinds | verdict |",
             "|---|---|---|---|---|"]
    for r in sorted(rows, key=lambda r: (r.task, r.mode)):
        lines.append(f"| {r.task} | {r.mode} | {'yes' if r.found else 'no'} "
                     f"| {'+'.join(r.kinds)} | {r.verdict} |")
    lines.append("")
    lines.append("| mode | tasks with a bug found | total seconds | peak mem (MB) |")
    lines.append("|---|---|---|---|")
    for mode in sorted(summary):
        s = summary[mode]
        lines.append(f"| {mode} | {s['tasks_found']} | {s['total_seconds']} "
                     f"| {s['peak_mem_bytes'] // (1024 * 1024)} |")
    return "\n".join(lines) + "\n"
