"""Command-line entry points: ``ebf verify`` and ``ebf bench``.

Exit codes for verify: 0 VerificationSuccessful, 1 VerificationFailed,
2 Inconclusive, 3 tool error (bad input, parse failure).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bmc import BmcConfig
from .corpus import (ALL_MODES, DEFAULT_RNG_SEED, load_corpus, rows_to_csv,
                     rows_to_markdown, run_suite)
from .goto import UnwindBound
from .instrument import InstrumentationConfig
from .interp import PropertySet
from .lang import LangError, SourceProgram
from .pipeline import (MODE_BMC, MODE_FUZZ, MODE_HYBRID, PipelineConfig,
                       dump_goto, exit_code, report_summary, verify,
                       write_report)

EXIT_TOOL_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ebf",
                                 description="hybrid verification for MCL programs")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify one .mcl file")
    v.add_argument("file", help="MCL source file")
    v.add_argument("--mode", choices=[MODE_HYBRID, MODE_BMC, MODE_FUZZ],
                   default=MODE_HYBRID)
    v.add_argument("--unwind", type=int, default=20, metavar="K")
    v.add_argument("--unreach-call", action="store_true")
    v.add_argument("--data-races-check", action="store_true")
    v.add_argument("--overflow-check", action="store_true")
    v.add_argument("--memory-safety", action="store_true")
    v.add_argument("--timeout", type=float, metavar="SECS")
    v.add_argument("--max-execs", type=int, metavar="N")
    v.add_argument("--seed-dir", type=Path, metavar="DIR",
                   help="extra corpus seeds (*.bin), loaded before fuzzing")
    v.add_argument("--rng-seed", type=int, default=0, metavar="N")
    v.add_argument("--out", type=Path, metavar="REPORT.json")
    v.add_argument("--no-instrument", action="store_true",
                   help="fuzz the plain program (no delay points)")
    v.add_argument("--delay-max", type=int, metavar="NS",
                   help="override the maximum virtual delay")
    v.add_argument("--dump-goto", action="store_true",
                   help="print the lowered instruction list and exit")
    v.add_argument("--stable-report", action="store_true",
                   help="zero wall-clock and memory fields in the report")

    b = sub.add_parser("bench", help="run the benchmark corpus per mode")
    b.add_argument("corpus_dir", nargs="?", default=None,
                   help="task directory (defaults to the bundled corpus)")
    b.add_argument("--modes", default=",".join(ALL_MODES),
                   help="comma-separated subset of bmc,fuzz,hybrid")
    b.add_argument("--budget-secs", type=float, metavar="S")
    b.add_argument("--max-execs", type=int, metavar="N",
                   help="deterministic per-cell budget override")
    b.add_argument("--rng-seed", type=int, default=DEFAULT_RNG_SEED, metavar="N")
    b.add_argument("--out", type=Path, default=Path("results.csv"))
    b.add_argument("--jobs", type=int, default=1, metavar="N")
    b.add_argument("--stable", action="store_true",
                   help="zero timing/memory columns for reproducible CSVs")
    return ap


def _props_from_flags(ns: argparse.Namespace) -> PropertySet:
    chosen = []
    if ns.unreach_call:
        chosen.append("unreach_call")
    if ns.memory_safety:
        chosen.append("valid_memsafety")
    if ns.overflow_check:
        chosen.append("no_overflow")
    if ns.data_races_check:
        chosen.append("data_races")
    if not chosen:
        return PropertySet()  # default: everything on
    return PropertySet.only(*chosen)


def _cmd_verify(ns: argparse.Namespace) -> int:
    path = Path(ns.file)
    try:
        source = SourceProgram(str(path), path.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"ebf: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_TOOL_ERROR

    try:
        if ns.dump_goto:
            print(dump_goto(source))
            return 0
        instr = InstrumentationConfig(enabled=not ns.no_instrument)
        if ns.delay_max is not None:
            instr = replace(instr, delay_max_ns=ns.delay_max)
        cfg = PipelineConfig(
            mode=ns.mode,
            props=_props_from_flags(ns),
            bmc=BmcConfig(unwind=UnwindBound(ns.unwind)),
            instrument=instr,
            max_execs=ns.max_execs if ns.max_execs is not None else
                      (None if ns.timeout is not None else 20_000),
            time_budget=ns.timeout,
            rng_seed=ns.rng_seed,
            stable_report=ns.stable_report,
            artifacts_dir=(ns.out.parent / (ns.out.stem + "-artifacts")
                           if ns.out is not None else None),
            extra_seed_dir=ns.seed_dir,
        )
        report = verify(source, cfg)
    except LangError as exc:
        print(f"ebf: {path}: {exc}", file=sys.stderr)
        return EXIT_TOOL_ERROR

    if ns.out is not None:
        write_report(report, ns.out)
    print(report_summary(report), end="")
    return exit_code(report)


def _cmd_bench(ns: argparse.Namespace) -> int:
    modes = tuple(m.strip() for m in ns.modes.split(",") if m.strip())
    for m in modes:
        if m not in ALL_MODES:
            print(f"ebf: unknown mode {m!r}", file=sys.stderr)
            return EXIT_TOOL_ERROR
    try:
        tasks = load_corpus(ns.corpus_dir)
    except (OSError, FileNotFoundError) as exc:
        print(f"ebf: {exc}", file=sys.stderr)
        return EXIT_TOOL_ERROR
    rows, summary = run_suite(tasks, modes, rng_seed=ns.rng_seed,
                              max_execs=ns.max_execs,
                              time_budget=ns.budget_secs, jobs=ns.jobs)
    csv_text = rows_to_csv(rows, summary, stable=ns.stable)
    ns.out.parent.mkdir(parents=True, exist_ok=True)
    ns.out.write_text(csv_text, encoding="utf-8")
    md = rows_to_markdown(rows, summary)
    ns.out.with_suffix(".md").write_text(md, encoding="utf-8")
    print(md, end="")
    return 0


def main(argv: list | None = None) -> int:
    ns = _build_parser().parse_args(argv)
    if ns.command == "verify":
        return _cmd_verify(ns)
    return _cmd_bench(ns)


if __name__ == "__main__":
    sys.exit(main())
