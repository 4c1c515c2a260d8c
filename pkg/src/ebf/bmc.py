"""Phase-1 bounded checking by explicit-state search.

``check`` explores the unwound program exhaustively over a finite nondet
domain and context-bounded interleavings: depth-first over (machine state
x nondet choices x schedule choices), where a schedule choice point is any
instruction touching shared state, preemptions are capped by the context
bound, and blocking hands over round-robin for free.  Visited-state
hashing (excluding vector clocks) prunes revisits; exploration order is
fixed (domain order, then continue-before-preempt, targets ascending), so
the verdict and the first counterexample are deterministic.

A counterexample carries the nondet values in execution order and the
schedule as (thread, shared-op count) segments.  ``extract_seeds`` turns
that into a fuzzer seed: values serialize little-endian, and the schedule
bytes are derived by re-driving the instrumented program with a recording
scheduler that emits exactly the bytes the replay scheduler will consume,
then validating that the seed reproduces the same bug kind and location.
"""

from __future__ import annotations

import random
import struct
import time
from dataclasses import dataclass, field
from typing import Optional

from .goto import GotoProgram, Op, UnwindBound
from .interp import (
    BugReport, DEADLOCK, Machine, PropertySet, RUNNABLE, rr_next,
    scheduler_step,
)
from .seeds import NEVER_PREEMPT, SeedInput

DEFAULT_DOMAIN = (-1, 0, 1, 2, 255, 300)
FALLBACK_LOW = 0
FALLBACK_HIGH = 300
_SCHEDULE_PAD = 32
_ENCODE_STEP_CAP = 5_000_000

VIOLATION = "violation"
NO_VIOLATION = "no-violation-within-bound"
EXHAUSTED = "resource-exhausted"


@dataclass(frozen=True)
class BmcConfig:
    unwind: UnwindBound = UnwindBound(20)
    domain: tuple = DEFAULT_DOMAIN
    context_bound: int = 2
    max_states: int = 2_000_000
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not self.domain:
            raise ValueError("nondet domain must be nonempty")
        if self.context_bound < 0:
            raise ValueError("context bound must be >= 0")


@dataclass(frozen=True)
class Counterexample:
    assumption_values: tuple
    schedule: tuple  # ((tid, shared_op_count), ...)
    violation: BugReport
    violating_tid: Optional[int]  # None for deadlocks: no steering needed


@dataclass(frozen=True)
class Verdict:
    status: str
    counterexample: Optional[Counterexample] = None
    reason: str = ""
    states: int = 0
    bound_hit: bool = False

    @property
    def is_violation(self) -> bool:
        return self.status == VIOLATION


class ReplayMismatch(Exception):
    """A counterexample seed failed to reproduce its violation."""


@dataclass
class _Frame:
    machine: Machine
    segments: list
    preempts: int
    pending_value: Optional[int] = None  # nondet value to apply on resume
    pending_count: bool = field(default=False)


def _has_back_edge(p: GotoProgram) -> bool:
    for fc in p.functions.values():
        for i, ins in enumerate(fc.instrs):
            t = ins.jump_target
            if t is not None and t <= i:
                return True
    return False


def _bump(segments: list, tid: int) -> None:
    if segments and segments[-1][0] == tid:
        segments[-1][1] += 1
    else:
        segments.append([tid, 1])


def check(p: GotoProgram, props: PropertySet, cfg: BmcConfig = BmcConfig()) -> Verdict:
    """Search the unwound program for a property violation.

    Returns the first violation in deterministic order, or no-violation
    when the bounded space is exhausted, or resource-exhausted past
    max_states / time_budget.
    """
    if p.instrumented:
        raise ValueError("bounded check runs on the un-instrumented program")
    if _has_back_edge(p):
        raise ValueError("program must be unwound before checking")

    deadline = time.monotonic() + cfg.time_budget if cfg.time_budget else None
    states = 0
    bound_hit = False
    visited: dict = {}

    root = Machine(p, props, values=None, collect_coverage=False)
    stack = [_Frame(root, [], 0)]

    while stack:
        f = stack.pop()
        m = f.machine
        if f.pending_value is not None:
            outcome = m.step(m.current, nondet_value=f.pending_value)
            states += 1
            if outcome != "blocked" and f.pending_count:
                _bump(f.segments, m.current)
            f.pending_value = None

        while True:
            if m.bug is not None:
                cx = Counterexample(tuple(m.nondet_values),
                                    tuple((t, n) for t, n in f.segments),
                                    m.bug,
                                    m.current if m.bug.kind != DEADLOCK else None)
                return Verdict(VIOLATION, cx, states=states, bound_hit=bound_hit)
            if not m.alive:
                if m.unwind_truncated:
                    bound_hit = True
                break
            if states >= cfg.max_states:
                return Verdict(EXHAUSTED, reason="max-states", states=states,
                               bound_hit=bound_hit)
            if deadline is not None and states % 1024 == 0 and time.monotonic() > deadline:
                return Verdict(EXHAUSTED, reason="time-budget", states=states,
                               bound_hit=bound_hit)

            runnable = m.runnable_tids()
            if not runnable:
                m.report_deadlock()
                if m.bug is not None:
                    continue
                break
            if m.threads[m.current].status != RUNNABLE:
                m.current = rr_next(runnable, m.current)

            ins = m.peek(m.current)
            if ins.op is Op.NONDET:
                key = m.state_key()
                seen = visited.get(key)
                if seen is not None and seen <= f.preempts:
                    break
                visited[key] = f.preempts
                for v in reversed(cfg.domain):
                    child = _Frame(m.clone(), [list(s) for s in f.segments],
                                   f.preempts, pending_value=v,
                                   pending_count=bool(ins.shared and ins.origin is not None))
                    stack.append(child)
                break

            can_preempt = (ins.shared and f.preempts < cfg.context_bound
                           and len(runnable) > 1)
            if can_preempt:
                key = m.state_key()
                seen = visited.get(key)
                if seen is not None and seen <= f.preempts:
                    break
                visited[key] = f.preempts
                others = [t for t in runnable if t != m.current]
                for t in reversed(others):
                    child_m = m.clone()
                    child_m.current = t
                    stack.append(_Frame(child_m, [list(s) for s in f.segments],
                                        f.preempts + 1))
                # fall through: continue branch runs in place

            outcome = m.step(m.current)
            states += 1
            if outcome != "blocked" and ins.shared and ins.origin is not None:
                _bump(f.segments, m.current)

    return Verdict(NO_VIOLATION, states=states, bound_hit=bound_hit)


# ---------------------------------------------------------------------------
# Counterexample -> seed
# ---------------------------------------------------------------------------


class _RecordingScheduler:
    """Drives delay points along a segment plan, emitting the bytes that
    make the byte-driven scheduler reproduce the same decisions."""

    def __init__(self, segments: tuple, steer_tid: Optional[int]):
        self.plan = [[t, n] for t, n in segments]
        self.idx = 0
        self.steer_tid = steer_tid
        self.buf = bytearray()

    def _desired(self) -> Optional[int]:
        while self.idx < len(self.plan) and self.plan[self.idx][1] == 0:
            self.idx += 1
        if self.idx < len(self.plan):
            return self.plan[self.idx][0]
        return self.steer_tid

    def on_shared_exec(self, tid: int) -> None:
        while self.idx < len(self.plan) and self.plan[self.idx][1] == 0:
            self.idx += 1
        if self.idx < len(self.plan):
            if self.plan[self.idx][0] != tid:
                raise ReplayMismatch(
                    f"schedule divergence: expected t{self.plan[self.idx][0]}, got t{tid}")
            self.plan[self.idx][1] -= 1

    def decide_delay(self, runnable: list, current: int,
                     delay_min: int, delay_max: int):
        desired = self._desired()
        if desired is None or desired == current or desired not in runnable:
            self.buf.append(NEVER_PREEMPT)
            return current, 0
        self.buf.append(0)
        self.buf.append(runnable.index(desired))
        self.buf.extend(b"\x00\x00")
        return desired, delay_min


def encode_schedule(instrumented: GotoProgram, cx: Counterexample,
                    props: PropertySet) -> tuple:
    """Re-drive the instrumented program along the counterexample schedule.

    Returns (schedule_bytes, observed BugReport).  Raises ReplayMismatch
    if the plan cannot be followed.
    """
    values = b"".join(struct.pack("<i", v) for v in cx.assumption_values)
    rec = _RecordingScheduler(cx.schedule, cx.violating_tid)
    from .seeds import ValueSource
    m = Machine(instrumented, props, values=ValueSource(values),
                collect_coverage=False)
    while m.alive:
        if m.steps >= _ENCODE_STEP_CAP:
            raise ReplayMismatch("schedule encoding exceeded step cap")
        tid = scheduler_step(m, rec)
        if tid < 0:
            break
        ins = m.peek(tid)
        outcome = m.step(tid)
        if outcome != "blocked" and ins.shared and ins.origin is not None:
            rec.on_shared_exec(tid)
    if m.bug is None:
        raise ReplayMismatch("counterexample replay reached no violation")
    return bytes(rec.buf), m.bug


def extract_seeds(cx: Counterexample, instrumented: GotoProgram,
                  props: PropertySet) -> SeedInput:
    """Serialize a counterexample into a seed that reproduces it.

    Value region: assumption values, 4 bytes little-endian each, in
    execution order.  Schedule region: recorded delay-point bytes padded
    with 255 (never-preempt).  The encoding is validated by construction:
    a mismatch between the observed and recorded violation raises.
    """
    schedule, observed = encode_schedule(instrumented, cx, props)
    if (observed.kind, observed.loc) != (cx.violation.kind, cx.violation.loc):
        raise ReplayMismatch(
            f"replay produced {observed.kind}@{observed.loc}, "
            f"expected {cx.violation.kind}@{cx.violation.loc}")
    values = b"".join(struct.pack("<i", v) for v in cx.assumption_values)
    return SeedInput.build(values, schedule + bytes([NEVER_PREEMPT]) * _SCHEDULE_PAD)


def fallback_seeds(count: int, rng_seed: int, *, values_per_seed: int = 8,
                   schedule_len: int = 64) -> list:
    """Random seeds for when the bounded search finds nothing.

    Nondet values are drawn uniformly from [0, 300]; schedule regions are
    uniform random bytes.  Deterministic in rng_seed.
    """
    if count < 1:
        raise ValueError("need at least one seed")
    rng = random.Random(rng_seed)
    seeds = []
    for _ in range(count):
        values = b"".join(
            struct.pack("<i", rng.randint(FALLBACK_LOW, FALLBACK_HIGH))
            for _ in range(values_per_seed))
        schedule = bytes(rng.randrange(256) for _ in range(schedule_len))
        seeds.append(SeedInput.build(values, schedule))
    return seeds


def counterexample_json(cx: Counterexample, path: str = "") -> dict:
    """Wire form: {"values": [...], "schedule": [[tid, steps], ...], "bug": {...}}."""
    return {
        "values": list(cx.assumption_values),
        "schedule": [[t, n] for t, n in cx.schedule],
        "bug": {
            "kind": cx.violation.kind,
            "file": path,
            "line": cx.violation.loc.line,
        },
    }
