"""Grey-box fuzzing over the instrumented program.

Seeds are byte vectors carrying both nondet values and schedule entropy
(see :mod:`ebf.seeds`), so coverage feedback steers the search through
input space *and* interleaving space at once.  The loop is the classic
one: select a seed (round-robin, novelty-flagged seeds visited twice per
cycle), give it an energy budget, mutate (a systematic deterministic walk
on the seed's first pass, stacked havoc afterwards), run, keep mutants
that crash (crash set) or reach a new coverage bucket (queue).

Everything is deterministic for a fixed (program, corpus, max-execs
budget, rng seed): one RNG drives all randomness and is consumed in a
fixed order.  Wall-clock budgets are for production use; tests pin
execution counts.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .coverage import CoverageMap, NoveltyTracker
from .goto import GotoProgram
from .interp import (DEFAULT_STEP_BUDGET, ENDED_STEP_BUDGET, BugReport,
                     ExecStats, PropertySet, run)
from .seeds import HEADER_LEN, MIN_LEN, SeedInput

BASE_ENERGY = 64
MAX_ENERGY = 1024
MIN_ENERGY = 1

ARITH_MAX = 35
INTERESTING_BYTES = (0x00, 0x01, 0xFF, 0x7F, 0x80)  # 0, 1, -1, 127, 128/255
INTERESTING_WORDS = (0, 300, 2**15 - 1, 2**31 - 1, -(2**31))
MAX_SEED_LEN = 4096
HAVOC_STACK_MAX = 16


# ---------------------------------------------------------------------------
# Mutators
# ---------------------------------------------------------------------------


def _rebuild(seed: SeedInput, payload: bytearray) -> SeedInput:
    return SeedInput.repair(seed.data[:HEADER_LEN] + bytes(payload))


def deterministic_stage(seed: SeedInput) -> Iterator[SeedInput]:
    """Systematic positional mutations of the payload (header untouched).

    Emission order: 1/2/4-bit flips at every bit offset (most-significant
    bit of each byte first, walking down and then rightwards), byte flips,
    per-byte arithmetic +/-delta for delta in [1, 35], interesting-byte
    substitutions, then interesting 4-byte words at aligned offsets of the
    value region.
    """
    payload = bytearray(seed.data[HEADER_LEN:])
    n = len(payload)
    nbits = 8 * n

    def flip(i: int, buf: bytearray) -> None:
        buf[i // 8] ^= 1 << (7 - (i % 8))

    for width in (1, 2, 4):
        for start in range(nbits - width + 1):
            buf = bytearray(payload)
            for i in range(start, start + width):
                flip(i, buf)
            yield _rebuild(seed, buf)

    for i in range(n):
        buf = bytearray(payload)
        buf[i] ^= 0xFF
        yield _rebuild(seed, buf)

    for i in range(n):
        for delta in range(1, ARITH_MAX + 1):
            for signed in (delta, -delta):
                buf = bytearray(payload)
                buf[i] = (buf[i] + signed) & 0xFF
                yield _rebuild(seed, buf)

    for i in range(n):
        for v in INTERESTING_BYTES:
            buf = bytearray(payload)
            buf[i] = v
            yield _rebuild(seed, buf)

    vlen = seed.value_region_len
    for off in range(0, vlen - 3, 4):
        for w in INTERESTING_WORDS:
            buf = bytearray(payload)
            buf[off:off + 4] = struct.pack("<i", w)
            yield _rebuild(seed, buf)


def havoc_stage(seed: SeedInput, rng: random.Random) -> SeedInput:
    """One stacked-random mutant: 1-16 operations drawn with replacement.

    Deletions never shrink the input below 5 bytes; the length header is
    re-clamped afterwards so the result is always a valid seed.
    """
    payload = bytearray(seed.data[HEADER_LEN:])
    for _ in range(rng.randint(1, HAVOC_STACK_MAX)):
        op = rng.randrange(7)
        n = len(payload)
        if op == 0:  # bit flip
            i = rng.randrange(8 * n)
            payload[i // 8] ^= 1 << (7 - (i % 8))
        elif op == 1:  # random byte set
            payload[rng.randrange(n)] = rng.randrange(256)
        elif op == 2:  # arithmetic
            i = rng.randrange(n)
            delta = rng.randint(1, ARITH_MAX)
            if rng.random() < 0.5:
                delta = -delta
            payload[i] = (payload[i] + delta) & 0xFF
        elif op == 3:  # interesting byte
            payload[rng.randrange(n)] = rng.choice(INTERESTING_BYTES)
        elif op == 4:  # subsequence delete
            if n > 1:
                max_del = n - 1
                length = rng.randint(1, max_del)
                start = rng.randrange(n - length + 1)
                del payload[start:start + length]
        elif op == 5:  # subsequence duplicate
            if 0 < n and HEADER_LEN + 2 * n <= MAX_SEED_LEN:
                length = rng.randint(1, n)
                start = rng.randrange(n - length + 1)
                at = rng.randrange(n + 1)
                payload[at:at] = payload[start:start + length]
        else:  # 4-byte word overwrite
            if n >= 4:
                off = rng.randrange(n - 3)
                payload[off:off + 4] = struct.pack("<i", rng.choice(INTERESTING_WORDS))
    if len(payload) < MIN_LEN - HEADER_LEN:
        payload.extend(bytes(MIN_LEN - HEADER_LEN - len(payload)))
    return _rebuild(seed, payload)


# ---------------------------------------------------------------------------
# Queue, crash set, energy
# ---------------------------------------------------------------------------


@dataclass
class QueueEntry:
    seed: SeedInput
    novel: bool          # found a new coverage bucket when first queued
    steps: int           # execution cost of its own run
    det_iter: Optional[Iterator] = None
    det_done: bool = False


class SeedQueue:
    def __init__(self):
        self.entries: list[QueueEntry] = []

    def add(self, entry: QueueEntry) -> None:
        self.entries.append(entry)

    def median_steps(self) -> int:
        if not self.entries:
            return 0
        costs = sorted(e.steps for e in self.entries)
        return costs[len(costs) // 2]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CrashEntry:
    bug: BugReport
    seed: SeedInput
    cov_digest: str

    def key(self) -> tuple:
        return (self.bug.kind, self.bug.loc.line, self.bug.loc.column,
                self.cov_digest)


class CrashSet:
    """Unique findings keyed by (kind, location, coverage digest)."""

    def __init__(self):
        self.entries: dict[tuple, CrashEntry] = {}

    def add(self, bug: BugReport, seed: SeedInput, cov: CoverageMap) -> bool:
        entry = CrashEntry(bug, seed, cov.digest())
        k = entry.key()
        if k in self.entries:
            return False
        self.entries[k] = entry
        return True

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())


def mutation_budget(novel: bool, steps: int, median_steps: int) -> int:
    """Energy for one seed visit: 64, x4 for novelty, x2 for fast seeds."""
    energy = BASE_ENERGY
    if novel:
        energy *= 4
    if steps < median_steps:
        energy *= 2
    return max(MIN_ENERGY, min(MAX_ENERGY, energy))


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FuzzBudget:
    max_execs: Optional[int] = None
    seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_execs is None and self.seconds is None:
            raise ValueError("budget needs max_execs or seconds")


@dataclass
class FuzzStats:
    execs: int = 0
    timeouts: int = 0
    unique_crashes: int = 0
    coverage_edges: int = 0
    last_novel_exec: int = 0
    cycles: int = 0


class Fuzzer:
    def __init__(self, program: GotoProgram, props: PropertySet,
                 rng_seed: int, step_budget: int = DEFAULT_STEP_BUDGET):
        self.program = program
        self.props = props
        self.rng = random.Random(rng_seed)
        self.step_budget = step_budget
        self.queue = SeedQueue()
        self.crashes = CrashSet()
        self.global_cov = CoverageMap()
        self.novelty = NoveltyTracker()
        self.stats = FuzzStats()

    def _execute(self, seed: SeedInput) -> ExecStats:
        st = run(self.program, seed, budget=self.step_budget, props=self.props)
        self.stats.execs += 1
        if st.ended_by == ENDED_STEP_BUDGET:
            self.stats.timeouts += 1
        self.global_cov.merge_max(st.coverage)
        return st

    def _observe(self, seed: SeedInput, st: ExecStats, *, queue_anyway: bool) -> None:
        novel = self.novelty.observe(st.coverage)
        if novel:
            self.stats.last_novel_exec = self.stats.execs
        if st.bug is not None:
            self.crashes.add(st.bug, seed, st.coverage)
            if not queue_anyway:
                return
        if novel or queue_anyway:
            self.queue.add(QueueEntry(seed, novel, st.steps))

    def add_corpus(self, corpus: list) -> None:
        """Dry-run every starting seed; all of them join the queue."""
        for seed in corpus:
            st = self._execute(seed)
            self._observe(seed, st, queue_anyway=True)

    def _mutants(self, entry: QueueEntry, energy: int) -> Iterator[SeedInput]:
        produced = 0
        if not entry.det_done:
            if entry.det_iter is None:
                entry.det_iter = deterministic_stage(entry.seed)
            while produced < energy:
                m = next(entry.det_iter, None)
                if m is None:
                    entry.det_done = True
                    entry.det_iter = None
                    break
                produced += 1
                yield m
        while produced < energy:
            produced += 1
            yield havoc_stage(entry.seed, self.rng)

    def loop(self, budget: FuzzBudget) -> None:
        import time as _time
        deadline = (_time.monotonic() + budget.seconds
                    if budget.seconds is not None else None)

        def over() -> bool:
            if budget.max_execs is not None and self.stats.execs >= budget.max_execs:
                return True
            return deadline is not None and _time.monotonic() > deadline

        while not over():
            # One cycle: novelty-flagged seeds first, then everyone.
            order = ([e for e in self.queue.entries if e.novel]
                     + list(self.queue.entries))
            self.stats.cycles += 1
            for entry in order:
                if over():
                    return
                energy = mutation_budget(entry.novel, entry.steps,
                                         self.queue.median_steps())
                for mutant in self._mutants(entry, energy):
                    if over():
                        return
                    st = self._execute(mutant)
                    self._observe(mutant, st, queue_anyway=False)


def fuzz_loop(program: GotoProgram, corpus: list, budget: FuzzBudget,
              rng_seed: int, props: PropertySet = PropertySet(),
              step_budget: int = DEFAULT_STEP_BUDGET) -> tuple:
    """Fuzz `program` from `corpus`; returns (SeedQueue, CrashSet, FuzzStats)."""
    if not corpus:
        raise ValueError("corpus must be nonempty")
    f = Fuzzer(program, props, rng_seed, step_budget)
    f.add_corpus(corpus)
    f.loop(budget)
    f.stats.unique_crashes = len(f.crashes)
    f.stats.coverage_edges = f.global_cov.edge_count()
    return f.queue, f.crashes, f.stats
