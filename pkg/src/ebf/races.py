"""Happens-before data-race detection over vector clocks.

The interpreter feeds every shared-memory access through an
:class:`AccessHistory`, which keeps the latest read and write epoch per
(address, thread) and flags the first pair of conflicting accesses (same
address, at least one write, different threads) that are unordered under
happens-before.  The HB order is generated by:

* program order within a thread,
* thread create -> first instruction of the child,
* last instruction of the child -> the join that collects it,
* unlock -> every subsequent lock of the same mutex.

Clock discipline: a thread ticks its own component once per executed
instruction, so every event has a distinct epoch; create, finish, and
unlock snapshot the current clock into the receiving edge's carrier.

``race_check`` replays a standalone access log through the same epoch
comparison, for traces produced outside the interpreter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class VectorClock:
    """Per-thread logical counters, grow-on-demand list indexed by tid."""

    __slots__ = ("c",)

    def __init__(self, c: list[int] | None = None):
        self.c = c if c is not None else []

    def get(self, tid: int) -> int:
        return self.c[tid] if tid < len(self.c) else 0

    def tick(self, tid: int) -> None:
        self._grow(tid)
        self.c[tid] += 1

    def absorb(self, other: "VectorClock") -> None:
        self._grow(len(other.c) - 1)
        for i, v in enumerate(other.c):
            if v > self.c[i]:
                self.c[i] = v

    def _grow(self, tid: int) -> None:
        if tid >= len(self.c):
            self.c.extend([0] * (tid + 1 - len(self.c)))

    def copy(self) -> "VectorClock":
        return VectorClock(list(self.c))

    def leq(self, other: "VectorClock") -> bool:
        return all(v <= other.get(i) for i, v in enumerate(self.c))

    def __repr__(self) -> str:
        return "[" + ",".join(map(str, self.c)) + "]"


@dataclass(frozen=True)
class Access:
    """One shared access with the clock the thread held when making it."""

    tid: int
    addr: tuple
    is_write: bool
    clock: VectorClock
    loc: object = None
    index: int = -1


class ClockState:
    """Vector clocks for threads, mutexes, and finished children."""

    def __init__(self):
        self.threads: dict[int, VectorClock] = {}
        self.mutex_release: dict[object, VectorClock] = {}
        self.final: dict[int, VectorClock] = {}

    def ensure(self, tid: int) -> VectorClock:
        vc = self.threads.get(tid)
        if vc is None:
            vc = VectorClock()
            self.threads[tid] = vc
        return vc

    def tick(self, tid: int) -> None:
        self.ensure(tid).tick(tid)

    def on_create(self, parent: int, child: int) -> None:
        child_vc = self.ensure(child)
        child_vc.absorb(self.ensure(parent))
        self.ensure(parent).tick(parent)

    def on_finish(self, tid: int) -> None:
        self.final[tid] = self.ensure(tid).copy()

    def on_join(self, tid: int, child: int) -> None:
        final = self.final.get(child)
        if final is not None:
            self.ensure(tid).absorb(final)

    def on_unlock(self, tid: int, mutex) -> None:
        rel = self.mutex_release.get(mutex)
        vc = self.ensure(tid)
        if rel is None:
            self.mutex_release[mutex] = vc.copy()
        else:
            rel.absorb(vc)
        vc.tick(tid)

    def on_lock(self, tid: int, mutex) -> None:
        rel = self.mutex_release.get(mutex)
        if rel is not None:
            self.ensure(tid).absorb(rel)

    def clone(self) -> "ClockState":
        c = ClockState.__new__(ClockState)
        c.threads = {t: vc.copy() for t, vc in self.threads.items()}
        c.mutex_release = {m: vc.copy() for m, vc in self.mutex_release.items()}
        c.final = {t: vc.copy() for t, vc in self.final.items()}
        return c


@dataclass(frozen=True)
class RacePair:
    first: Access
    second: Access


class AccessHistory:
    """Latest read/write epoch per (address, thread), with locations.

    An older access by the same thread is covered by the newest one: if
    the newest is ordered before the current access, every older one is
    too (epochs only grow along a thread).
    """

    def __init__(self):
        # addr -> tid -> (epoch, Access) for writes and reads separately
        self.writes: dict[tuple, dict[int, Access]] = {}
        self.reads: dict[tuple, dict[int, Access]] = {}

    def check(self, acc: Access) -> Optional[RacePair]:
        """Record an access; return the race it completes, if any.

        Scan order is deterministic: stored writes first, then reads
        (reads only when the new access is a write), thread ids ascending.
        """
        writes = self.writes.get(acc.addr)
        if writes:
            for tid in sorted(writes):
                if tid == acc.tid:
                    continue
                prior = writes[tid]
                if prior.clock.get(tid) > acc.clock.get(tid):
                    return RacePair(prior, acc)
        if acc.is_write:
            reads = self.reads.get(acc.addr)
            if reads:
                for tid in sorted(reads):
                    if tid == acc.tid:
                        continue
                    prior = reads[tid]
                    if prior.clock.get(tid) > acc.clock.get(tid):
                        return RacePair(prior, acc)
        table = self.writes if acc.is_write else self.reads
        table.setdefault(acc.addr, {})[acc.tid] = acc
        return None

    def clone(self) -> "AccessHistory":
        c = AccessHistory.__new__(AccessHistory)
        c.writes = {a: dict(m) for a, m in self.writes.items()}
        c.reads = {a: dict(m) for a, m in self.reads.items()}
        return c


def race_check(events: list[Access]) -> Optional[tuple]:
    """First racing pair in an access log, as (first.loc, second.loc).

    Events must arrive in trace order and carry the vector clock the
    thread held at the access.
    """
    history = AccessHistory()
    for acc in events:
        pair = history.check(acc)
        if pair is not None:
            return pair.first.loc, pair.second.loc
    return None
