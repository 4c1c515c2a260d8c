"""Deterministic interpreter for GOTO programs with online bug detectors.

One Machine owns one execution: thread table, global/heap stores, mutex
ownership, vector clocks, and the detector suite (data races via
happens-before, thread leaks, memory safety, signed overflow, reachability,
deadlock).  Everything is deterministic in (program, input bytes): thread
switching happens only at delay points (driven by schedule bytes) and at
blocking operations (deterministic round-robin), and nondet values come
from the input's value region.

The first bug halts the run; bugs are data (ExecStats.bug), never
exceptions.  A step budget contains runaway executions.

Drivers:

* :func:`run` — the byte-driven execution used by the fuzzer and replay.
* ``Machine.step`` — single-instruction stepping for searches that make
  their own scheduling and nondet choices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .coverage import CoverageMap, edge_index
from .goto import GotoProgram, Instruction, Op
from .lang import Binary, Expr, IndexRef, IntLit, SourceLoc, Unary, VarRef
from .races import Access, AccessHistory, ClockState, RacePair
from .seeds import ScheduleSource, SeedInput, ValueSource

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1
_WRAP = 2**32

DEFAULT_STEP_BUDGET = 1_000_000
MAX_LIVE_THREADS = 64

# Bug kinds
DATA_RACE = "DataRace"
THREAD_LEAK = "ThreadLeak"
ASSERT_VIOLATION = "AssertViolation"
REACH_ERROR = "ReachError"
SIGNED_OVERFLOW = "SignedOverflow"
OUT_OF_BOUNDS = "OutOfBounds"
USE_AFTER_FREE = "UseAfterFree"
DOUBLE_FREE = "DoubleFree"
MEMORY_LEAK = "MemoryLeak"
DEADLOCK = "Deadlock"

ALL_KINDS = (DATA_RACE, THREAD_LEAK, ASSERT_VIOLATION, REACH_ERROR,
             SIGNED_OVERFLOW, OUT_OF_BOUNDS, USE_AFTER_FREE, DOUBLE_FREE,
             MEMORY_LEAK, DEADLOCK)

# Thread status
RUNNABLE = "runnable"
BLOCKED_MUTEX = "blocked-on-mutex"
BLOCKED_JOIN = "blocked-on-join"
FINISHED = "finished"

# ended_by
ENDED_COMPLETION = "completion"
ENDED_STEP_BUDGET = "step-budget"
ENDED_UNWIND = "unwind-truncation"


@dataclass(frozen=True)
class PropertySet:
    """Which detector families are armed.

    unreach_call   -> ReachError, AssertViolation
    valid_memsafety-> OutOfBounds, UseAfterFree, DoubleFree, MemoryLeak
    no_overflow    -> SignedOverflow
    data_races     -> DataRace, ThreadLeak, Deadlock
    """

    unreach_call: bool = True
    valid_memsafety: bool = True
    no_overflow: bool = True
    data_races: bool = True

    def __post_init__(self):
        if not (self.unreach_call or self.valid_memsafety
                or self.no_overflow or self.data_races):
            raise ValueError("property set must be nonempty")

    @staticmethod
    def only(*names: str) -> "PropertySet":
        return PropertySet(
            unreach_call="unreach_call" in names,
            valid_memsafety="valid_memsafety" in names,
            no_overflow="no_overflow" in names,
            data_races="data_races" in names,
        )

    def names(self) -> tuple:
        out = []
        for n in ("unreach_call", "valid_memsafety", "no_overflow", "data_races"):
            if getattr(self, n):
                out.append(n)
        return tuple(out)


@dataclass(frozen=True)
class BugReport:
    kind: str
    loc: SourceLoc
    second_loc: Optional[SourceLoc] = None
    trace: tuple = ()
    input: Optional[SeedInput] = None

    def key(self) -> tuple:
        second = (self.second_loc.line, self.second_loc.column) if self.second_loc else None
        return (self.kind, self.loc.line, self.loc.column, second)


@dataclass(frozen=True)
class ExecStats:
    bug: Optional[BugReport]
    coverage: CoverageMap
    steps: int
    ended_by: str
    final_globals: dict
    delay_draws: tuple = ()
    trace: tuple = ()

    @property
    def ok(self) -> bool:
        return self.bug is None


class _BugSignal(Exception):
    def __init__(self, bug: BugReport):
        self.bug = bug


@dataclass
class ThreadState:
    tid: int
    func: str
    pc: int
    frame: dict
    status: str = RUNNABLE
    blocked_on: object = None  # mutex name or child tid
    vclock_ns: int = 0

    def clone(self) -> "ThreadState":
        return ThreadState(self.tid, self.func, self.pc, dict(self.frame),
                           self.status, self.blocked_on, self.vclock_ns)


@dataclass
class HeapBlock:
    size: int
    cells: list
    freed: bool
    alloc_loc: SourceLoc

    def clone(self) -> "HeapBlock":
        return HeapBlock(self.size, list(self.cells), self.freed, self.alloc_loc)


def wrap32(v: int) -> int:
    return (v + 2**31) % _WRAP - 2**31


class Machine:
    """Mutable execution state plus single-step semantics."""

    def __init__(self, program: GotoProgram, props: PropertySet = PropertySet(),
                 values: Optional[ValueSource] = None, *,
                 collect_coverage: bool = True, record_trace: bool = False):
        self.program = program
        self.props = props
        self.values = values
        self.collect_coverage = collect_coverage
        self.record_trace = record_trace

        self.globals: dict = {name: 0 for name in program.globals_.scalars}
        self.arrays: dict = {name: [0] * size
                             for name, size in program.globals_.arrays.items()}
        self.heap: dict = {}
        self.next_handle = 1
        self.mutex_owner: dict = {name: None for name in program.globals_.mutexes}

        entry = program.func(program.entry)
        self.threads: dict = {0: ThreadState(0, entry.name, 0,
                                             {n: 0 for n in entry.locals_})}
        self.next_tid = 1
        self.created: set = set()
        self.joined: set = set()
        self.creation_loc: dict = {}
        self.current = 0

        self.active_counter = 0
        self.steps = 0
        self.bug: Optional[BugReport] = None
        self.finished = False
        self.truncated = False
        self.unwind_truncated = False

        self.clocks = ClockState()
        self.history = AccessHistory()
        self.coverage: dict = {}
        self._prev_id: dict = {0: 0}
        self._bases = program.origin_bases()

        self.delay_draws: list = []
        self.nondet_values: list = []
        self.trace: list = []
        self._trace_accesses: list = []

    # -- state inspection --

    @property
    def alive(self) -> bool:
        return self.bug is None and not self.finished and not self.truncated

    def peek(self, tid: int) -> Instruction:
        th = self.threads[tid]
        return self.program.func(th.func).instrs[th.pc]

    def runnable_tids(self) -> list:
        return sorted(t for t, th in self.threads.items() if th.status == RUNNABLE)

    def live_count(self) -> int:
        return sum(1 for th in self.threads.values() if th.status != FINISHED)

    def state_key(self) -> tuple:
        """Hashable snapshot for search deduplication.

        Vector clocks and access history are deliberately excluded: they
        grow monotonically and would defeat deduplication; race checking
        stays trace-local in searches.
        """
        threads = tuple(
            (t, th.func, th.pc, th.status, th.blocked_on,
             tuple(sorted(th.frame.items())))
            for t, th in sorted(self.threads.items()))
        heap = tuple((h, b.size, b.freed, tuple(b.cells))
                     for h, b in sorted(self.heap.items()))
        return (
            self.current, threads,
            tuple(sorted(self.globals.items())),
            tuple((n, tuple(v)) for n, v in sorted(self.arrays.items())),
            heap,
            tuple(sorted(self.mutex_owner.items())),
            frozenset(self.created), frozenset(self.joined),
            self.next_handle, self.active_counter,
        )

    def clone(self) -> "Machine":
        m = Machine.__new__(Machine)
        m.program = self.program
        m.props = self.props
        m.values = None  # searches supply nondet values explicitly
        m.collect_coverage = self.collect_coverage
        m.record_trace = self.record_trace
        m.globals = dict(self.globals)
        m.arrays = {n: list(v) for n, v in self.arrays.items()}
        m.heap = {h: b.clone() for h, b in self.heap.items()}
        m.next_handle = self.next_handle
        m.mutex_owner = dict(self.mutex_owner)
        m.threads = {t: th.clone() for t, th in self.threads.items()}
        m.next_tid = self.next_tid
        m.created = set(self.created)
        m.joined = set(self.joined)
        m.creation_loc = dict(self.creation_loc)
        m.current = self.current
        m.active_counter = self.active_counter
        m.steps = self.steps
        m.bug = self.bug
        m.finished = self.finished
        m.truncated = self.truncated
        m.unwind_truncated = self.unwind_truncated
        m.clocks = self.clocks.clone()
        m.history = self.history.clone()
        m.coverage = dict(self.coverage)
        m._prev_id = dict(self._prev_id)
        m._bases = self._bases
        m.delay_draws = list(self.delay_draws)
        m.nondet_values = list(self.nondet_values)
        m.trace = list(self.trace)
        m._trace_accesses = list(self._trace_accesses)
        return m

    # -- detector plumbing --

    def _raise(self, kind: str, loc: SourceLoc, second: Optional[SourceLoc] = None):
        raise _BugSignal(BugReport(kind, loc, second))

    def _access(self, tid: int, addr: tuple, is_write: bool, loc: SourceLoc):
        if self.record_trace:
            self._trace_accesses.append(addr)
        if not self.props.data_races:
            return
        acc = Access(tid, addr, is_write, self.clocks.ensure(tid).copy(), loc)
        pair = self.history.check(acc)
        if pair is not None:
            self._raise(DATA_RACE, pair.second.loc, pair.first.loc)

    def _heap_cell(self, tid: int, handle: int, idx: int, loc: SourceLoc,
                   write: bool) -> Optional[HeapBlock]:
        block = self.heap.get(handle)
        if block is None:
            if self.props.valid_memsafety:
                self._raise(OUT_OF_BOUNDS, loc)
            return None
        if block.freed:
            if self.props.valid_memsafety:
                self._raise(USE_AFTER_FREE, loc)
            return None
        if not (0 <= idx < block.size):
            if self.props.valid_memsafety:
                self._raise(OUT_OF_BOUNDS, loc)
            return None
        self._access(tid, ("h", handle, idx), write, loc)
        return block

    # -- arithmetic --

    def _arith(self, value: int, loc: SourceLoc) -> int:
        if value < INT_MIN or value > INT_MAX:
            if self.props.no_overflow:
                self._raise(SIGNED_OVERFLOW, loc)
            return wrap32(value)
        return value

    # -- expression evaluation (left to right, hooks on shared accesses) --

    def eval(self, e: Expr, tid: int, loc: SourceLoc) -> int:
        th = self.threads[tid]
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, VarRef):
            if e.name in th.frame:
                return th.frame[e.name]
            self._access(tid, ("g", e.name), False, loc)
            return self.globals[e.name]
        if isinstance(e, IndexRef):
            idx = self.eval(e.index, tid, loc)
            if e.name in self.arrays:
                arr = self.arrays[e.name]
                if not (0 <= idx < len(arr)):
                    if self.props.valid_memsafety:
                        self._raise(OUT_OF_BOUNDS, loc)
                    return 0
                self._access(tid, ("a", e.name, idx), False, loc)
                return arr[idx]
            # heap access through a handle-valued variable
            if e.name in th.frame:
                handle = th.frame[e.name]
            else:
                self._access(tid, ("g", e.name), False, loc)
                handle = self.globals[e.name]
            block = self._heap_cell(tid, handle, idx, loc, write=False)
            return block.cells[idx] if block is not None else 0
        if isinstance(e, Unary):
            if e.op == "!":
                return 0 if self.eval(e.operand, tid, loc) else 1
            return self._arith(-self.eval(e.operand, tid, loc), loc)
        if isinstance(e, Binary):
            op = e.op
            if op == "&&":
                if not self.eval(e.lhs, tid, loc):
                    return 0
                return 1 if self.eval(e.rhs, tid, loc) else 0
            if op == "||":
                if self.eval(e.lhs, tid, loc):
                    return 1
                return 1 if self.eval(e.rhs, tid, loc) else 0
            a = self.eval(e.lhs, tid, loc)
            b = self.eval(e.rhs, tid, loc)
            if op == "+":
                return self._arith(a + b, loc)
            if op == "-":
                return self._arith(a - b, loc)
            if op == "*":
                return self._arith(a * b, loc)
            if op == "/":
                if b == 0:
                    return 0  # total semantics: x/0 == 0
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
                return self._arith(q, loc)
            if op == "%":
                if b == 0:
                    return 0
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
                return a - q * b  # |r| < |b|, never overflows
            if op == "==":
                return 1 if a == b else 0
            if op == "!=":
                return 1 if a != b else 0
            if op == "<":
                return 1 if a < b else 0
            if op == "<=":
                return 1 if a <= b else 0
            if op == ">":
                return 1 if a > b else 0
            if op == ">=":
                return 1 if a >= b else 0
        raise TypeError(f"cannot evaluate {e!r}")

    def _write_var(self, tid: int, name: str, value: int, loc: SourceLoc):
        th = self.threads[tid]
        if name in th.frame:
            th.frame[name] = value
        else:
            self._access(tid, ("g", name), True, loc)
            self.globals[name] = value

    # -- stepping --

    def step(self, tid: int, nondet_value: Optional[int] = None) -> str:
        """Execute one instruction of `tid`.

        Returns 'ok', 'blocked' (pc unchanged, thread now waiting), or
        'ended' (run over: bug, truncation, or main returned).
        """
        th = self.threads[tid]
        assert th.status == RUNNABLE, f"stepping non-runnable thread {tid}"
        fc = self.program.func(th.func)
        pc = th.pc
        ins = fc.instrs[pc]
        self.steps += 1

        if self.props.data_races:
            self.clocks.tick(tid)

        if self.collect_coverage and ins.origin is not None:
            cur_id = self._bases[th.func] + ins.origin + 1
            edge = edge_index(self._prev_id.get(tid, 0), cur_id)
            c = self.coverage.get(edge, 0)
            if c < 255:
                self.coverage[edge] = c + 1
            self._prev_id[tid] = cur_id

        if self.record_trace:
            self._trace_accesses = []

        try:
            outcome = self._dispatch(tid, th, ins, nondet_value)
        except _BugSignal as sig:
            trace = ()
            if self.record_trace:
                self.trace.append((tid, pc, ins, tuple(self._trace_accesses),
                                   repr(self.clocks.ensure(tid))))
                trace = tuple(self.trace)
            self.bug = replace(sig.bug, trace=trace)
            return "ended"

        if self.record_trace:
            self.trace.append((tid, pc, ins, tuple(self._trace_accesses),
                               repr(self.clocks.ensure(tid)) if self.props.data_races else ""))

        if outcome == "ok":
            return "ended" if not self.alive else "ok"
        return outcome

    def _dispatch(self, tid: int, th: ThreadState, ins: Instruction,
                  nondet_value: Optional[int]) -> str:
        op = ins.op
        a = ins.args

        if op is Op.ASSIGN:
            target, expr = a
            if target[0] == "var":
                value = self.eval(expr, tid, ins.loc)
                self._write_var(tid, target[1], value, ins.loc)
            else:
                _, name, index_expr = target
                idx = self.eval(index_expr, tid, ins.loc)
                value = self.eval(expr, tid, ins.loc)
                if name in self.arrays:
                    arr = self.arrays[name]
                    if not (0 <= idx < len(arr)):
                        if self.props.valid_memsafety:
                            self._raise(OUT_OF_BOUNDS, ins.loc)
                    else:
                        self._access(tid, ("a", name, idx), True, ins.loc)
                        arr[idx] = value
                else:
                    if name in th.frame:
                        handle = th.frame[name]
                    else:
                        self._access(tid, ("g", name), False, ins.loc)
                        handle = self.globals[name]
                    block = self._heap_cell(tid, handle, idx, ins.loc, write=True)
                    if block is not None:
                        block.cells[idx] = value
            th.pc += 1
        elif op is Op.COND_GOTO:
            if self.eval(a[0], tid, ins.loc):
                th.pc = a[1]
            else:
                th.pc += 1
        elif op is Op.GOTO:
            th.pc = a[0]
        elif op is Op.ASSERT:
            if not self.eval(a[0], tid, ins.loc) and self.props.unreach_call:
                self._raise(ASSERT_VIOLATION, ins.loc)
            th.pc += 1
        elif op is Op.ASSUME:
            if not self.eval(a[0], tid, ins.loc):
                self.truncated = True
                return "ended"
            th.pc += 1
        elif op is Op.UNWIND_ASSUME:
            if not self.eval(a[0], tid, ins.loc):
                self.truncated = True
                self.unwind_truncated = True
                return "ended"
            th.pc += 1
        elif op is Op.LOCK:
            name = a[0]
            owner = self.mutex_owner[name]
            if owner is None:
                self.mutex_owner[name] = tid
                if self.props.data_races:
                    self.clocks.on_lock(tid, name)
                th.status = RUNNABLE
                th.blocked_on = None
                th.pc += 1
            else:
                th.status = BLOCKED_MUTEX
                th.blocked_on = name
                return "blocked"
        elif op is Op.UNLOCK:
            name = a[0]
            if self.mutex_owner[name] == tid:
                self.mutex_owner[name] = None
                if self.props.data_races:
                    self.clocks.on_unlock(tid, name)
                for other in self.threads.values():
                    if other.status == BLOCKED_MUTEX and other.blocked_on == name:
                        other.status = RUNNABLE
                        other.blocked_on = None
            # unlocking a mutex you do not hold is a no-op
            th.pc += 1
        elif op is Op.TCREATE:
            target, func_name, arg_expr = a
            arg = self.eval(arg_expr, tid, ins.loc) if arg_expr is not None else None
            if self.live_count() >= MAX_LIVE_THREADS:
                self.truncated = True  # thread cap: silent truncation
                return "ended"
            child = self.next_tid
            self.next_tid += 1
            entry = self.program.func(func_name)
            frame = {n: 0 for n in entry.locals_}
            if entry.param is not None and arg is not None:
                frame[entry.param] = arg
            self.threads[child] = ThreadState(child, func_name, 0, frame)
            self.created.add(child)
            self.creation_loc[child] = ins.loc
            if self.props.data_races:
                self.clocks.on_create(tid, child)
            self._write_var(tid, target, child, ins.loc)
            th.pc += 1
        elif op is Op.TJOIN:
            name = a[0]
            if name in th.frame:
                target = th.frame[name]
            else:
                self._access(tid, ("g", name), False, ins.loc)
                target = self.globals[name]
            child = self.threads.get(target)
            if target in self.created and child is not None and child.status != FINISHED:
                th.status = BLOCKED_JOIN
                th.blocked_on = target
                return "blocked"
            if target in self.created:
                if self.props.data_races:
                    self.clocks.on_join(tid, target)
                self.joined.add(target)
            th.pc += 1  # joining an unknown id is a no-op
        elif op is Op.NONDET:
            if nondet_value is not None:
                value = nondet_value
            elif self.values is not None:
                value = self.values.next_value()
            else:
                raise RuntimeError("NONDET without a value source")
            self.nondet_values.append(value)
            self._write_var(tid, a[0], value, ins.loc)
            th.pc += 1
        elif op is Op.ALLOC:
            size = self.eval(a[1], tid, ins.loc)
            size = max(0, size)
            handle = self.next_handle
            self.next_handle += 1
            self.heap[handle] = HeapBlock(size, [0] * size, False, ins.loc)
            self._write_var(tid, a[0], handle, ins.loc)
            th.pc += 1
        elif op is Op.FREE:
            name = a[0]
            if name in th.frame:
                handle = th.frame[name]
            else:
                self._access(tid, ("g", name), False, ins.loc)
                handle = self.globals[name]
            block = self.heap.get(handle)
            if block is not None:
                if block.freed:
                    if self.props.valid_memsafety:
                        self._raise(DOUBLE_FREE, ins.loc)
                else:
                    block.freed = True
            th.pc += 1
        elif op is Op.REACH_ERROR:
            if self.props.unreach_call:
                self._raise(REACH_ERROR, ins.loc)
            th.pc += 1
        elif op is Op.RETURN:
            if tid == 0:
                self._main_exit_checks(ins.loc)
                self.finished = True
                th.status = FINISHED
                return "ended"
            th.status = FINISHED
            if self.props.data_races:
                self.clocks.on_finish(tid)
            for other in self.threads.values():
                if other.status == BLOCKED_JOIN and other.blocked_on == tid:
                    other.status = RUNNABLE
                    other.blocked_on = None
        elif op is Op.DELAY_POINT:
            th.pc += 1  # scheduling effect applied by the driver
        elif op is Op.THREAD_ADD:
            self.active_counter += 1
            th.pc += 1
        elif op is Op.THREAD_RELEASE:
            if self.active_counter > 0:
                self.active_counter -= 1
            th.pc += 1
        else:
            raise RuntimeError(f"unknown op {op}")
        return "ok"

    def _main_exit_checks(self, loc: SourceLoc):
        if self.props.data_races:
            leaked = sorted(self.created - self.joined)
            if leaked:
                self._raise(THREAD_LEAK, self.creation_loc[leaked[0]])
        if self.props.valid_memsafety:
            for handle in sorted(self.heap):
                if not self.heap[handle].freed:
                    self._raise(MEMORY_LEAK, self.heap[handle].alloc_loc)

    def report_deadlock(self):
        """All non-finished threads are blocked; produce the Deadlock bug."""
        blocked = [th for th in self.threads.values()
                   if th.status in (BLOCKED_MUTEX, BLOCKED_JOIN)]
        if not self.props.data_races:
            self.truncated = True
            return
        mutex_blocked = [th for th in blocked if th.status == BLOCKED_MUTEX]
        pick = min(mutex_blocked or blocked, key=lambda th: th.tid)
        loc = self.program.func(pick.func).instrs[pick.pc].loc
        trace = tuple(self.trace) if self.record_trace else ()
        self.bug = BugReport(DEADLOCK, loc, trace=trace)


# ---------------------------------------------------------------------------
# Scheduling
# ---------------------------------------------------------------------------


def rr_next(runnable: list, current: int) -> int:
    """Round-robin: first runnable tid after `current`, wrapping."""
    for t in runnable:
        if t > current:
            return t
    return runnable[0]


def scheduler_step(m: Machine, sched: ScheduleSource) -> int:
    """Pick the thread whose next instruction runs, per the schedule bytes.

    Executes any delay points of the current thread in passing: with the
    active-thread counter above zero each one consumes schedule bytes and
    may preempt (charging a virtual delay draw to the yielding thread);
    with the counter at zero it is free.  Blocking switches are byte-free
    round-robin.  Returns -1 when nothing can run (deadlock reported) or
    the run ended while draining delay points.
    """
    while True:
        runnable = m.runnable_tids()
        if not runnable:
            m.report_deadlock()
            return -1
        cur = m.current
        if m.threads[cur].status != RUNNABLE:
            cur = rr_next(runnable, cur)
            m.current = cur
        ins = m.peek(cur)
        if ins.op is not Op.DELAY_POINT:
            return cur
        if m.active_counter > 0:
            target, delay = sched.decide_delay(runnable, cur, ins.args[0], ins.args[1])
            if delay:
                m.threads[cur].vclock_ns += delay
                m.delay_draws.append(delay)
            m.step(cur)
            m.current = target
        else:
            m.step(cur)
        if not m.alive:
            return -1


def run(program: GotoProgram, seed: SeedInput, budget: int = DEFAULT_STEP_BUDGET,
        props: PropertySet = PropertySet(), *, record_trace: bool = False,
        collect_coverage: bool = True) -> ExecStats:
    """Execute `program` on `seed`, fully deterministically.

    Nondet reads consume the value region in execution order; delay points
    consume the schedule region per :func:`scheduler_step`.  Detectors run
    online; the first bug stops execution.  Exceeding the step budget ends
    the run without a bug.
    """
    m = Machine(program, props, ValueSource(seed.value_region),
                collect_coverage=collect_coverage, record_trace=record_trace)
    sched = ScheduleSource(seed.schedule_region)
    ended_by = ENDED_COMPLETION
    while m.alive:
        if m.steps >= budget:
            ended_by = ENDED_STEP_BUDGET
            break
        tid = scheduler_step(m, sched)
        if tid < 0:
            break
        m.step(tid)
    if m.unwind_truncated:
        ended_by = ENDED_UNWIND
    bug = m.bug
    if bug is not None:
        bug = replace(bug, input=seed)
    return ExecStats(
        bug=bug,
        coverage=CoverageMap(m.coverage),
        steps=m.steps,
        ended_by=ended_by,
        final_globals=dict(m.globals),
        delay_draws=tuple(m.delay_draws),
        trace=tuple(m.trace),
    )


# ---------------------------------------------------------------------------
# Trace rendering
# ---------------------------------------------------------------------------


def _addr_str(addr: tuple) -> str:
    if addr[0] == "g":
        return f"g:{addr[1]}"
    if addr[0] == "a":
        return f"a:{addr[1]}[{addr[2]}]"
    return f"h:{addr[1]}[{addr[2]}]"


def format_trace(trace: tuple, path: str = "<input>") -> str:
    """One event per line: ``t<thread>@<pc> KIND file:line [addr=..] [vc=..]``."""
    lines = []
    for tid, pc, ins, accesses, vc in trace:
        parts = [f"t{tid}@{pc}", ins.op.name, f"{path}:{ins.loc.line}"]
        for addr in accesses:
            parts.append(f"addr={_addr_str(addr)}")
        if vc:
            parts.append(f"vc={vc}")
        lines.append(" ".join(parts))
    return "\n".join(lines)
