"""Delay-point injection: make thread interleaving a fuzzable input.

``inject`` puts a DELAY_POINT after every original instruction (except the
final RETURN, which ends the function anyway), a THREAD_ADD immediately
after every TCREATE, and a THREAD_RELEASE immediately after every TJOIN.
The add/release pair maintains the runtime active-thread counter; delay
points only consume schedule bytes (and may preempt) while that counter is
positive, so single-threaded stretches run undisturbed.

Delays are virtual: a preempting delay point charges nanoseconds to the
yielding thread's logical clock instead of sleeping, which keeps runs
deterministic and replayable while still perturbing the schedule.

``strip`` removes all injected instructions and restores the exact
pre-injection program.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .goto import AlreadyInstrumented, FuncCode, GotoProgram, Instruction, Op


@dataclass(frozen=True)
class InstrumentationConfig:
    delay_min_ns: int = 1
    delay_max_ns: int = 100_000
    enabled: bool = True

    def __post_init__(self):
        if not (1 <= self.delay_min_ns <= self.delay_max_ns):
            raise ValueError("need 1 <= delay_min_ns <= delay_max_ns")


def _inject_function(fc: FuncCode, cfg: InstrumentationConfig) -> FuncCode:
    new: list[Instruction] = []
    new_index: dict[int, int] = {}
    last = len(fc.instrs) - 1
    for i, ins in enumerate(fc.instrs):
        new_index[i] = len(new)
        new.append(ins)
        if ins.op is Op.TCREATE:
            new.append(Instruction(Op.THREAD_ADD, (), ins.loc, origin=None))
        elif ins.op is Op.TJOIN:
            new.append(Instruction(Op.THREAD_RELEASE, (), ins.loc, origin=None))
        if i != last:
            new.append(Instruction(Op.DELAY_POINT,
                                   (cfg.delay_min_ns, cfg.delay_max_ns),
                                   ins.loc, origin=None))
    out = []
    for ins in new:
        t = ins.jump_target
        if t is not None:
            ins = ins.with_target(new_index[t])
        out.append(ins)
    return FuncCode(fc.name, fc.param, fc.locals_, tuple(out))


def inject(p: GotoProgram, cfg: InstrumentationConfig = InstrumentationConfig()) -> GotoProgram:
    """Insert delay points and thread-counter bookkeeping; re-index jumps."""
    if p.instrumented:
        raise AlreadyInstrumented("program already carries delay points")
    functions = {name: _inject_function(fc, cfg) for name, fc in p.functions.items()}
    return GotoProgram(functions, p.globals_, p.entry, dict(p.orig_len))


def _strip_function(fc: FuncCode) -> FuncCode:
    kept: list[Instruction] = []
    new_index: dict[int, int] = {}
    for i, ins in enumerate(fc.instrs):
        if ins.op in (Op.DELAY_POINT, Op.THREAD_ADD, Op.THREAD_RELEASE):
            continue
        new_index[i] = len(kept)
        kept.append(ins)
    out = []
    for ins in kept:
        t = ins.jump_target
        if t is not None:
            ins = ins.with_target(new_index[t])
        out.append(ins)
    return FuncCode(fc.name, fc.param, fc.locals_, tuple(out))


def strip(p: GotoProgram) -> GotoProgram:
    """Remove all injected instructions; inverse of :func:`inject`."""
    functions = {name: _strip_function(fc) for name, fc in p.functions.items()}
    return GotoProgram(functions, p.globals_, p.entry, dict(p.orig_len))
