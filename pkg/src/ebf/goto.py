"""Lowering of MCL to a flat GOTO instruction form, plus loop unwinding.

Structured control flow becomes ``COND_GOTO``/``GOTO`` over per-function
instruction lists.  Each instruction remembers the source location it came
from and, via ``origin``, its index in the freshly lowered function, which
stays stable across unwinding and instrumentation so that coverage and
schedule replay can identify "the same instruction" in transformed
programs.

Evaluation order is MCL's: left to right, with at most one shared-memory
access per operand position of an assignment, and one instruction is the
atomic unit of interleaving.

``unwind`` replaces every loop with ``k`` guarded copies of its body
followed by a truncating assumption on the negated guard: executions that
would need more than ``k`` iterations stop silently rather than failing,
and the caller learns about the cut through the interpreter's
bound-hit flag.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from .lang import (
    Assign, AllocAssign, AssertStmt, AssumeStmt, Ast, Binary, Expr, Free,
    Function, GlobalInt, GlobalMutex, If, IndexRef, IntLit, LocalDecl, Lock,
    NondetAssign, ReachErrorStmt, SourceLoc, ThreadCreate, ThreadJoin, Unary,
    Unlock, VarRef, While, expr_to_str,
)


class LoweringError(Exception):
    pass


class AlreadyInstrumented(Exception):
    pass


class Op(enum.IntEnum):
    ASSIGN = 0
    COND_GOTO = 1
    GOTO = 2
    ASSERT = 3
    ASSUME = 4
    LOCK = 5
    UNLOCK = 6
    TCREATE = 7
    TJOIN = 8
    NONDET = 9
    ALLOC = 10
    FREE = 11
    REACH_ERROR = 12
    RETURN = 13
    DELAY_POINT = 14
    THREAD_ADD = 15
    THREAD_RELEASE = 16
    UNWIND_ASSUME = 17


# Instructions added by instrumentation, never by lowering or unwinding.
INJECTED_OPS = frozenset({Op.DELAY_POINT, Op.THREAD_ADD, Op.THREAD_RELEASE})


@dataclass(frozen=True)
class Instruction:
    """One GOTO instruction.

    args by op:
      ASSIGN        (target, expr)        target: ('var', name) | ('elem', name, index_expr)
      COND_GOTO     (expr, target_index)  jump when expr is nonzero
      GOTO          (target_index,)
      ASSERT/ASSUME/UNWIND_ASSUME  (expr,)
      LOCK/UNLOCK   (mutex_name,)
      TCREATE       (target_var, func_name, arg_expr_or_None)
      TJOIN         (var_name,)
      NONDET        (target_var,)
      ALLOC         (target_var, size_expr)
      FREE          (var_name,)
      DELAY_POINT   (delay_min_ns, delay_max_ns)
      REACH_ERROR/RETURN/THREAD_ADD/THREAD_RELEASE  ()
    """

    op: Op
    args: tuple
    loc: SourceLoc
    origin: Optional[int]  # index in the freshly lowered function, None if injected
    shared: bool = False   # instruction touches shared state (globals/heap/sync)

    def with_target(self, target: int) -> "Instruction":
        if self.op is Op.GOTO:
            return replace(self, args=(target,))
        if self.op is Op.COND_GOTO:
            return replace(self, args=(self.args[0], target))
        raise ValueError("not a jump")

    @property
    def jump_target(self) -> Optional[int]:
        if self.op is Op.GOTO:
            return self.args[0]
        if self.op is Op.COND_GOTO:
            return self.args[1]
        return None


@dataclass(frozen=True)
class FuncCode:
    name: str
    param: Optional[str]
    locals_: tuple  # param first when present
    instrs: tuple


@dataclass(frozen=True)
class GlobalLayout:
    scalars: tuple
    arrays: dict  # name -> declared size
    mutexes: tuple


@dataclass(frozen=True)
class GotoProgram:
    functions: dict  # name -> FuncCode
    globals_: GlobalLayout
    entry: str
    orig_len: dict = field(default_factory=dict)  # name -> lowered length (origin id space)

    def func(self, name: str) -> FuncCode:
        return self.functions[name]

    @property
    def instrumented(self) -> bool:
        return any(ins.op in INJECTED_OPS
                   for fc in self.functions.values() for ins in fc.instrs)

    def origin_bases(self) -> dict:
        """Stable per-function offsets for origin-based instruction ids."""
        bases = {}
        off = 0
        for name in sorted(self.orig_len):
            bases[name] = off
            off += self.orig_len[name]
        return bases


@dataclass(frozen=True)
class UnwindBound:
    k: int = 20

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("unwind bound must be >= 1")


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------


def _expr_touches_shared(e: Expr, layout: GlobalLayout, local_names: set) -> bool:
    if isinstance(e, IntLit):
        return False
    if isinstance(e, VarRef):
        return e.name not in local_names
    if isinstance(e, IndexRef):
        # Indexing a local scalar dereferences a heap handle: shared.
        return True
    if isinstance(e, Unary):
        return _expr_touches_shared(e.operand, layout, local_names)
    if isinstance(e, Binary):
        return (_expr_touches_shared(e.lhs, layout, local_names)
                or _expr_touches_shared(e.rhs, layout, local_names))
    raise TypeError(e)


def _negate(e: Expr) -> Expr:
    return Unary("!", e, e.loc)


class _FuncLowerer:
    def __init__(self, layout: GlobalLayout, local_names: set):
        self.layout = layout
        self.locals = local_names
        self.instrs: list[Instruction] = []

    def emit(self, op: Op, args: tuple, loc: SourceLoc, shared: bool) -> int:
        self.instrs.append(Instruction(op, args, loc, origin=None, shared=shared))
        return len(self.instrs) - 1

    def shared_expr(self, e: Expr) -> bool:
        return _expr_touches_shared(e, self.layout, self.locals)

    def lower_stmts(self, stmts: tuple) -> None:
        for s in stmts:
            self.lower_stmt(s)

    def lower_stmt(self, s) -> None:
        if isinstance(s, LocalDecl):
            # Frames are zero-initialized; only an initializer emits code.
            if s.init is not None:
                shared = self.shared_expr(s.init)
                self.emit(Op.ASSIGN, (("var", s.name), s.init), s.loc, shared)
        elif isinstance(s, Assign):
            target_shared = s.target not in self.locals or s.index is not None
            if s.index is None:
                target = ("var", s.target)
                shared = target_shared or self.shared_expr(s.value)
            else:
                target = ("elem", s.target, s.index)
                shared = True  # element writes always hit an array or the heap
                shared = shared or self.shared_expr(s.index) or self.shared_expr(s.value)
            self.emit(Op.ASSIGN, (target, s.value), s.loc, shared)
        elif isinstance(s, If):
            cond_shared = self.shared_expr(s.cond)
            branch = self.emit(Op.COND_GOTO, (_negate(s.cond), -1), s.loc, cond_shared)
            self.lower_stmts(s.then_body)
            if s.else_body is None:
                self.instrs[branch] = self.instrs[branch].with_target(len(self.instrs))
            else:
                skip = self.emit(Op.GOTO, (-1,), s.loc, False)
                self.instrs[branch] = self.instrs[branch].with_target(len(self.instrs))
                self.lower_stmts(s.else_body)
                self.instrs[skip] = self.instrs[skip].with_target(len(self.instrs))
        elif isinstance(s, While):
            cond_shared = self.shared_expr(s.cond)
            head = self.emit(Op.COND_GOTO, (_negate(s.cond), -1), s.loc, cond_shared)
            self.lower_stmts(s.body)
            self.emit(Op.GOTO, (head,), s.loc, False)
            self.instrs[head] = self.instrs[head].with_target(len(self.instrs))
        elif isinstance(s, Lock):
            self.emit(Op.LOCK, (s.mutex,), s.loc, True)
        elif isinstance(s, Unlock):
            self.emit(Op.UNLOCK, (s.mutex,), s.loc, True)
        elif isinstance(s, ThreadCreate):
            self.emit(Op.TCREATE, (s.target, s.func, s.arg), s.loc, True)
        elif isinstance(s, ThreadJoin):
            self.emit(Op.TJOIN, (s.var,), s.loc, True)
        elif isinstance(s, NondetAssign):
            self.emit(Op.NONDET, (s.target,), s.loc, True)
        elif isinstance(s, AllocAssign):
            self.emit(Op.ALLOC, (s.target, s.size), s.loc, True)
        elif isinstance(s, Free):
            self.emit(Op.FREE, (s.var,), s.loc, True)
        elif isinstance(s, AssertStmt):
            self.emit(Op.ASSERT, (s.cond,), s.loc, self.shared_expr(s.cond))
        elif isinstance(s, AssumeStmt):
            self.emit(Op.ASSUME, (s.cond,), s.loc, self.shared_expr(s.cond))
        elif isinstance(s, ReachErrorStmt):
            self.emit(Op.REACH_ERROR, (), s.loc, False)
        else:
            raise LoweringError(f"cannot lower {s!r}")


def lower(ast: Ast) -> GotoProgram:
    """Lower a resolved Ast to its GOTO form.

    Every function ends with a single RETURN; structured control flow is
    gone; ``origin`` on each instruction is its own index.
    """
    scalars = tuple(g.name for g in ast.globals_
                    if isinstance(g, GlobalInt) and g.size is None)
    arrays = {g.name: g.size for g in ast.globals_
              if isinstance(g, GlobalInt) and g.size is not None}
    mutexes = tuple(g.name for g in ast.globals_ if isinstance(g, GlobalMutex))
    layout = GlobalLayout(scalars, arrays, mutexes)

    functions = {}
    orig_len = {}
    for f in ast.functions:
        local_names = set(f.locals_)
        lw = _FuncLowerer(layout, local_names)
        lw.lower_stmts(f.body)
        end_loc = f.body[-1].loc if f.body else f.loc
        lw.emit(Op.RETURN, (), end_loc, False)
        instrs = tuple(replace(ins, origin=i) for i, ins in enumerate(lw.instrs))
        functions[f.name] = FuncCode(f.name, f.param, f.locals_, instrs)
        orig_len[f.name] = len(instrs)
    return GotoProgram(functions, layout, "main", orig_len)


# ---------------------------------------------------------------------------
# Loop unwinding
# ---------------------------------------------------------------------------


def _find_innermost_back_edge(instrs: list[Instruction]) -> Optional[tuple]:
    """Back edge (source GOTO index, head index) with the largest head."""
    best = None
    for i, ins in enumerate(instrs):
        t = ins.jump_target
        if ins.op is Op.GOTO and t is not None and t <= i:
            if best is None or t > best[1]:
                best = (i, t)
    return best


def _shift_targets(instrs: list[Instruction], at: int, removed: int, added: int) -> list[Instruction]:
    """Adjust jump targets after replacing instrs[at:at+removed] with `added` slots."""
    delta = added - removed
    out = []
    for ins in instrs:
        t = ins.jump_target
        if t is not None and t >= at + removed:
            ins = ins.with_target(t + delta)
        out.append(ins)
    return out


def _unwind_function(fc: FuncCode, k: int) -> FuncCode:
    instrs = list(fc.instrs)
    while True:
        edge = _find_innermost_back_edge(instrs)
        if edge is None:
            break
        back, head = edge
        guard = instrs[head]
        if guard.op is not Op.COND_GOTO or guard.jump_target != back + 1:
            raise LoweringError(f"unrecognized loop shape at {fc.name}:{head}")
        body = instrs[head + 1:back]  # innermost: contains no back edges

        # Body jump targets are absolute; rebase them to the copy start.
        def rebased(copy_start: int) -> list[Instruction]:
            out = []
            for ins in body:
                t = ins.jump_target
                if t is not None:
                    # forward jumps inside or just past the body
                    out.append(ins.with_target(t - (head + 1) + copy_start))
                else:
                    out.append(ins)
            return out

        neg_guard = guard.args[0]
        new: list[Instruction] = []
        # Exit target is patched once the unrolled length is known.
        guard_slots = []
        for _ in range(k):
            guard_slots.append(len(new))
            new.append(replace(guard, args=(neg_guard, -1)))
            new.extend(rebased(head + len(new)))
        new.append(Instruction(Op.UNWIND_ASSUME, (neg_guard,), guard.loc,
                               origin=guard.origin, shared=guard.shared))
        exit_index = head + len(new)
        for slot in guard_slots:
            new[slot] = new[slot].with_target(exit_index)

        removed = back - head + 1
        rest = _shift_targets(instrs, head, removed, len(new))
        instrs = rest[:head] + new + rest[head + removed:]
    return FuncCode(fc.name, fc.param, fc.locals_, tuple(instrs))


def unwind(p: GotoProgram, bound: UnwindBound = UnwindBound()) -> GotoProgram:
    """Duplicate every loop body ``bound.k`` times, truncating beyond.

    The result is acyclic.  Idempotent on loop-free programs.  Must run
    before instrumentation.
    """
    if p.instrumented:
        raise LoweringError("unwind expects an un-instrumented program")
    functions = {name: _unwind_function(fc, bound.k) for name, fc in p.functions.items()}
    return GotoProgram(functions, p.globals_, p.entry, dict(p.orig_len))


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------


def _target_str(t) -> str:
    kind = t[0]
    if kind == "var":
        return t[1]
    return f"{t[1]}[{expr_to_str(t[2])}]"


def _args_str(ins: Instruction) -> str:
    op = ins.op
    a = ins.args
    if op is Op.ASSIGN:
        return f"{_target_str(a[0])} := {expr_to_str(a[1])}"
    if op is Op.COND_GOTO:
        return f"{expr_to_str(a[0])} -> {a[1]}"
    if op is Op.GOTO:
        return f"-> {a[0]}"
    if op in (Op.ASSERT, Op.ASSUME, Op.UNWIND_ASSUME):
        return expr_to_str(a[0])
    if op in (Op.LOCK, Op.UNLOCK, Op.TJOIN, Op.FREE, Op.NONDET):
        return a[0]
    if op is Op.TCREATE:
        arg = f", {expr_to_str(a[2])}" if a[2] is not None else ""
        return f"{a[0]} := {a[1]}{arg}"
    if op is Op.ALLOC:
        return f"{a[0]} := alloc({expr_to_str(a[1])})"
    if op is Op.DELAY_POINT:
        return f"[{a[0]}, {a[1]}]ns"
    return ""


def dump(p: GotoProgram, path: str = "") -> str:
    """Instruction listing, one per line: ``index: KIND operands  // file:line``."""
    lines = []
    for name in sorted(p.functions):
        fc = p.functions[name]
        lines.append(f"{name}:")
        for i, ins in enumerate(fc.instrs):
            ops = _args_str(ins)
            body = f"{i}: {ins.op.name}" + (f" {ops}" if ops else "")
            lines.append(f"  {body}  // {path or '<input>'}:{ins.loc.line}")
    return "\n".join(lines)


def validate_targets(p: GotoProgram) -> None:
    """Raise if any jump lands outside its function (test and debug aid)."""
    for name, fc in p.functions.items():
        n = len(fc.instrs)
        if n == 0 or fc.instrs[-1].op is not Op.RETURN:
            raise LoweringError(f"{name}: must end with RETURN")
        for i, ins in enumerate(fc.instrs):
            t = ins.jump_target
            if t is not None and not (0 <= t < n):
                raise LoweringError(f"{name}:{i}: jump target {t} out of range")
