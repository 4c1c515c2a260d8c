from __future__ import annotations

import pytest

from ebf.goto import AlreadyInstrumented, Op, lower, validate_targets
from ebf.instrument import InstrumentationConfig, inject, strip
from ebf.interp import run
from ebf.lang import parse_text
from ebf.seeds import SeedInput

from conftest import task_ast


def test_delay_after_every_instruction():
    p = lower(parse_text("int x; void main() { x = 1; x = 2; x = 3; }"))
    q = inject(p)
    kinds = [i.op for i in q.func("main").instrs]
    assert kinds == [Op.ASSIGN, Op.DELAY_POINT,
                     Op.ASSIGN, Op.DELAY_POINT,
                     Op.ASSIGN, Op.DELAY_POINT,
                     Op.RETURN]


def test_thread_add_release_adjacency():
    src = """
    int t;
    void w() { }
    void main() { t = thread_create(w); thread_join(t); }
    """
    q = inject(lower(parse_text(src)))
    kinds = [i.op for i in q.func("main").instrs]
    assert kinds == [Op.TCREATE, Op.THREAD_ADD, Op.DELAY_POINT,
                     Op.TJOIN, Op.THREAD_RELEASE, Op.DELAY_POINT,
                     Op.RETURN]
    assert kinds.count(Op.THREAD_ADD) == 1
    assert kinds.count(Op.THREAD_RELEASE) == 1


def test_empty_main_unchanged():
    p = lower(parse_text("void main() { }"))
    q = inject(p)
    assert [i.op for i in q.func("main").instrs] == [Op.RETURN]
    st = run(q, SeedInput.from_values([]))
    assert st.bug is None and st.delay_draws == ()


def test_double_injection_rejected():
    p = inject(lower(parse_text("int x; void main() { x = 1; }")))
    with pytest.raises(AlreadyInstrumented):
        inject(p)


def test_strip_inverts_inject(corpus_tasks):
    for task in corpus_tasks.values():
        p = lower(task_ast(task))
        q = inject(p)
        validate_targets(q)
        back = strip(q)
        for name in p.functions:
            assert back.func(name).instrs == p.func(name).instrs, task.name


def test_strip_on_plain_program_is_identity():
    p = lower(parse_text("int x; void main() { x = 1; }"))
    s = strip(p)
    assert s.functions["main"].instrs == p.functions["main"].instrs


def test_jump_targets_reindexed():
    p = lower(parse_text("int x; void main() { while (x < 2) { x = x + 1; } }"))
    q = inject(p)
    validate_targets(q)
    # the loop guard must land on the original instruction, not a delay point
    for ins in q.func("main").instrs:
        t = ins.jump_target
        if t is not None:
            assert q.func("main").instrs[t].op not in (Op.DELAY_POINT,
                                                       Op.THREAD_ADD,
                                                       Op.THREAD_RELEASE)


def test_config_validation():
    with pytest.raises(ValueError):
        InstrumentationConfig(delay_min_ns=0)
    with pytest.raises(ValueError):
        InstrumentationConfig(delay_min_ns=10, delay_max_ns=5)
    cfg = InstrumentationConfig()
    assert (cfg.delay_min_ns, cfg.delay_max_ns) == (1, 100_000)


def test_transparency_under_no_yield_schedule(corpus_tasks):
    """All-255 schedules: instrumented == plain in state, verdict, coverage."""
    for task in corpus_tasks.values():
        p = lower(task_ast(task))
        q = inject(p)
        props = task.property_set()
        seed = SeedInput.build(b"\x2a\x00\x00\x00" * 4, bytes([255]) * 128)
        plain = run(p, seed, props=props)
        instr = run(q, seed, props=props)
        assert plain.final_globals == instr.final_globals, task.name
        assert (plain.bug is None) == (instr.bug is None), task.name
        if plain.bug is not None:
            assert plain.bug.kind == instr.bug.kind
            assert plain.bug.loc == instr.bug.loc
        assert plain.coverage.counts == instr.coverage.counts, task.name


def test_delay_gating_by_active_counter():
    # delays fire only between create and join; single-threaded stretches are free
    src = """
    int t;
    int x;
    void w() { x = x + 1; }
    void main() {
      x = 1;
      t = thread_create(w);
      thread_join(t);
      x = 2;
    }
    """
    q = inject(lower(parse_text(src)))
    # schedule full of preempt-triggering bytes: draws happen only while live
    seed = SeedInput.build(b"", bytes([0, 0, 0, 0]) * 64)
    st = run(q, seed)
    assert len(st.delay_draws) > 0
    single = inject(lower(parse_text("int x; void main() { x = 1; x = 2; }")))
    st2 = run(single, seed)
    assert st2.delay_draws == ()
