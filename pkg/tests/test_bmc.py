from __future__ import annotations

import struct

import pytest

from ebf.bmc import (BmcConfig, DEFAULT_DOMAIN, NO_VIOLATION, VIOLATION,
                     check, counterexample_json, extract_seeds, fallback_seeds)
from ebf.goto import UnwindBound, lower, unwind
from ebf.instrument import inject
from ebf.interp import PropertySet, run
from ebf.lang import parse_text

from conftest import task_ast
from oracles import enumerate_all


def prepared(src, k=20):
    p = lower(parse_text(src))
    return p, unwind(p, UnwindBound(k))


def test_gate_value_in_domain_found():
    _, u = prepared("int x; void main() { x = nondet(); if (x == 300) { reach_error(); } }")
    v = check(u, PropertySet.only("unreach_call"))
    assert v.status == VIOLATION
    assert v.counterexample.assumption_values == (300,)
    assert v.counterexample.violation.kind == "ReachError"


def test_gate_value_outside_domain_not_found():
    _, u = prepared("int x; void main() { x = nondet(); if (x == 7) { reach_error(); } }")
    v = check(u, PropertySet.only("unreach_call"))
    assert v.status == NO_VIOLATION
    # and the brute-force enumerator over the same domain agrees
    found, _ = enumerate_all(u, PropertySet.only("unreach_call"), DEFAULT_DOMAIN)
    assert not found


def test_clean_two_thread_program():
    src = """
    int x; mutex m;
    void w() { lock(m); x = x + 1; unlock(m); }
    void main() {
      int id;
      id = thread_create(w);
      lock(m); x = x + 10; unlock(m);
      thread_join(id);
    }
    """
    _, u = prepared(src)
    v = check(u, PropertySet())
    assert v.status == NO_VIOLATION
    assert not v.bound_hit


def test_late_bug_missed_under_bound(corpus_tasks):
    task = corpus_tasks["late_bug"]
    p = lower(task_ast(task))
    u = unwind(p, UnwindBound(20))
    v = check(u, task.property_set())
    assert v.status == NO_VIOLATION
    assert v.bound_hit


def test_violation_monotone_in_unwind_bound(corpus_tasks):
    task = corpus_tasks["overflow_loop"]
    p = lower(task_ast(task))
    props = task.property_set()
    # overflow happens at iteration 11
    for k, expect in ((5, NO_VIOLATION), (11, VIOLATION), (20, VIOLATION),
                      (40, VIOLATION)):
        v = check(unwind(p, UnwindBound(k)), props, BmcConfig(unwind=UnwindBound(k)))
        assert v.status == expect, k


def test_counterexamples_replay(corpus_tasks):
    for name in ("racy_counter", "account", "lazy_lock", "deadlock_pair",
                 "oob_index", "assert_direct", "thread_leak", "deep_magic"):
        task = corpus_tasks[name]
        p = lower(task_ast(task))
        props = task.property_set()
        cfg = task.bmc_config()
        v = check(unwind(p, cfg.unwind), props, cfg)
        assert v.status == VIOLATION, name
        seed = extract_seeds(v.counterexample, inject(p), props)
        st = run(inject(p), seed, props=props)
        assert st.bug is not None, name
        assert st.bug.kind == v.counterexample.violation.kind, name
        assert st.bug.loc == v.counterexample.violation.loc, name


def test_deterministic_verdict():
    src = """
    int x;
    void w() { x = x + 1; }
    void main() { int i; i = thread_create(w); x = 3; thread_join(i); }
    """
    _, u = prepared(src)
    a = check(u, PropertySet())
    b = check(u, PropertySet())
    assert a.status == b.status == VIOLATION
    assert a.counterexample == b.counterexample


def test_rejects_wrong_inputs():
    p = lower(parse_text("int x; void main() { while (x < 3) { x = x + 1; } }"))
    with pytest.raises(ValueError):
        check(p, PropertySet())  # not unwound
    with pytest.raises(ValueError):
        check(inject(unwind(p, UnwindBound(4))), PropertySet())  # instrumented
    with pytest.raises(ValueError):
        BmcConfig(domain=())
    with pytest.raises(ValueError):
        BmcConfig(context_bound=-1)


def test_resource_exhaustion():
    src = """
    int a; int b; int c;
    void main() { a = nondet(); b = nondet(); c = nondet(); assert(a + b + c != 901); }
    """
    _, u = prepared(src)
    v = check(u, PropertySet.only("unreach_call"), BmcConfig(max_states=5))
    assert v.status == "resource-exhausted"
    assert v.reason == "max-states"


def test_extract_seeds_value_encoding():
    _, u = prepared("int x; void main() { x = nondet(); if (x == 300) { reach_error(); } }")
    v = check(u, PropertySet.only("unreach_call"))
    p = lower(parse_text("int x; void main() { x = nondet(); if (x == 300) { reach_error(); } }"))
    seed = extract_seeds(v.counterexample, inject(p), PropertySet.only("unreach_call"))
    assert seed.value_region[:4] == bytes([0x2C, 0x01, 0x00, 0x00])
    # single-threaded counterexample: schedule region is all 255 padding
    assert set(seed.schedule_region) == {255}


def test_fallback_seed_contract():
    seeds = fallback_seeds(10, rng_seed=7)
    again = fallback_seeds(10, rng_seed=7)
    assert [s.data for s in seeds] == [a.data for a in again]
    assert len({s.data for s in seeds}) == 10
    for s in seeds:
        vr = s.value_region
        for off in range(0, len(vr), 4):
            v = struct.unpack_from("<i", vr, off)[0]
            assert 0 <= v <= 300
    with pytest.raises(ValueError):
        fallback_seeds(0, 1)


def test_counterexample_json_shape():
    _, u = prepared("int x; void main() { x = nondet(); if (x == 300) { reach_error(); } }")
    v = check(u, PropertySet.only("unreach_call"))
    doc = counterexample_json(v.counterexample, "prog.mcl")
    assert doc["values"] == [300]
    assert isinstance(doc["schedule"], list)
    assert doc["bug"]["kind"] == "ReachError"
    assert doc["bug"]["file"] == "prog.mcl"


def test_oracle_equivalence_small_programs():
    cases = [
        ("int x; void main() { x = nondet(); assert(x != 255); }",
         PropertySet.only("unreach_call")),
        ("int x; void w() { x = 1; } void main() { int i; i = thread_create(w); x = 2; thread_join(i); }",
         PropertySet.only("data_races")),
        ("int a[4]; void main() { int i; i = nondet(); if (i >= 0) { if (i < 4) { a[i] = 1; } } }",
         PropertySet.only("valid_memsafety")),
    ]
    for src, props in cases:
        _, u = prepared(src)
        v = check(u, props)
        found, _ = enumerate_all(u, props, DEFAULT_DOMAIN)
        assert (v.status == VIOLATION) == bool(found), src
