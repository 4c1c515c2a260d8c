from __future__ import annotations

import random

from ebf.races import race_check

from oracles import brute_force_race, random_trace, trace_to_accesses


def vc_pair(ops):
    pair = race_check(trace_to_accesses(ops))
    return pair  # locs carry trace indices


def test_program_order_no_race():
    ops = [("write", 0, "x"), ("read", 0, "x")]
    assert vc_pair(ops) is None
    assert brute_force_race(ops) is None


def test_create_edge_orders_parent_before_child():
    ops = [("write", 0, "x"), ("create", 0, 1), ("read", 1, "x")]
    assert vc_pair(ops) is None
    assert brute_force_race(ops) is None


def test_join_edge_orders_child_before_parent():
    ops = [("create", 0, 1), ("write", 1, "x"), ("finish", 1),
           ("join", 0, 1), ("read", 0, "x")]
    assert vc_pair(ops) is None
    assert brute_force_race(ops) is None


def test_mutex_edge_release_acquire():
    ordered = [("create", 0, 1),
               ("write", 0, "x"), ("unlock_setup", 0), ]
    ops = [("create", 0, 1),
           ("lock", 0, "m"), ("write", 0, "x"), ("unlock", 0, "m"),
           ("lock", 1, "m"), ("write", 1, "x"), ("unlock", 1, "m")]
    assert vc_pair(ops) is None
    assert brute_force_race(ops) is None
    del ordered


def test_unordered_writes_race():
    ops = [("create", 0, 1), ("write", 0, "x"), ("write", 1, "x")]
    pair = vc_pair(ops)
    assert pair == (1, 2)
    assert brute_force_race(ops) == (1, 2)


def test_post_unlock_access_still_races():
    # accesses outside the critical section are not ordered by the lock
    ops = [("create", 0, 1),
           ("lock", 0, "m"), ("unlock", 0, "m"), ("write", 0, "x"),
           ("lock", 1, "m"), ("unlock", 1, "m"), ("write", 1, "x")]
    pair = vc_pair(ops)
    assert pair is not None
    assert brute_force_race(ops) == pair


def test_read_read_never_races():
    ops = [("create", 0, 1), ("read", 0, "x"), ("read", 1, "x"),
           ("read", 0, "x"), ("read", 1, "x")]
    assert vc_pair(ops) is None
    assert brute_force_race(ops) is None


def test_vector_clock_matches_brute_force_on_random_traces():
    rng = random.Random(99)
    races = 0
    for _ in range(200):
        ops = random_trace(rng)
        expected = brute_force_race(ops)
        got = vc_pair(ops)
        assert got == expected, ops
        if expected is not None:
            races += 1
    assert races > 20, "generator should produce plenty of racy traces"
