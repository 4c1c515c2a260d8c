from __future__ import annotations

import itertools
import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebf.fuzz import (FuzzBudget, deterministic_stage, fuzz_loop, havoc_stage,
                      mutation_budget)
from ebf.goto import lower
from ebf.instrument import inject
from ebf.interp import PropertySet, run
from ebf.lang import parse_text
from ebf.seeds import HEADER_LEN, SeedInput


def seed_of(payload: bytes, vlen: int | None = None) -> SeedInput:
    if vlen is None:
        vlen = len(payload)
    return SeedInput(struct.pack("<I", vlen) + payload)


def test_first_bit_flip_is_msb():
    s = seed_of(b"\x00")
    first = next(iter(deterministic_stage(s)))
    assert first.data[HEADER_LEN:] == b"\x80"


def test_bit_flip_counts():
    s = seed_of(bytes(3))
    mutants = list(deterministic_stage(s))
    n = 3
    one_bit = mutants[:8 * n]
    # exactly 8n single-bit mutants, each at hamming distance 1
    for m in one_bit:
        payload = m.data[HEADER_LEN:]
        assert sum(bin(a ^ b).count("1") for a, b in zip(payload, bytes(3))) == 1
    two_bit_first = mutants[8 * n].data[HEADER_LEN:]
    assert sum(bin(a ^ b).count("1") for a, b in zip(two_bit_first, bytes(3))) == 2


def test_arithmetic_reaches_neighbors():
    s = SeedInput.from_values([299])
    variants = set()
    for m in deterministic_stage(s):
        if m.value_region_len >= 4:
            variants.add(struct.unpack_from("<i", m.data, HEADER_LEN)[0])
    assert 300 in variants  # +1 within the arithmetic window
    assert 299 - 35 in variants
    assert 0 in variants and 300 in variants  # interesting words include both


def test_header_never_mutated():
    s = SeedInput.from_values([1, 2], schedule=bytes(8))
    header = s.data[:HEADER_LEN]
    for m in itertools.islice(deterministic_stage(s), 5000):
        assert m.data[:HEADER_LEN] == header
    rng = random.Random(0)
    for _ in range(500):
        m = havoc_stage(s, rng)
        assert m.value_region_len <= len(m.data) - HEADER_LEN


def test_havoc_reproducible():
    s = SeedInput.from_values([5, 6])
    a = [havoc_stage(s, random.Random(42)).data for _ in range(1)]
    b = [havoc_stage(s, random.Random(42)).data for _ in range(1)]
    assert a == b


def test_havoc_length_floor():
    s = SeedInput(struct.pack("<I", 0) + b"\x00")
    rng = random.Random(9)
    for _ in range(2000):
        m = havoc_stage(s, rng)
        assert len(m.data) >= 5


@settings(max_examples=300, deadline=None)
@given(payload=st.binary(min_size=1, max_size=64),
       vlen=st.integers(min_value=0, max_value=64),
       rng_seed=st.integers(min_value=0, max_value=2**16))
def test_havoc_output_always_valid(payload, vlen, rng_seed):
    s = SeedInput.repair(struct.pack("<I", min(vlen, len(payload))) + payload)
    m = havoc_stage(s, random.Random(rng_seed))
    assert len(m.data) >= 5
    assert m.value_region_len <= len(m.data) - HEADER_LEN


def test_mutation_budget_table():
    assert mutation_budget(False, 100, 50) == 64
    assert mutation_budget(True, 10, 50) == 512
    assert mutation_budget(True, 100, 50) == 256
    assert mutation_budget(False, 10, 50) == 128
    for novel in (False, True):
        for steps, median in ((0, 0), (1, 10**9), (10**9, 1)):
            assert 1 <= mutation_budget(novel, steps, median) <= 1024


BUGGY = """
int x;
void main() {
  x = nondet();
  if (x == 12345) {
    reach_error();
  }
}
"""


def test_bmc_style_seed_found_on_first_execution():
    p = inject(lower(parse_text(BUGGY)))
    corpus = [SeedInput.from_values([12345])]
    props = PropertySet.only("unreach_call")
    queue, crashes, stats = fuzz_loop(p, corpus, FuzzBudget(max_execs=1),
                                      rng_seed=1, props=props)
    assert len(crashes) == 1
    entry = next(iter(crashes))
    assert entry.bug.kind == "ReachError"
    # crash entries replay
    st = run(p, entry.seed, props=props)
    assert st.bug is not None and st.bug.kind == "ReachError"


def test_bug_free_program_empty_crash_set():
    p = inject(lower(parse_text("int x; void main() { x = 1; }")))
    _, crashes, stats = fuzz_loop(p, [SeedInput.from_values([0])],
                                  FuzzBudget(max_execs=500), rng_seed=3)
    assert len(crashes) == 0
    assert stats.execs == 500


def test_full_determinism():
    p = inject(lower(parse_text(BUGGY)))
    corpus = [SeedInput.from_values([7]), SeedInput.from_values([100])]
    props = PropertySet.only("unreach_call")

    def once():
        queue, crashes, stats = fuzz_loop(p, list(corpus),
                                          FuzzBudget(max_execs=800),
                                          rng_seed=11, props=props)
        return ([e.seed.data for e in queue.entries],
                sorted(e.key() for e in crashes), stats.execs)

    assert once() == once()


def test_queue_admission_is_coverage_driven():
    src = """
    int x;
    void main() {
      x = nondet();
      if (x > 100) {
        x = 1;
      } else {
        x = 2;
      }
    }
    """
    p = inject(lower(parse_text(src)))
    corpus = [SeedInput.from_values([0])]
    queue, crashes, stats = fuzz_loop(p, corpus, FuzzBudget(max_execs=400),
                                      rng_seed=5)
    assert len(queue) > 1, "the uncovered branch should admit a new seed"
    assert len(crashes) == 0


def test_nonempty_corpus_required():
    p = inject(lower(parse_text("void main() { }")))
    with pytest.raises(ValueError):
        fuzz_loop(p, [], FuzzBudget(max_execs=10), rng_seed=0)
    with pytest.raises(ValueError):
        FuzzBudget()
