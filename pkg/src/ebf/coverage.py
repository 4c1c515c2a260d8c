"""Edge-coverage bitmap with AFL-style hit bucketing.

Edges are hashed pairs of instruction identities (origin ids, so plain
and instrumented builds of the same program produce comparable maps)
folded into 65536 slots.  Hit counts saturate at 255 and are coarsened
into bucket classes {1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+} before any
novelty comparison, so loop-count jitter does not read as new behavior.
"""

from __future__ import annotations

import hashlib

MAP_SIZE = 65536

# count -> bucket class (0 = unseen, classes 1..8)
_CLASS_LUT = [0] * 256
for _c in range(1, 256):
    if _c == 1:
        _CLASS_LUT[_c] = 1
    elif _c == 2:
        _CLASS_LUT[_c] = 2
    elif _c == 3:
        _CLASS_LUT[_c] = 3
    elif _c < 8:
        _CLASS_LUT[_c] = 4
    elif _c < 16:
        _CLASS_LUT[_c] = 5
    elif _c < 32:
        _CLASS_LUT[_c] = 6
    elif _c < 128:
        _CLASS_LUT[_c] = 7
    else:
        _CLASS_LUT[_c] = 8


def bucket_class(count: int) -> int:
    return _CLASS_LUT[min(count, 255)]


def edge_index(prev_id: int, cur_id: int) -> int:
    """Deterministic hash of an instruction-id pair into the map."""
    return ((prev_id * 1000003) ^ (cur_id * 8191) ^ (cur_id >> 4)) % MAP_SIZE


class CoverageMap:
    """Sparse view of the 65536-counter edge map for a single run.

    Mergeable by element-wise max; hashable into a stable digest used for
    crash uniqueness.
    """

    __slots__ = ("counts",)

    def __init__(self, counts: dict | None = None):
        self.counts = dict(counts) if counts else {}

    def classes(self) -> dict:
        return {e: bucket_class(c) for e, c in self.counts.items()}

    def edge_count(self) -> int:
        return len(self.counts)

    def merge_max(self, other: "CoverageMap") -> None:
        for e, c in other.counts.items():
            if c > self.counts.get(e, 0):
                self.counts[e] = c

    def digest(self) -> str:
        """Stable hash of the bucketized map (path identity for crashes)."""
        h = hashlib.blake2b(digest_size=8)
        for e in sorted(self.counts):
            h.update(e.to_bytes(2, "little"))
            h.update(bytes([bucket_class(self.counts[e])]))
        return h.hexdigest()

    def as_bytes(self) -> bytes:
        dense = bytearray(MAP_SIZE)
        for e, c in self.counts.items():
            dense[e] = min(c, 255)
        return bytes(dense)

    def __eq__(self, other) -> bool:
        return isinstance(other, CoverageMap) and self.counts == other.counts

    def __repr__(self) -> str:
        return f"CoverageMap({len(self.counts)} edges)"


class NoveltyTracker:
    """Which bucket classes each edge has ever shown; feeds queue admission."""

    __slots__ = ("seen",)

    def __init__(self):
        self.seen = bytearray(MAP_SIZE)

    def observe(self, cov: CoverageMap) -> bool:
        """Record a run's buckets; True if any (edge, class) was new."""
        novel = False
        seen = self.seen
        for e, c in cov.counts.items():
            bit = 1 << (bucket_class(c) - 1)
            if not seen[e] & bit:
                seen[e] |= bit
                novel = True
        return novel

    def would_be_novel(self, cov: CoverageMap) -> bool:
        seen = self.seen
        for e, c in cov.counts.items():
            if not seen[e] & (1 << (bucket_class(c) - 1)):
                return True
        return False
