"""Fuzzer input layout and the byte cursors the interpreter consumes.

A SeedInput is one flat byte vector carrying both sources of
nondeterminism: program input values and scheduling entropy.

    [4-byte LE value_region_len][value region][schedule region]

Nondet reads take 4 bytes little-endian (signed) from the value region in
execution order; once it runs dry every further nondet reads 0.  Delay
points consume schedule-region bytes to decide preemption and virtual
delay; once those run dry the scheduler degrades to never-preempt
round-robin with no delays.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

HEADER_LEN = 4
MIN_LEN = 5
PREEMPT_THRESHOLD = 64  # byte < 64 at a delay point means preempt (25%)
NEVER_PREEMPT = 255


@dataclass(frozen=True)
class SeedInput:
    data: bytes

    def __post_init__(self):
        if len(self.data) < MIN_LEN:
            raise ValueError("seed must be at least 5 bytes")
        if self.value_region_len > len(self.data) - HEADER_LEN:
            raise ValueError("value region extends past the input")

    @property
    def value_region_len(self) -> int:
        return struct.unpack_from("<I", self.data, 0)[0]

    @property
    def value_region(self) -> bytes:
        return self.data[HEADER_LEN:HEADER_LEN + self.value_region_len]

    @property
    def schedule_region(self) -> bytes:
        return self.data[HEADER_LEN + self.value_region_len:]

    @staticmethod
    def build(values: bytes, schedule: bytes) -> "SeedInput":
        payload = values + schedule
        if len(payload) == 0:
            schedule = bytes([NEVER_PREEMPT])
            payload = schedule
        return SeedInput(struct.pack("<I", len(values)) + payload)

    @staticmethod
    def from_values(values: list[int], schedule: bytes = b"") -> "SeedInput":
        packed = b"".join(struct.pack("<i", v) for v in values)
        if not schedule:
            schedule = bytes([NEVER_PREEMPT] * 8)
        return SeedInput.build(packed, schedule)

    @staticmethod
    def repair(raw: bytes) -> "SeedInput":
        """Clamp arbitrary bytes into a valid seed (post-mutation fixup)."""
        if len(raw) < MIN_LEN:
            raw = raw + bytes(MIN_LEN - len(raw))
        vlen = struct.unpack_from("<I", raw, 0)[0]
        limit = len(raw) - HEADER_LEN
        if vlen > limit:
            raw = struct.pack("<I", limit) + raw[HEADER_LEN:]
        return SeedInput(raw)


class ValueSource:
    """Sequential 4-byte little-endian signed reads; 0 after exhaustion."""

    def __init__(self, region: bytes):
        self.region = region
        self.cursor = 0

    def next_value(self) -> int:
        remaining = len(self.region) - self.cursor
        if remaining <= 0:
            return 0
        chunk = self.region[self.cursor:self.cursor + 4]
        self.cursor += 4
        if len(chunk) < 4:
            chunk = chunk + bytes(4 - len(chunk))
        return struct.unpack("<i", chunk)[0]


class ScheduleSource:
    """Delay-point decisions driven by the schedule region.

    At a delay point with the active-thread counter above zero, one byte
    decides: below 64 preempt, otherwise continue.  A preemption consumes
    one more byte to pick the next runnable thread (index modulo runnable
    count) and two bytes (LE u16) for a virtual delay draw
    ``delay_min + (u16 % (delay_max - delay_min + 1))`` charged to the
    yielding thread's clock.  Reads past the end degrade to "continue".
    """

    def __init__(self, region: bytes):
        self.region = region
        self.cursor = 0

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.region)

    def _byte(self) -> int | None:
        if self.cursor >= len(self.region):
            return None
        b = self.region[self.cursor]
        self.cursor += 1
        return b

    def decide_delay(self, runnable: list[int], current: int,
                     delay_min: int, delay_max: int):
        """Return (target_tid, delay_ns); target == current means continue."""
        b = self._byte()
        if b is None or b >= PREEMPT_THRESHOLD:
            return current, 0
        t = self._byte()
        if t is None:
            return current, 0
        lo = self._byte()
        hi = self._byte()
        u16 = (lo or 0) | ((hi or 0) << 8)
        delay = delay_min + (u16 % (delay_max - delay_min + 1))
        target = runnable[t % len(runnable)]
        return target, delay
