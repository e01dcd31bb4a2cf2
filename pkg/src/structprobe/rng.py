"""Deterministic 64-bit random streams.

Seed derivation uses the splitmix64 finalizer; each derived seed is expanded
into a xoshiro256** state (four splitmix64 outputs, as recommended by the
xoshiro authors). Everything is plain integer arithmetic masked to 64 bits,
so streams are identical on every platform and Python version.

Derivation of a per-record seed::

    h = global_seed
    for part in (record_key, setting_key, seed_index):
        h = mix64((h ^ part) + GOLDEN_GAMMA)

where string parts are hashed to 64 bits with BLAKE2b (8-byte digest, read
little-endian) and integers are taken modulo 2**64.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import MutableSequence, Union

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

SeedPart = Union[int, str]


def mix64(z: int) -> int:
    """splitmix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, mix64(state)


def part_to_u64(part: SeedPart) -> int:
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    return int(part) & MASK64


class Xoshiro256:
    """xoshiro256** generator seeded through splitmix64."""

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        state = seed & MASK64
        s = []
        for _ in range(4):
            state, out = splitmix64(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        r = (s1 * 5) & MASK64
        result = ((((r << 7) | (r >> 57)) & MASK64) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform draw in [0, 1) with 53 bits of mantissa."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by Lemire's multiply-and-reject method."""
        if n <= 0:
            raise ValueError("n must be positive")
        m = self.next_u64() * n
        low = m & MASK64
        if low < n:
            threshold = (1 << 64) % n
            while low < threshold:
                m = self.next_u64() * n
                low = m & MASK64
        return m >> 64


def shuffle(items: MutableSequence, rng: Xoshiro256) -> None:
    """In-place Fisher-Yates shuffle, swapping from the tail down."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.randbelow(i + 1)
        items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class SeedPolicy:
    """Maps (record, setting, perturbation seed index) to a 64-bit seed."""

    global_seed: int = 0

    def derive(self, record_key: SeedPart, setting_id: str, seed_index: int) -> int:
        h = self.global_seed & MASK64
        for part in (record_key, setting_id, seed_index):
            h = mix64(((h ^ part_to_u64(part)) + GOLDEN_GAMMA) & MASK64)
        return h
