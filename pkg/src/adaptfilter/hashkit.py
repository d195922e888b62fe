"""128-bit key hashing and fingerprint slicing.

Every slice reads from bit 0 (least significant) upward: the quotient is
``bits[0, qbits)``, remainder chunk ``i`` is
``bits[qbits + i*rbits, qbits + (i+1)*rbits)`` and extension bits start right
after chunk 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import mmh3

HASH_BITS = 128
MASK64 = (1 << 64) - 1


class SelectorOutOfRange(ValueError):
    pass


class HashExhausted(ValueError):
    pass


def hash128(key: int, seed: int = 0) -> int:
    """MurmurHash3 x64/128 of a 64-bit key under a 64-bit seed.

    mmh3 only takes a 32-bit seed, so the high seed half is mixed in as data.
    """
    data = (key & MASK64).to_bytes(8, "little") + ((seed >> 32) & 0xFFFFFFFF).to_bytes(4, "little")
    return mmh3.hash128(data, seed & 0xFFFFFFFF, signed=False)


@dataclass(frozen=True)
class FingerprintParams:
    qbits: int
    rbits: int

    def __post_init__(self):
        if not 1 <= self.qbits <= 56:
            raise ValueError(f"qbits must be in [1, 56], got {self.qbits}")
        if not 1 <= self.rbits <= 16:
            raise ValueError(f"rbits must be in [1, 16], got {self.rbits}")
        if self.qbits + self.rbits > HASH_BITS:
            raise ValueError("qbits + rbits exceeds the hash width")

    @property
    def nslots(self) -> int:
        return 1 << self.qbits

    @property
    def eps(self) -> float:
        return 2.0 ** -self.rbits

    @property
    def extension_base(self) -> int:
        """Bit offset where extension bits begin."""
        return self.qbits + self.rbits


def max_selector(p: FingerprintParams) -> int:
    return (HASH_BITS - p.qbits) // p.rbits - 1


def quotient(h: int, p: FingerprintParams) -> int:
    return h & ((1 << p.qbits) - 1)


def remainder(h: int, p: FingerprintParams, i: int = 0) -> int:
    if i < 0 or i > max_selector(p):
        raise SelectorOutOfRange(f"selector {i} outside [0, {max_selector(p)}]")
    return (h >> (p.qbits + i * p.rbits)) & ((1 << p.rbits) - 1)


def fingerprint_parts(h: int, p: FingerprintParams, i: int = 0) -> tuple[int, int]:
    return quotient(h, p), remainder(h, p, i)


def extension_slice(h: int, p: FingerprintParams, start: int, length: int) -> int:
    lo = p.extension_base + start
    if start < 0 or length < 0 or lo + length > HASH_BITS:
        raise HashExhausted(f"extension bits [{start}, {start + length}) run past the hash")
    return (h >> lo) & ((1 << length) - 1)


def key_of(text: str | bytes) -> int:
    """Pre-hash an arbitrary string to the 64-bit integer keys the filters take."""
    if isinstance(text, str):
        text = text.encode()
    return mmh3.hash64(text, signed=False)[0]
