"""Blocked rank-and-select quotient filter substrate.

Slots are grouped in blocks of 64.  Each block keeps an ``occupieds`` word, a
``runends`` word, a saturating 8-bit offset, the block's remainders packed
``rbits`` apiece into one integer, and a 56-bit sidecar word whose meaning is
owned by the adaptive filters built on top.

The array holds ``2**qbits`` home slots.  Runs that spill past the last home
slot land in overflow blocks appended on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from adaptfilter.hashkit import FingerprintParams

SLOTS_PER_BLOCK = 64
OFFSET_MAX = 255
METADATA_BITS_PER_SLOT = 2 + 8 / SLOTS_PER_BLOCK  # occupied + runend + offset share
SIDECAR_BITS = 56


class FilterFull(Exception):
    pass


def rank(word: int, i: int) -> int:
    """Number of set bits of ``word`` in positions ``[0, i]``."""
    return (word & ((2 << i) - 1)).bit_count()


def select(word: int, k: int) -> Optional[int]:
    """Position of the ``k``-th set bit (0-indexed), or None."""
    if k < 0 or word.bit_count() <= k:
        return None
    for _ in range(k):
        word &= word - 1
    return (word & -word).bit_length() - 1


@dataclass
class FilterBlock:
    occupieds: int
    runends: int
    offset: int
    remainders: list[int]
    sidecar: int


class QuotientFilter:
    """Remainder storage with RSQF metadata; no hashing, no adaptivity."""

    def __init__(self, qbits: int, rbits: int):
        if qbits < 6:
            raise ValueError("qbits must be >= 6 so the filter holds at least one block")
        self.params = FingerprintParams(qbits, rbits)
        self.qbits = qbits
        self.rbits = rbits
        self.nslots = 1 << qbits
        self.nblocks = self.nslots // SLOTS_PER_BLOCK
        self.occupancy = 0
        self._rmask = (1 << rbits) - 1
        self.occupieds = [0] * self.nblocks
        self.runends = [0] * self.nblocks
        self.offsets = [0] * self.nblocks
        self.remainders = [0] * self.nblocks
        self.sidecars = [0] * self.nblocks

    # -- sizing ---------------------------------------------------------------

    @property
    def physical_blocks(self) -> int:
        return len(self.occupieds)

    @property
    def physical_slots(self) -> int:
        return len(self.occupieds) * SLOTS_PER_BLOCK

    @property
    def load_factor(self) -> float:
        return self.occupancy / self.nslots

    def _grow(self, slot: int) -> None:
        while slot >= self.physical_slots:
            for arr in (self.occupieds, self.runends, self.offsets, self.remainders, self.sidecars):
                arr.append(0)

    # -- slot access ----------------------------------------------------------

    def get_remainder(self, slot: int) -> int:
        return (self.remainders[slot >> 6] >> ((slot & 63) * self.rbits)) & self._rmask

    def set_remainder(self, slot: int, r: int) -> None:
        b, i = slot >> 6, (slot & 63) * self.rbits
        self.remainders[b] = (self.remainders[b] & ~(self._rmask << i)) | ((r & self._rmask) << i)

    def is_occupied(self, q: int) -> bool:
        return bool((self.occupieds[q >> 6] >> (q & 63)) & 1)

    def is_runend(self, slot: int) -> bool:
        if slot >= self.physical_slots:
            return False
        return bool((self.runends[slot >> 6] >> (slot & 63)) & 1)

    def block(self, b: int) -> FilterBlock:
        return FilterBlock(
            self.occupieds[b],
            self.runends[b],
            self.offsets[b],
            [self.get_remainder(b * 64 + i) for i in range(64)],
            self.sidecars[b],
        )

    # -- run location ---------------------------------------------------------

    def offset(self, b: int) -> int:
        """True offset of block ``b``, recomputed when the stored byte saturated."""
        o = self.offsets[b]
        if o < OFFSET_MAX:
            return o
        return self._compute_offset(b)

    def _compute_offset(self, b: int) -> int:
        j = b << 6
        if self.occupieds[b] & 1:
            start = max(j, self._tail(j - 1) + 1) if j else 0
            return self._select_runend_from(start, 1) - j
        if j == 0:
            return 0
        return max(0, self._tail(j - 1) - j)

    def _select_runend_from(self, start: int, k: int) -> int:
        """Slot of the ``k``-th (1-indexed) runend at positions ``>= start``."""
        b = start >> 6
        word = (self.runends[b] >> (start & 63)) << (start & 63)
        while True:
            c = word.bit_count()
            if k <= c:
                for _ in range(k - 1):
                    word &= word - 1
                return (b << 6) + (word & -word).bit_length() - 1
            k -= c
            b += 1
            word = self.runends[b]

    def _tail(self, x: int) -> int:
        """Runend of the last occupied quotient ``<= x``.

        When that run ended before ``x``'s block the exact position is not
        needed by any caller, and ``block_start - 1`` is returned instead.
        """
        if x < 0:
            return -1
        b = x >> 6
        j = b << 6
        off = self.offset(b)
        occ = self.occupieds[b]
        d = (occ & ((2 << (x & 63)) - 1)).bit_count()
        start = j + off
        if d == 0:
            if off > 0 or self.runends[b] & 1:
                return start
            return j - 1
        if not occ & 1 and self.is_runend(start):
            d += 1
        return self._select_runend_from(start, d)

    def find_runend(self, q: int) -> Optional[int]:
        if not self.is_occupied(q):
            return None
        return self._tail(q)

    def run_bounds(self, q: int) -> Optional[tuple[int, int]]:
        """Inclusive ``(first, last)`` slots of ``q``'s run, or None."""
        if not (self.occupieds[q >> 6] >> (q & 63)) & 1:
            return None
        end = self._tail(q)
        if end == q:
            return q, q
        # The previous runend bit before ``end`` closes the preceding run.
        lo = q
        prev = -1
        b = (end - 1) >> 6
        hi_bit = (end - 1) & 63
        while b >= (lo >> 6):
            word = self.runends[b] & ((2 << hi_bit) - 1)
            if b == lo >> 6:
                word = (word >> (lo & 63)) << (lo & 63)
            if word:
                prev = (b << 6) + word.bit_length() - 1
                break
            b -= 1
            hi_bit = 63
        return max(q, prev + 1), end

    def run_scan(self, q: int) -> list[tuple[int, int]]:
        bounds = self.run_bounds(q)
        if bounds is None:
            return []
        return [(s, self.get_remainder(s)) for s in range(bounds[0], bounds[1] + 1)]

    def run_contains(self, first: int, last: int, r: int) -> bool:
        """True if any slot in ``[first, last]`` holds remainder ``r``.

        Walks the packed remainder words directly instead of per-slot reads.
        """
        rbits, rmask = self.rbits, self._rmask
        s = first
        while s <= last:
            b = s >> 6
            stop = min(last, (b << 6) + 63)
            w = self.remainders[b] >> ((s & 63) * rbits)
            for _ in range(stop - s + 1):
                if w & rmask == r:
                    return True
                w >>= rbits
            s = stop + 1
        return False

    def first_empty(self, slot: int) -> int:
        while True:
            self._grow(slot)
            t = self._tail(slot)
            if t < slot:
                return slot
            slot = t + 1

    # -- insertion ------------------------------------------------------------

    def insert_remainder(self, q: int, r: int) -> tuple[int, range]:
        """Store ``r`` at the end of ``q``'s run.

        Returns the slot the remainder landed in and the range of source slots
        whose contents moved one slot to the right.
        """
        if not 0 <= q < self.nslots:
            raise ValueError(f"quotient {q} out of range")
        if self.occupancy >= self.nslots:
            raise FilterFull(f"all {self.nslots} slots are in use")
        occupied = self.is_occupied(q)
        t = self._tail(q)
        s = t + 1 if occupied else max(q, t + 1)
        e = self.first_empty(s)
        if e > s:
            self._shift_fields(self.remainders, self.rbits, s, e)
            self._shift_fields(self.runends, 1, s, e)
        self.set_remainder(s, r)
        b, i = s >> 6, s & 63
        if occupied:
            p = s - 1
            self.runends[p >> 6] &= ~(1 << (p & 63))
        else:
            self.occupieds[q >> 6] |= 1 << (q & 63)
        self.runends[b] |= 1 << i
        self.occupancy += 1
        for blk in range((q + 63) >> 6, (e >> 6) + 1):
            self.offsets[blk] = min(OFFSET_MAX, self._compute_offset(blk))
        return s, range(s, e)

    @staticmethod
    def _shift_fields(words: list[int], width: int, s: int, e: int) -> None:
        """Move packed fields at slots ``[s, e)`` to ``[s+1, e+1)``; slot ``s`` is cleared."""
        fmask = (1 << width) - 1
        for b in range(e >> 6, (s >> 6) - 1, -1):
            base = b << 6
            a = max(s, base) - base
            z = min(e, base + 63) - base
            w = words[b]
            seg = (w >> (a * width)) & ((1 << ((z - a) * width)) - 1)
            carry = 0
            if base > s:
                carry = (words[b - 1] >> (63 * width)) & fmask
            clear = ((1 << ((z - a + 1) * width)) - 1) << (a * width)
            words[b] = (w & ~clear) | (seg << ((a + 1) * width)) | (carry << (a * width))

    # -- debugging ------------------------------------------------------------

    def dump(self) -> list[str]:
        """``blockidx,occupieds_hex,runends_hex,offset,sidecar_hex,remainders_hex`` per block."""
        rhex = (64 * self.rbits + 3) // 4
        return [
            f"{b},{self.occupieds[b]:016x},{self.runends[b]:016x},{self.offsets[b]},"
            f"{self.sidecars[b]:014x},{self.remainders[b]:0{rhex}x}"
            for b in range(self.physical_blocks)
        ]

    def bits(self, sidecar_bits: int = 0) -> int:
        """Local state size in bits over all physical blocks."""
        per_block = 64 * self.rbits + 2 * 64 + 8 + sidecar_bits
        return per_block * self.physical_blocks
