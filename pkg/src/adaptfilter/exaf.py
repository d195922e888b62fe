"""Extension adaptive filter (a blocked broom filter).

Stored fingerprints start as quotient + remainder chunk 0.  A false positive
against ``x`` lengthens ``x``'s fingerprint with hash bits that follow chunk 0,
up to and including the first bit where ``x`` and the query differ, so that
query can never match ``x`` again.  Extensions live in the block's 56-bit
arithmetic code.  Lookups compare base remainders first and decode a block
only when one matches.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from adaptfilter.hashkit import HASH_BITS, hash128
from adaptfilter.intcoder import (
    EMPTY_EXTENSION,
    CodeOverflow,
    Extension,
    ExtensionModel,
    decode_extensions,
    encode_extensions,
)
from adaptfilter.taf import AdaptiveFilter, FilterStats, QueryOutcome

EMPTY_BLOCK = (EMPTY_EXTENSION,) * 64


class ExtensionFilter(AdaptiveFilter):
    name = "exaf"
    _zero = EMPTY_EXTENSION

    def __init__(
        self,
        qbits: int,
        rbits: int = 8,
        model: Optional[ExtensionModel] = None,
        seed: int = 0,
        remote_delay_ns: int = 0,
    ):
        super().__init__(qbits, rbits, seed, remote_delay_ns)
        self.model = model or ExtensionModel()
        self.ext_base = self.params.extension_base
        self.length_cap = min(self._model_cap(), HASH_BITS - self.ext_base)
        self.hash_collisions = 0

    def _model_cap(self) -> int:
        return self.model.max_length

    def _load(self, b: int, n: int = 64) -> Sequence[Extension]:
        code = self.qf.sidecars[b]
        if code == 0:
            return EMPTY_BLOCK
        return decode_extensions(code, self.model, n)

    def _store(self, b: int, values: Sequence[Extension]) -> bool:
        try:
            code = encode_extensions(values, self.model)
        except CodeOverflow:
            return False
        self.qf.sidecars[b] = code
        return True

    def extensions(self, b: int) -> list[Extension]:
        return list(self._load(b))

    def _candidates(self, h: int) -> Optional[tuple[int, int, list[int]]]:
        qf = self.qf
        q = h & self._qmask
        if not (qf.occupieds[q >> 6] >> (q & 63)) & 1:
            return None
        first, last = qf.run_bounds(q)
        r = (h >> self._qbits) & self._rmask
        get = qf.get_remainder
        return first, last, [s for s in range(first, last + 1) if get(s) == r]

    def _extension_matches(self, h: int, slots: list[int]) -> list[int]:
        tail = h >> self.ext_base
        out = []
        b = -1
        exts: Sequence[Extension] = EMPTY_BLOCK
        for s in slots:
            if s >> 6 != b:
                b = s >> 6
                exts = self._load(b, (slots[-1] & 63) + 1 if slots[-1] >> 6 == b else 64)
            n, value = exts[s & 63]
            if tail & ((1 << n) - 1) == value:
                out.append(s)
        return out

    def lookup(self, key: int) -> bool:
        h = hash128(key, self.seed)
        found = self._candidates(h)
        if found is None or not found[2]:
            return False
        return bool(self._extension_matches(h, found[2]))

    def query(self, key: int) -> QueryOutcome:
        h = hash128(key, self.seed)
        found = self._candidates(h)
        if found is None or not found[2]:
            return QueryOutcome(False)
        first, last, cands = found
        matched = set(self._extension_matches(h, cands))
        if not matched:
            return QueryOutcome(False)
        run = [(s, s in matched) for s in range(first, last + 1)]
        member, colliding = self.remote.collisions(run, key, h)
        if member:
            return QueryOutcome(True)
        self.false_positives += 1
        adapted, rebuilt = self._adapt(colliding, h)
        return QueryOutcome(True, True, adapted, rebuilt)

    def _distinguishing(self, stored: int, query: int, start: int) -> Optional[Extension]:
        """Shortest extension of ``stored`` past ``start`` bits that ``query`` does not share."""
        diff = (stored ^ query) >> (self.ext_base + start)
        if diff == 0:
            return None
        n = start + (diff & -diff).bit_length()
        if n > self.length_cap:
            return (n, -1)
        return n, (stored >> self.ext_base) & ((1 << n) - 1)

    def _adapt(self, colliding: list[int], h: int) -> tuple[bool, bool]:
        if not colliding:
            return False, False
        rebuilt = False
        adapted = False
        for b, slots in self._group_by_block(colliding).items():
            new = list(self._load(b))
            fits = True
            for s in slots:
                ext = self._distinguishing(self._hash_at(s), h, new[s & 63][0])
                if ext is None:
                    self.hash_collisions += 1
                    fits = False
                    break
                if ext[1] < 0:
                    fits = False
                    break
                new[s & 63] = ext
            if fits and self._store(b, new):
                adapted = True
                self.adapts += len(slots)
            else:
                fixed = self.rebuild_block(b, then_fix=slots, against=h)
                adapted = adapted or fixed > 0
                self.adapts += fixed
                rebuilt = True
        return adapted, rebuilt

    def rebuild_block(self, b: int, then_fix: Iterable[int] = (), against: Optional[int] = None) -> int:
        """Clear every extension in block ``b``; re-extend ``then_fix`` slots against ``against``.

        Returns how many of the requested slots were re-fixed.
        """
        new = list(EMPTY_BLOCK)
        fixed = 0
        if against is not None:
            for s in then_fix:
                ext = self._distinguishing(self._hash_at(s), against, 0)
                if ext is not None and ext[1] >= 0:
                    new[s & 63] = ext
                    fixed += 1
        if not self._store(b, new):
            raise AssertionError(f"block {b} cannot hold its rebuilt extensions")
        self.rebuilds += 1
        self.reset_blocks.add(b)
        return fixed

    def histogram(self) -> list[int]:
        """Count of stored elements per extension length."""
        hist = [0] * (self.length_cap + 1)
        slots = self.remote.slots
        for b in range(self.qf.physical_blocks):
            base = b << 6
            for i, (n, _) in enumerate(self._load(b)):
                if base + i < len(slots) and slots[base + i] is not None:
                    hist[n] += 1
        return hist

    def stats(self) -> FilterStats:
        total = self.bits()
        n = self.occupancy
        return FilterStats(
            load_factor=self.load_factor,
            bits_per_element=total / n if n else float("inf"),
            bits_per_slot=total / self.qf.nslots,
            rebuilds=self.rebuilds,
            adapts=self.adapts,
            false_positives=self.false_positives,
            histogram=self.histogram(),
        )


class UncompressedExtensionFilter(ExtensionFilter):
    """Mirror of :class:`ExtensionFilter` with extensions in plain lists."""

    name = "uexaf"

    def __init__(self, qbits: int, rbits: int = 8, model: Optional[ExtensionModel] = None, seed: int = 0,
                 remote_delay_ns: int = 0):
        self._plain: list[list[Extension]] = []
        super().__init__(qbits, rbits, model, seed, remote_delay_ns)

    def _is_blank(self, b: int) -> bool:
        return b >= len(self._plain) or all(e == EMPTY_EXTENSION for e in self._plain[b])

    def _load(self, b: int, n: int = 64) -> Sequence[Extension]:
        if b >= len(self._plain):
            return EMPTY_BLOCK
        return self._plain[b]

    def _store(self, b: int, values: Sequence[Extension]) -> bool:
        while b >= len(self._plain):
            self._plain.append(list(EMPTY_BLOCK))
        self._plain[b] = list(values)
        return True

    def _sidecar_bits(self) -> int:
        return 64 * 16
