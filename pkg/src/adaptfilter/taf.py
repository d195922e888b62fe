"""Telescoping adaptive filter.

Every stored element carries a hash-selector value ``i``; its live remainder is
hash chunk ``i`` instead of chunk 0.  A verified false positive bumps the
selector of every stored element it collided with, so the next query for the
same key has to match a fresh, independent chunk.  The 64 selectors of a block
are arithmetic-coded into the block's 56-bit sidecar; when they no longer fit
the block is rebuilt (all selectors back to 0) and the triggering false
positive is fixed again.

Slots keep their *current* remainder explicitly, so lookups need the decoded
selectors but never rehash stored keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from adaptfilter.bitrsqf import SIDECAR_BITS, QuotientFilter
from adaptfilter.hashkit import FingerprintParams, hash128, max_selector
from adaptfilter.intcoder import (
    CodeOverflow,
    Fixed256,
    Geometric,
    SelectorModel,
    decode_selectors,
    encode_selectors,
)
from adaptfilter.remote import RemoteStore

ZEROS = (0,) * 64


@dataclass(frozen=True)
class QueryOutcome:
    present: bool
    was_false_positive: bool = False
    adapted: bool = False
    rebuilt: bool = False


@dataclass
class FilterStats:
    load_factor: float
    bits_per_element: float
    bits_per_slot: float
    rebuilds: int
    adapts: int
    false_positives: int
    histogram: list[int] = field(default_factory=list)


class AdaptiveFilter:
    """Machinery shared by the adaptive filters: hashing, inserts with
    metadata migration, the remote store and instrumentation.

    Subclasses define the per-slot metadata (``_zero``), how a block's 64
    values are loaded and stored, and the lookup/adapt policy.
    """

    name = "adaptive"
    _zero: object = 0

    def __init__(self, qbits: int, rbits: int, seed: int = 0, remote_delay_ns: int = 0):
        self.qf = QuotientFilter(qbits, rbits)
        self.params: FingerprintParams = self.qf.params
        self.seed = seed
        self.remote = RemoteStore(self.qf.nslots, qbits, remote_delay_ns)
        self.rebuilds = 0
        self.adapts = 0
        self.false_positives = 0
        # Blocks whose adaptivity state was reset, directly or by shifting in
        # slots from a reset block.
        self.reset_blocks: set[int] = set()
        self._qbits = qbits
        self._rbits = rbits
        self._qmask = (1 << qbits) - 1
        self._rmask = (1 << rbits) - 1

    # -- storage hooks ------------------------------------------------------

    def _load(self, b: int, n: int = 64) -> Sequence:
        raise NotImplementedError

    def _store(self, b: int, values: Sequence) -> bool:
        raise NotImplementedError

    def _sidecar_bits(self) -> int:
        return SIDECAR_BITS

    def _is_blank(self, b: int) -> bool:
        """True when block ``b`` holds only the zero value (cheap check)."""
        return self.qf.sidecars[b] == 0

    # -- public API ---------------------------------------------------------

    @property
    def occupancy(self) -> int:
        return self.qf.occupancy

    @property
    def load_factor(self) -> float:
        return self.qf.load_factor

    def insert(self, key: int) -> None:
        h = hash128(key, self.seed)
        q = h & self._qmask
        slot, moved = self.qf.insert_remainder(q, (h >> self._qbits) & self._rmask)
        self.remote.shift(moved)
        self.remote.place(slot, key, h)
        if moved:
            self._migrate(moved.start, moved.stop)

    def bits(self) -> int:
        return self.qf.bits(self._sidecar_bits())

    # -- internals ----------------------------------------------------------

    def _migrate(self, s: int, e: int) -> None:
        """Shift per-slot metadata of ``[s, e)`` one slot right, as the remainders were."""
        bs, be = s >> 6, e >> 6
        blocks = range(bs, be + 1)
        tainted = [b for b in blocks if b in self.reset_blocks]
        if tainted:
            self.reset_blocks.update(range(tainted[0], be + 1))
        if all(self._is_blank(b) for b in blocks):
            return
        flat: list = []
        for b in blocks:
            flat.extend(self._load(b))
        old = flat[:]
        i, j = s - (bs << 6), e - (bs << 6)
        flat[i + 1 : j + 1] = flat[i:j]
        flat[i] = self._zero
        for n, b in enumerate(blocks):
            chunk = flat[n * 64 : n * 64 + 64]
            if chunk == old[n * 64 : n * 64 + 64]:
                continue
            if not self._store(b, chunk):
                self.rebuild_block(b)

    def _hash_at(self, slot: int) -> int:
        return self.remote.slots[slot][1]

    def _group_by_block(self, slots: Iterable[int]) -> dict[int, list[int]]:
        groups: dict[int, list[int]] = {}
        for s in slots:
            groups.setdefault(s >> 6, []).append(s)
        return groups

    def rebuild_block(self, b: int, then_fix: Iterable[int] = ()) -> None:
        raise NotImplementedError


class TelescopingFilter(AdaptiveFilter):
    """TAF: selectors coded per block with an integer arithmetic coder."""

    name = "taf"

    def __init__(
        self,
        qbits: int,
        rbits: int = 8,
        model: Optional[SelectorModel] = None,
        seed: int = 0,
        remote_delay_ns: int = 0,
    ):
        super().__init__(qbits, rbits, seed, remote_delay_ns)
        if model is None:
            model = Fixed256() if rbits == 8 else Geometric()
        self.model = model
        self.selector_cap = min(max_selector(self.params), self._model_cap())

    def _model_cap(self) -> int:
        return self.model.max_letter

    def _load(self, b: int, n: int = 64) -> Sequence[int]:
        code = self.qf.sidecars[b]
        if code == 0:
            return ZEROS
        return decode_selectors(code, self.model, n)

    def _store(self, b: int, values: Sequence[int]) -> bool:
        try:
            code = encode_selectors(values, self.model)
        except CodeOverflow:
            return False
        self.qf.sidecars[b] = code
        return True

    def selectors(self, b: int) -> list[int]:
        return list(self._load(b))

    def _chunk(self, h: int, i: int) -> int:
        return (h >> (self._qbits + i * self._rbits)) & self._rmask

    def lookup(self, key: int) -> bool:
        h = hash128(key, self.seed)
        qf = self.qf
        q = h & self._qmask
        if not (qf.occupieds[q >> 6] >> (q & 63)) & 1:
            return False
        first, last = qf.run_bounds(q)
        hq = h >> self._qbits
        rbits, rmask = self._rbits, self._rmask
        get = qf.get_remainder
        b = -1
        sels: Sequence[int] = ZEROS
        for s in range(first, last + 1):
            if s >> 6 != b:
                b = s >> 6
                sels = self._load(b, (last & 63) + 1 if last >> 6 == b else 64)
            if get(s) == (hq >> (sels[s & 63] * rbits)) & rmask:
                return True
        return False

    def query(self, key: int) -> QueryOutcome:
        """Lookup that verifies positives remotely and adapts on false positives."""
        h = hash128(key, self.seed)
        qf = self.qf
        q = h & self._qmask
        if not (qf.occupieds[q >> 6] >> (q & 63)) & 1:
            return QueryOutcome(False)
        first, last = qf.run_bounds(q)
        hq = h >> self._qbits
        rbits, rmask = self._rbits, self._rmask
        get = qf.get_remainder
        b = -1
        sels: Sequence[int] = ZEROS
        run = []
        hit = False
        for s in range(first, last + 1):
            if s >> 6 != b:
                b = s >> 6
                sels = self._load(b, (last & 63) + 1 if last >> 6 == b else 64)
            matched = get(s) == (hq >> (sels[s & 63] * rbits)) & rmask
            hit = hit or matched
            run.append((s, matched))
        if not hit:
            return QueryOutcome(False)
        member, colliding = self.remote.collisions(run, key, h)
        if member:
            return QueryOutcome(True)
        self.false_positives += 1
        adapted, rebuilt = self._adapt(colliding)
        return QueryOutcome(True, True, adapted, rebuilt)

    def _adapt(self, colliding: list[int]) -> tuple[bool, bool]:
        if not colliding or self.selector_cap < 1:
            return False, False
        rebuilt = False
        for b, slots in self._group_by_block(colliding).items():
            new = list(self._load(b))
            fits = True
            for s in slots:
                v = new[s & 63] + 1
                if v > self.selector_cap:
                    fits = False
                    break
                new[s & 63] = v
            if fits and self._store(b, new):
                for s in slots:
                    self.qf.set_remainder(s, self._chunk(self._hash_at(s), new[s & 63]))
            else:
                self.rebuild_block(b, then_fix=slots)
                rebuilt = True
            self.adapts += len(slots)
        return True, rebuilt

    def rebuild_block(self, b: int, then_fix: Iterable[int] = ()) -> None:
        """Reset every selector of block ``b`` to 0, then set ``then_fix`` slots to 1."""
        base = b << 6
        slots = self.remote.slots
        for s in range(base, min(base + 64, len(slots))):
            if slots[s] is not None:
                self.qf.set_remainder(s, self._chunk(slots[s][1], 0))
        new = [0] * 64
        if self.selector_cap >= 1:
            for s in then_fix:
                new[s - base] = 1
                self.qf.set_remainder(s, self._chunk(slots[s][1], 1))
        if not self._store(b, new):
            raise AssertionError(f"block {b} cannot hold its rebuilt selectors")
        self.rebuilds += 1
        self.reset_blocks.add(b)

    def histogram(self) -> list[int]:
        """Count of stored elements per selector value."""
        hist = [0] * (self.selector_cap + 1)
        slots = self.remote.slots
        for b in range(self.qf.physical_blocks):
            base = b << 6
            for i, v in enumerate(self._load(b)):
                if base + i < len(slots) and slots[base + i] is not None:
                    hist[v] += 1
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


class UncompressedTelescopingFilter(TelescopingFilter):
    """uTAF: identical policy, selectors kept in a plain per-block list.

    Only the hash width limits selectors, so it never rebuilds in practice.
    """

    name = "utaf"

    def __init__(self, qbits: int, rbits: int = 8, model: Optional[SelectorModel] = None, seed: int = 0,
                 remote_delay_ns: int = 0):
        self._plain: list[list[int]] = []
        super().__init__(qbits, rbits, model, seed, remote_delay_ns)

    def _model_cap(self) -> int:
        return max_selector(self.params)

    def _is_blank(self, b: int) -> bool:
        return b >= len(self._plain) or not any(self._plain[b])

    def _load(self, b: int, n: int = 64) -> Sequence[int]:
        if b >= len(self._plain):
            return ZEROS
        return self._plain[b]

    def _store(self, b: int, values: Sequence[int]) -> bool:
        while b >= len(self._plain):
            self._plain.append([0] * 64)
        self._plain[b] = list(values)
        return True

    def _sidecar_bits(self) -> int:
        return 64 * 8
