"""Non-adaptive comparison filter."""

from __future__ import annotations

from adaptfilter.bitrsqf import QuotientFilter
from adaptfilter.hashkit import hash128
from adaptfilter.taf import QueryOutcome

_PRESENT = QueryOutcome(True)
_ABSENT = QueryOutcome(False)


class RsqfFilter:
    """Plain rank-and-select quotient filter over the same substrate.

    It never adapts and never consults a remote store, so a key that is a
    false positive once stays one forever.  ``query`` is ``lookup`` wrapped
    in a :class:`QueryOutcome`; callers that know the key is a non-member
    score the verdict themselves.
    """

    name = "rsqf"

    def __init__(self, qbits: int, rbits: int = 8, seed: int = 0, **_ignored):
        self.qf = QuotientFilter(qbits, rbits)
        self.params = self.qf.params
        self.seed = seed
        self.rebuilds = 0
        self.adapts = 0
        self.false_positives = 0
        self._qbits = qbits
        self._qmask = (1 << qbits) - 1
        self._rmask = (1 << rbits) - 1

    @property
    def occupancy(self) -> int:
        return self.qf.occupancy

    @property
    def load_factor(self) -> float:
        return self.qf.load_factor

    def insert(self, key: int) -> None:
        h = hash128(key, self.seed)
        self.qf.insert_remainder(h & self._qmask, (h >> self._qbits) & self._rmask)

    def lookup(self, key: int) -> bool:
        h = hash128(key, self.seed)
        qf = self.qf
        q = h & self._qmask
        if not (qf.occupieds[q >> 6] >> (q & 63)) & 1:
            return False
        first, last = qf.run_bounds(q)
        return qf.run_contains(first, last, (h >> self._qbits) & self._rmask)

    def query(self, key: int) -> QueryOutcome:
        return _PRESENT if self.lookup(key) else _ABSENT

    def bits(self) -> int:
        return self.qf.bits(0)
