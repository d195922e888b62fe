"""Slot-aligned remote representation of the stored set.

Slot ``s`` of the store holds ``(key, hash)`` exactly when the local filter's
slot ``s`` holds that key's remainder.  It is consulted only to confirm
positives and to drive adapts, and is not counted as filter space.
"""

from __future__ import annotations

import time
from typing import Iterable, Optional


class RemoteStore:
    def __init__(self, nslots: int, qbits: int, delay_ns: int = 0):
        self.slots: list[Optional[tuple[int, int]]] = [None] * nslots
        self.qmask = (1 << qbits) - 1
        self.delay_ns = delay_ns
        self.accesses = 0

    def __len__(self) -> int:
        return len(self.slots)

    def _touch(self) -> None:
        self.accesses += 1
        if self.delay_ns:
            deadline = time.perf_counter_ns() + self.delay_ns
            while time.perf_counter_ns() < deadline:
                pass

    def _grow(self, slot: int) -> None:
        if slot >= len(self.slots):
            self.slots.extend([None] * (slot + 1 - len(self.slots)))

    def get(self, slot: int) -> Optional[tuple[int, int]]:
        if slot >= len(self.slots):
            return None
        return self.slots[slot]

    def place(self, slot: int, key: int, h: int) -> None:
        self._grow(slot)
        self.slots[slot] = (key, h)

    def shift(self, moved: range) -> None:
        """Mirror an insert that moved slots ``moved`` one position right."""
        if not moved:
            return
        s, e = moved.start, moved.stop
        self._grow(e)
        self.slots[s + 1 : e + 1] = self.slots[s:e]
        self.slots[s] = None

    def collisions(self, run: Iterable[tuple[int, bool]], key: int, h: int) -> tuple[bool, list[int]]:
        """Verify a positive.

        ``run`` lists ``(slot, matched)`` for the query's run, where ``matched``
        says the local fingerprint in that slot equals the query's.  Returns
        whether ``key`` itself is stored, and the matched slots holding other
        keys with the query's quotient.
        """
        self._touch()
        q = h & self.qmask
        member = False
        colliding = []
        for slot, matched in run:
            stored = self.slots[slot]
            if stored is None:
                continue
            if stored[0] == key:
                member = True
            elif matched and stored[1] & self.qmask == q:
                colliding.append(slot)
        return member, colliding
