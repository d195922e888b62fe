"""Key and query-stream generators.

Member keys have bit 63 clear and query keys have it set, so every generated
query stream is disjoint from every generated member set by construction.

The ``zipf`` and ``activeset`` kinds are simplified stand-ins for the
power-law and active-set Firehose generators.  They only try to reproduce
the repetition structure; rows produced from them are labelled
``approx-firehose``.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass
from itertools import accumulate
from typing import Optional

KINDS = ("uniform", "zipf", "activeset", "adversarial")
QUERY_BIT = 1 << 63
APPROX_KINDS = ("zipf", "activeset")


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "uniform"
    unique: int = 1000  # A, number of distinct query keys
    s_size: int = 1000  # |S|
    zipf_s: float = 1.0
    repetitions: float = 57.0  # active-set mean occurrences per key
    trend_width: float = 200.0  # active-set spread, in key arrivals
    stream_len: Optional[int] = None
    seed: int = 0

    @property
    def as_ratio(self) -> float:
        return self.unique / self.s_size if self.s_size else float("inf")

    @property
    def label(self) -> str:
        return "approx-firehose" if self.kind in APPROX_KINDS else self.kind

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown workload kind {self.kind!r}")
        if self.unique < 0 or self.s_size < 0:
            raise InvalidSpec("counts must be non-negative")
        if self.kind == "zipf" and self.zipf_s <= 0:
            raise InvalidSpec("zipf exponent must be positive")
        if self.kind == "activeset" and (self.repetitions < 1 or self.trend_width <= 0):
            raise InvalidSpec("active-set needs repetitions >= 1 and a positive trend width")
        if self.stream_len is not None and self.stream_len < self.unique:
            raise InvalidSpec("stream shorter than the unique-key count")


def member_keys(n: int, seed: int) -> list[int]:
    """``n`` distinct keys with bit 63 clear."""
    rng = random.Random(f"members:{seed}")
    out: set[int] = set()
    while len(out) < n:
        out.add(rng.getrandbits(63))
    keys = list(out)
    rng.shuffle(keys)
    return keys


def query_keys(n: int, seed: int) -> list[int]:
    """``n`` distinct keys with bit 63 set (never members)."""
    rng = random.Random(f"queries:{seed}")
    out: dict[int, None] = {}
    while len(out) < n:
        out[QUERY_BIT | rng.getrandbits(63)] = None
    return list(out)


def gen_workload(spec: WorkloadSpec) -> list[int]:
    """Deterministic query stream with exactly ``spec.unique`` distinct keys."""
    spec.validate()
    keys = query_keys(spec.unique, spec.seed)
    rng = random.Random(f"stream:{spec.kind}:{spec.seed}")
    if spec.kind in ("uniform", "adversarial") or not keys:
        return keys
    if spec.kind == "zipf":
        return _zipf(keys, spec, rng)
    return _activeset(keys, spec, rng)


def _zipf(keys: list[int], spec: WorkloadSpec, rng: random.Random) -> list[int]:
    # Every key appears once so the unique count is exact; the remaining
    # draws follow rank^-s, with key i holding rank i + 1.
    length = spec.stream_len if spec.stream_len is not None else 10 * len(keys)
    cum = list(accumulate((i + 1) ** -spec.zipf_s for i in range(len(keys))))
    total = cum[-1]
    stream = list(keys)
    for _ in range(length - len(keys)):
        stream.append(keys[min(bisect_left(cum, rng.random() * total), len(keys) - 1)])
    rng.shuffle(stream)
    return stream


def _activeset(keys: list[int], spec: WorkloadSpec, rng: random.Random) -> list[int]:
    # Keys arrive one after another (churn = 1/repetitions new keys per
    # query) and each stays popular for a bell-shaped window around its
    # arrival.  Occurrence counts are geometric with the configured mean.
    p = 1.0 / spec.repetitions
    events = []
    for i, k in enumerate(keys):
        count = 1
        while rng.random() >= p:
            count += 1
        events.append((float(i), k))
        for _ in range(count - 1):
            events.append((i + rng.gauss(0.0, spec.trend_width), k))
    events.sort(key=lambda e: e[0])
    stream = [k for _, k in events]
    if spec.stream_len is not None:
        stream = _fit_length(stream, keys, spec.stream_len)
    return stream


def _fit_length(stream: list[int], keys: list[int], length: int) -> list[int]:
    """Trim or pad a stream while keeping every key in it."""
    if len(stream) <= length:
        return stream + stream[: length - len(stream)]
    seen: set[int] = set()
    firsts = []
    for i, k in enumerate(stream):
        if k not in seen:
            seen.add(k)
            firsts.append(i)
    spare = length - len(firsts)
    keep = set(firsts)
    for i in range(len(stream)):
        if spare <= 0:
            break
        if i not in keep:
            keep.add(i)
            spare -= 1
    return [stream[i] for i in sorted(keep)]


def read_replay(path: str) -> list[int]:
    """One decimal 64-bit key per line; blank lines are skipped."""
    out = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            key = int(line)
            if not 0 <= key < 1 << 64:
                raise InvalidSpec(f"{path}:{n}: key out of 64-bit range")
            out.append(key)
    return out
