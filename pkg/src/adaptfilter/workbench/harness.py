"""Measurement procedures: FPR, adversarial rounds, selector distribution,
space and throughput."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable, Optional, Sequence

from adaptfilter.exaf import ExtensionFilter, UncompressedExtensionFilter
from adaptfilter.taf import TelescopingFilter, UncompressedTelescopingFilter
from adaptfilter.workbench.baselines import RsqfFilter
from adaptfilter.workbench.workloads import WorkloadSpec, gen_workload, member_keys

FILTERS = {
    "taf": TelescopingFilter,
    "utaf": UncompressedTelescopingFilter,
    "exaf": ExtensionFilter,
    "uexaf": UncompressedExtensionFilter,
    "rsqf": RsqfFilter,
}


class InvalidStream(ValueError):
    pass


def make_filter(name: str, qbits: int, rbits: int = 8, seed: int = 0, remote_delay_ns: int = 0):
    try:
        cls = FILTERS[name]
    except KeyError:
        raise ValueError(f"unknown filter {name!r}; choose from {sorted(FILTERS)}") from None
    return cls(qbits, rbits, seed=seed, remote_delay_ns=remote_delay_ns)


def populate(filt, load: float, seed: int = 0) -> tuple[list[int], float]:
    """Insert ``round(load * nslots)`` member keys; returns them and the elapsed seconds."""
    if not 0 <= load <= 1:
        raise ValueError("load must be in [0, 1]")
    keys = member_keys(round(load * filt.qf.nslots), seed)
    t0 = time.perf_counter()
    for k in keys:
        filt.insert(k)
    return keys, time.perf_counter() - t0


# -- false-positive rate ------------------------------------------------------


@dataclass
class FprReport:
    queries: int
    false_positives: int
    unique_queries: int
    unique_false_positives: int
    repeat_queries: int
    repeat_false_positives: int

    @property
    def overall(self) -> float:
        return self.false_positives / self.queries

    @property
    def unique(self) -> float:
        return self.unique_false_positives / self.unique_queries

    @property
    def repeat(self) -> Optional[float]:
        if not self.repeat_queries:
            return None
        return self.repeat_false_positives / self.repeat_queries


def measure_fpr(filt, stream: Sequence[int], members: Optional[Iterable[int]] = None) -> FprReport:
    """Run ``stream`` through the adaptive query path and count false positives.

    Every stream key must be a non-member, so any "present" verdict is a
    false positive.  Pass ``members`` to have that checked.
    """
    if not stream:
        raise InvalidStream("empty stream")
    if members is not None:
        mset = set(members)
        if any(k in mset for k in stream):
            raise InvalidStream("stream contains member keys")
    seen: set[int] = set()
    fp = ufp = rfp = uq = 0
    for k in stream:
        present = filt.query(k).present
        if k in seen:
            rfp += present
        else:
            seen.add(k)
            uq += 1
            ufp += present
        fp += present
    return FprReport(len(stream), fp, uq, ufp, len(stream) - uq, rfp)


# -- adversarial rounds -------------------------------------------------------


@dataclass
class AdversarialResult:
    sizes: list[int] = field(default_factory=list)  # |Q| at the start of each round
    query_counts: list[int] = field(default_factory=list)
    fp_counts: list[int] = field(default_factory=list)

    @property
    def fprs(self) -> list[float]:
        return [f / q for f, q in zip(self.fp_counts, self.query_counts)]

    @property
    def final_round_fpr(self) -> Optional[float]:
        return self.fprs[-1] if self.fprs else None

    @property
    def rounds(self) -> int:
        return len(self.sizes)


def adversarial_rounds(filt, q0: Sequence[int], s_size: int, max_rounds: int = 50, subrounds: int = 10,
                       stop_ratio: float = 0.01) -> AdversarialResult:
    """Repeated rounds over a shrinking query set.

    A round is ``subrounds`` passes over every surviving key.  After the round
    any key that never came back "present" is dropped.  Rounds continue until
    ``|Q| / |S| <= stop_ratio`` or ``max_rounds`` rounds ran.
    """
    out = AdversarialResult()
    survivors = list(q0)
    while survivors and len(out.sizes) < max_rounds:
        if len(out.sizes) and len(survivors) <= stop_ratio * s_size:
            break
        hit = [False] * len(survivors)
        fps = 0
        for _ in range(subrounds):
            for i, k in enumerate(survivors):
                if filt.query(k).present:
                    fps += 1
                    hit[i] = True
        out.sizes.append(len(survivors))
        out.query_counts.append(subrounds * len(survivors))
        out.fp_counts.append(fps)
        survivors = [k for k, h in zip(survivors, hit) if h]
    return out


# -- selector distribution ----------------------------------------------------


def selector_bound(k: int, c: float, eps: float) -> float:
    """Upper bound on P(v = k) for k >= 1: eps^k * sum_{i=1..k} c^i / i!."""
    return eps**k * sum(c**i / math.factorial(i) for i in range(1, k + 1))


@dataclass
class DistReport:
    elements: int
    p_hat: list[float]
    p0_expected: float
    sigma: float
    bounds: dict[int, float]
    tolerance: float

    @property
    def p0_ok(self) -> bool:
        return abs(self.p_hat[0] - self.p0_expected) <= 3 * self.sigma + 1e-12

    @property
    def tail_ok(self) -> bool:
        return all(self._p(k) <= b * (1 + self.tolerance) for k, b in self.bounds.items())

    @property
    def passed(self) -> bool:
        return self.p0_ok and self.tail_ok

    def _p(self, k: int) -> float:
        return self.p_hat[k] if k < len(self.p_hat) else 0.0

    def lines(self) -> list[str]:
        out = [f"P(v=0) = {self.p_hat[0]:.6f}, expected {self.p0_expected:.6f} +- {3 * self.sigma:.6f}"]
        for k, b in self.bounds.items():
            out.append(f"P(v={k}) = {self._p(k):.6f}, bound {b:.6f} (x{1 + self.tolerance:g})")
        return out


def distribution_report(histogram: Sequence[int], eps: float, nslots: int, queries: int, c: float,
                        tolerance: float = 0.25, ks: Sequence[int] = (1, 2, 3)) -> DistReport:
    """Compare a selector histogram with the post-query selector distribution.

    Each unique negative query hard-collides with a given stored element with
    probability ``eps / nslots``, so ``P(v=0) = (1 - eps/nslots) ** queries``.
    """
    total = sum(histogram)
    if total == 0:
        raise ValueError("empty histogram")
    p_hat = [h / total for h in histogram]
    p0 = (1 - eps / nslots) ** queries
    sigma = math.sqrt(p0 * (1 - p0) / total)
    bounds = {k: selector_bound(k, c, eps) for k in ks}
    return DistReport(total, p_hat, p0, sigma, bounds, tolerance)


def run_selector_workload(qbits: int, c: float, seed: int, rbits: int = 8, load: float = 0.95,
                          filter_cls=TelescopingFilter):
    """Fill a filter and run ``c * |S|`` unique negative queries through it."""
    filt = filter_cls(qbits, rbits, seed=seed)
    members, _ = populate(filt, load, seed)
    n_queries = round(c * len(members))
    stream = gen_workload(WorkloadSpec("uniform", n_queries, len(members), seed=seed))
    for k in stream:
        filt.query(k)
    return filt, n_queries


def selector_distribution_check(filt, c: float, queries: Optional[int] = None,
                                tolerance: float = 0.25) -> DistReport:
    """Check a TAF that has just answered ``queries`` unique negatives (default ``c * |S|``)."""
    if queries is None:
        queries = round(c * filt.occupancy)
    return distribution_report(filt.histogram(), filt.params.eps, filt.qf.nslots, queries, c, tolerance)


def entropy(histogram: Sequence[int]) -> float:
    """Empirical entropy in bits per element, sum p log2(1/p)."""
    total = sum(histogram)
    return -sum(h / total * math.log2(h / total) for h in histogram if h)


# -- throughput ---------------------------------------------------------------


@dataclass
class ThroughputRow:
    filter: str
    load: float
    insert_ops_per_sec: float
    query_ops_per_sec: float
    runs: int


def throughput(factory: Callable[[], object], stream: Sequence[int], loads: Sequence[float], runs: int = 1,
               seed: int = 0) -> list[ThroughputRow]:
    """Wall-clock inserts/sec and queries/sec at each load, averaged over ``runs``."""
    if not stream:
        raise InvalidStream("empty stream")
    rows = []
    for load in loads:
        ins, qs = [], []
        name = ""
        for r in range(runs):
            filt = factory()
            name = filt.name
            members, secs = populate(filt, load, seed + r)
            ins.append(len(members) / secs if secs > 0 else float("inf"))
            query = filt.query
            t0 = time.perf_counter()
            for k in stream:
                query(k)
            qs.append(len(stream) / (time.perf_counter() - t0))
        rows.append(ThroughputRow(name, load, sum(ins) / runs, sum(qs) / runs, runs))
    return rows


# -- CSV rows -----------------------------------------------------------------


@dataclass
class MetricsRow:
    filter: str
    workload: str
    as_ratio: float
    load: float
    eps: float
    fpr: Optional[float] = None
    final_round_fpr: Optional[float] = None
    bits_per_element: Optional[float] = None
    rebuilds: int = 0
    adapts: int = 0
    insert_ops_per_sec: Optional[float] = None
    query_ops_per_sec: Optional[float] = None
    seed: int = 0

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(f"{v:.6g}")
            else:
                out.append(v)
        return out


def space_row(filt, workload: str = "none", seed: int = 0) -> MetricsRow:
    n = filt.occupancy
    return MetricsRow(
        filter=filt.name,
        workload=workload,
        as_ratio=0.0,
        load=filt.load_factor,
        eps=filt.params.eps,
        bits_per_element=filt.bits() / n if n else None,
        rebuilds=filt.rebuilds,
        adapts=filt.adapts,
        seed=seed,
    )
