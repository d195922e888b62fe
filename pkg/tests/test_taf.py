import random

import pytest

from adaptfilter.bitrsqf import FilterFull
from adaptfilter.hashkit import hash128, remainder
from adaptfilter.intcoder import Fixed256, Geometric, decode_selectors
from adaptfilter.taf import TelescopingFilter, UncompressedTelescopingFilter
from adaptfilter.workbench.workloads import member_keys, query_keys
from reference import check_sync, same_outcome


def check_remainders(f):
    """Every stored slot holds the chunk picked by its decoded selector."""
    for b in range(f.qf.physical_blocks):
        sels = f.selectors(b)
        for i, v in enumerate(sels):
            s = b * 64 + i
            stored = f.remote.get(s)
            if stored is not None:
                assert f.qf.get_remainder(s) == remainder(stored[1], f.params, v)


def find_collider(f, x, start=1 << 63):
    """A non-member key whose fingerprint under ``x``'s current selector matches ``x``."""
    h = hash128(x, f.seed)
    slot = next(s for s in range(len(f.remote)) if f.remote.get(s) and f.remote.get(s)[0] == x)
    v = f.selectors(slot >> 6)[slot & 63]
    q, r = h & f._qmask, remainder(h, f.params, v)
    k = start
    while True:
        k += 1
        g = hash128(k, f.seed)
        if g & f._qmask == q and remainder(g, f.params, v) == r:
            return k, slot


def test_new_filter_space():
    f = TelescopingFilter(16)
    assert f.qf.nslots == 65536
    assert f.bits() / f.qf.nslots == 8 + 3
    assert f.stats().histogram == [0] * 7
    assert f.stats().load_factor == 0
    assert isinstance(f.model, Fixed256)
    assert isinstance(TelescopingFilter(12, 6).model, Geometric)
    with pytest.raises(ValueError):
        TelescopingFilter(3)


def test_insert_then_present_and_full():
    f = TelescopingFilter(6)
    keys = member_keys(64, 0)
    for k in keys:
        f.insert(k)
    assert all(f.lookup(k) for k in keys)
    assert all(f.query(k).present for k in keys)
    with pytest.raises(FilterFull):
        f.insert(1)


def test_lookup_is_pure():
    f = TelescopingFilter(8)
    for k in member_keys(200, 1):
        f.insert(k)
    before = (f.qf.dump(), f.adapts, f.false_positives)
    qs = query_keys(3000, 1)
    first = [f.lookup(k) for k in qs]
    assert first == [f.lookup(k) for k in qs]
    assert (f.qf.dump(), f.adapts, f.false_positives) == before


def test_member_query_does_not_adapt():
    f = TelescopingFilter(8)
    keys = member_keys(100, 2)
    for k in keys:
        f.insert(k)
    out = f.query(keys[0])
    assert out.present and not out.was_false_positive and not out.adapted
    assert f.adapts == 0


def test_engineered_collider_adapts():
    f = TelescopingFilter(6)
    x = member_keys(1, 3)[0]
    f.insert(x)
    y, slot = find_collider(f, x)
    out = f.query(y)
    assert out.present and out.was_false_positive and out.adapted and not out.rebuilt
    assert f.selectors(slot >> 6)[slot & 63] == 1
    assert f.adapts == 1
    check_remainders(f)


def test_requery_rate_after_fix():
    # small remainders so false positives are frequent: every verified false
    # positive is fixed and re-queried at once
    f = TelescopingFilter(6, rbits=4, seed=5)
    for k in member_keys(40, 5):
        f.insert(k)
    eps = f.params.eps
    trials = refp = 0
    for k in query_keys(150_000, 5):
        if f.query(k).was_false_positive:
            trials += 1
            refp += f.lookup(k)
        if trials >= 2000:
            break
    assert trials >= 2000
    assert refp / trials <= 2 * eps


def test_cap_triggers_rebuild():
    f = TelescopingFilter(6)
    keys = member_keys(20, 4)
    for k in keys:
        f.insert(k)
    x = keys[0]
    slot = next(s for s in range(64) if f.remote.get(s) and f.remote.get(s)[0] == x)
    sels = [0] * 64
    sels[slot] = 6
    assert f._store(0, sels)
    f.qf.set_remainder(slot, remainder(f.remote.get(slot)[1], f.params, 6))
    y, _ = find_collider(f, x)
    out = f.query(y)
    assert out.rebuilt and out.adapted
    expect = [0] * 64
    expect[slot] = 1
    assert f.selectors(0) == expect
    assert f.rebuilds == 1 and 0 in f.reset_blocks
    check_remainders(f)


def test_rebuild_block_contract():
    f = TelescopingFilter(7)
    for k in member_keys(100, 6):
        f.insert(k)
    for k in query_keys(20_000, 6):
        f.query(k)
    adapts, rebuilds = f.adapts, f.rebuilds
    f.rebuild_block(0)
    assert f.selectors(0) == [0] * 64
    f.rebuild_block(1, then_fix=[70])
    assert f.selectors(1) == [1 if i == 6 else 0 for i in range(64)]
    assert f.adapts == adapts and f.rebuilds == rebuilds + 2
    check_remainders(f)


def test_conservation_without_rebuilds():
    f = TelescopingFilter(10)
    for k in member_keys(900, 7):
        f.insert(k)
    for k in query_keys(30_000, 7):
        f.query(k)
    st = f.stats()
    assert st.rebuilds == 0
    assert sum(k * n for k, n in enumerate(st.histogram)) == st.adapts > 0
    assert sum(st.histogram) == 900
    assert st.false_positives > 0


def test_no_false_negatives_with_interleaved_adapts():
    rng = random.Random(8)
    f = TelescopingFilter(10, seed=8)
    members = member_keys(970, 8)
    negs = iter(query_keys(20_000, 8))
    inserted = []
    for k in members:
        f.insert(k)
        inserted.append(k)
        for _ in range(10):
            f.query(next(negs))
        if rng.random() < 0.05:
            assert all(f.query(m).present for m in inserted)
    assert all(f.lookup(m) for m in inserted)
    check_sync(f)
    check_remainders(f)


def test_cross_block_shift_matches_mirror():
    f = TelescopingFilter(8, seed=9)
    m = UncompressedTelescopingFilter(8, seed=9)
    # cluster quotients near a block boundary so inserts shift across it
    rng = random.Random(9)
    keys = [k for k in (rng.getrandbits(63) for _ in range(200_000))
            if 56 <= hash128(k, 9) & 255 < 72][:60]
    negs = query_keys(40_000, 9)
    for i, k in enumerate(keys):
        f.insert(k)
        m.insert(k)
        for y in negs[i * 500:(i + 1) * 500]:
            assert same_outcome(f, m, y)
    crossed = False
    for b in range(f.qf.physical_blocks):
        if b not in f.reset_blocks:
            assert f.selectors(b) == m.selectors(b)
            crossed |= any(f.selectors(b))
    assert crossed
    check_sync(f)


def test_utaf_never_caps_at_model():
    m = UncompressedTelescopingFilter(16)
    assert m.selector_cap == 13
    assert m.bits() > TelescopingFilter(16).bits()


def test_dump_format():
    f = TelescopingFilter(6)
    f.insert(5)
    line = f.qf.dump()[0].split(",")
    assert len(line) == 6 and len(line[4]) == 14
    assert decode_selectors(int(line[4], 16), f.model) == [0] * 64
