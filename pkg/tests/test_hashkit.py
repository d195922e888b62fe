import random
from types import SimpleNamespace

import numpy as np
import pytest

from adaptfilter.hashkit import (
    FingerprintParams,
    HashExhausted,
    SelectorOutOfRange,
    extension_slice,
    fingerprint_parts,
    hash128,
    key_of,
    max_selector,
)


def test_hash_is_deterministic_and_seeded():
    assert hash128(12345, 7) == hash128(12345, 7)
    assert hash128(12345, 7) != hash128(12345, 8)
    assert hash128(12345, 7) != hash128(12345, 7 | 1 << 40)
    assert 0 <= hash128(0, 0) < 1 << 128


def test_bit_balance():
    rng = random.Random(3)
    n = 1_000_000
    raw = b"".join(hash128(rng.getrandbits(64), 1).to_bytes(16, "little") for _ in range(n))
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(n, 16), axis=1, bitorder="little")
    freq = bits.sum(axis=0) / n
    assert freq.shape == (128,)
    assert np.all(np.abs(freq - 0.5) <= 0.01)


def test_fingerprint_slices():
    p = FingerprintParams(4, 4)
    h = 0b1110_1011_0101
    assert fingerprint_parts(h, p, 0) == (0b0101, 0b1011)
    assert fingerprint_parts(h, p, 1) == (0b0101, 0b1110)
    with pytest.raises(SelectorOutOfRange):
        fingerprint_parts(h, p, max_selector(p) + 1)


def test_max_selector():
    assert max_selector(FingerprintParams(24, 8)) == 12
    assert max_selector(FingerprintParams(16, 8)) == 13
    # wider than FingerprintParams allows, but the formula still applies
    assert max_selector(SimpleNamespace(qbits=120, rbits=8)) == 0


@pytest.mark.parametrize("q,r", [(0, 8), (57, 8), (16, 0), (16, 17)])
def test_params_bounds(q, r):
    with pytest.raises(ValueError):
        FingerprintParams(q, r)


def test_concatenation_reproduces_low_bits():
    rng = random.Random(5)
    p = FingerprintParams(13, 7)
    for _ in range(200):
        h = rng.getrandbits(128)
        k = rng.randrange(max_selector(p) + 1)
        q, _ = fingerprint_parts(h, p, 0)
        acc, shift = q, p.qbits
        for i in range(k + 1):
            assert fingerprint_parts(h, p, i)[0] == q
            acc |= fingerprint_parts(h, p, i)[1] << shift
            shift += p.rbits
        assert acc == h & ((1 << shift) - 1)


def test_extension_slice():
    p = FingerprintParams(16, 8)
    h = hash128(99, 0)
    assert extension_slice(h, p, 0, 0) == 0
    assert extension_slice(h, p, 0, 1) == (h >> 24) & 1
    assert extension_slice(h, p, 100, 4) == h >> 124
    with pytest.raises(HashExhausted):
        extension_slice(h, p, 100, 5)


def test_extension_slice_separates_first_difference():
    # search random key pairs for two hashes whose extension streams first
    # differ at bit 3
    p = FingerprintParams(8, 4)
    rng = random.Random(11)
    base = hash128(1, 0)
    for _ in range(100_000):
        other = hash128(rng.getrandbits(64), 0)
        diff = (base ^ other) >> p.extension_base
        if diff & 0xF == 0b1000:
            break
    else:
        pytest.fail("no pair found")
    assert extension_slice(base, p, 0, 3) == extension_slice(other, p, 0, 3)
    assert extension_slice(base, p, 0, 4) != extension_slice(other, p, 0, 4)


def test_key_of_strings():
    assert key_of("abc") == key_of(b"abc")
    assert 0 <= key_of("abc") < 1 << 64
