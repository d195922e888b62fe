import random
from fractions import Fraction
from math import log2

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptfilter.intcoder import (
    FIXED256_SHIFTS,
    CodeOverflow,
    ExtensionModel,
    Fixed256,
    Geometric,
    decode_extensions,
    decode_selectors,
    dump_line,
    encode_extensions,
    encode_selectors,
    floor_mul_frac,
    oracle_cost,
    oracle_encode,
)

F256 = Fixed256()
GEO = Geometric()
EXT = ExtensionModel()


def test_floor_mul_frac_examples():
    assert floor_mul_frac(256, 3) == 224
    assert floor_mul_frac(5, 1) == 2
    assert floor_mul_frac(0, 4) == 0


@given(st.integers(0, 1 << 60), st.integers(1, 40))
def test_floor_mul_frac_exact(m, n):
    assert floor_mul_frac(m, n) == m * ((1 << n) - 1) // (1 << n)


def test_fixed256_probabilities():
    assert F256.probability(0) == Fraction(1, 2) + Fraction(1, 4) + Fraction(1, 32)
    assert F256.probability(0) == Fraction(25, 32)
    assert F256.probability(5) == Fraction(1, 2**19) + Fraction(1, 2**20) + Fraction(1, 2**23)
    assert sum(F256.probability(k) for k in range(7)) == 1
    assert F256.probability(7) == 0


def test_fixed256_split_is_shift_sum():
    r = 1 << 56
    offset = 0
    for k in range(6):
        off, w = F256.split(r, k)
        assert off == offset
        assert w == sum(r >> s for s in FIXED256_SHIFTS[k])
        offset += w
    assert F256.split(r, 6) == (offset, r - offset)


def test_zero_block_cost():
    zeros = [0] * 64
    code = encode_selectors(zeros, F256)
    assert decode_selectors(code, F256) == zeros
    lo, hi = oracle_encode(zeros, F256)
    assert hi - lo == Fraction(25, 32) ** 64
    assert oracle_cost(zeros, F256) == pytest.approx(64 * log2(32 / 25))
    assert oracle_cost(zeros, F256) < 23


def test_letter_six_block_overflows():
    with pytest.raises(CodeOverflow):
        encode_selectors([6] * 64, F256)
    with pytest.raises(CodeOverflow):
        encode_selectors([7] + [0] * 63, F256)


def test_unit_vectors_roundtrip():
    for model in (F256, GEO):
        for s in range(64):
            v = [0] * 64
            v[s] = 1
            assert decode_selectors(encode_selectors(v, model), model) == v


def test_geometric_probabilities():
    g = Geometric(2, 2, 31)
    assert g.probability(0) == Fraction(3, 4)
    assert g.probability(1) == Fraction(1, 4) * Fraction(3, 4)
    assert g.probability(2) == Fraction(1, 4) * Fraction(3, 4) * Fraction(1, 4)
    with pytest.raises(ValueError):
        Geometric(0, 1)


def _random_selectors(rng, model):
    v = [0] * 64
    for _ in range(rng.randrange(8)):
        v[rng.randrange(64)] = rng.randrange(1, model.max_letter + 1)
    return v


@pytest.mark.parametrize("model", [F256, GEO, Geometric(3, 1, 12)])
def test_selector_roundtrip_random(model):
    rng = random.Random(7)
    ok = failed = 0
    for _ in range(3000):
        v = _random_selectors(rng, model)
        try:
            code = encode_selectors(v, model)
        except CodeOverflow:
            assert oracle_cost(v, model) > 56 - 4
            failed += 1
            continue
        ok += 1
        assert 0 <= code < 1 << 56
        assert decode_selectors(code, model) == v
    assert ok > 300 and failed > 0


def test_prefix_decode():
    rng = random.Random(1)
    v = _random_selectors(rng, F256)
    code = encode_selectors(v, F256)
    assert decode_selectors(code, F256, 20) == v[:20]


def test_generic_k():
    v = [0] * 10 + [1]
    code = encode_selectors(v, GEO, k=16)
    assert code < 1 << 16
    assert decode_selectors(code, GEO, len(v), k=16) == v
    with pytest.raises(CodeOverflow):
        encode_selectors([0] * 64, GEO, k=16)


@settings(max_examples=300)
@given(st.lists(st.integers(0, 6), min_size=64, max_size=64))
def test_fixed256_roundtrip_property(values):
    try:
        code = encode_selectors(values, F256)
    except CodeOverflow:
        return
    assert decode_selectors(code, F256) == values


def test_encode_is_monotone_narrowing():
    # equivalent: every prefix interval contains the full code
    rng = random.Random(2)
    v = _random_selectors(rng, GEO)
    code = encode_selectors(v, GEO)
    lo, hi = oracle_encode(v, GEO)
    scaled = Fraction(code, 1 << 56)
    # shift rounding keeps the integer code close to the exact interval
    assert lo - Fraction(64, 1 << 56) <= scaled <= hi


def test_extension_letters_are_distinct():
    empty = [(0, 0)] * 64
    assert decode_extensions(encode_extensions(empty, EXT), EXT) == empty
    one = [(1, 0)] + empty[1:]
    two = [(2, 0)] + empty[1:]
    c1, c2 = encode_extensions(one, EXT), encode_extensions(two, EXT)
    assert c1 != c2
    assert decode_extensions(c1, EXT) == one
    assert decode_extensions(c2, EXT) == two
    three = empty[:5] + [(3, 0b101)] + empty[6:]
    assert decode_extensions(encode_extensions(three, EXT), EXT) == three


def test_extension_roundtrip_random():
    rng = random.Random(9)
    ok = 0
    for _ in range(3000):
        exts = [(0, 0)] * 64
        for _ in range(rng.randrange(6)):
            n = min(16, 1 + int(rng.expovariate(0.7)))
            exts[rng.randrange(64)] = (n, rng.getrandbits(n))
        try:
            code = encode_extensions(exts, EXT)
        except CodeOverflow:
            assert oracle_cost(exts, EXT) > 56 - 4
            continue
        ok += 1
        assert decode_extensions(code, EXT) == exts
    assert ok > 1000


def test_extension_bounds():
    with pytest.raises(CodeOverflow):
        encode_extensions([(17, 0)] + [(0, 0)] * 63, EXT)
    with pytest.raises(ValueError):
        encode_extensions([(2, 4)] + [(0, 0)] * 63, EXT)


def test_foreign_words_terminate():
    rng = random.Random(4)
    for _ in range(50):
        w = rng.getrandbits(56)
        assert len(decode_selectors(w, F256)) == 64
        assert len(decode_selectors(w, GEO)) == 64
        assert len(decode_extensions(w, EXT)) == 64


def test_dump_line():
    v = [0] * 63 + [2]
    code = encode_selectors(v, F256)
    line = dump_line(code, v)
    head, rest = line.split(",", 1)
    assert int(head, 16) == code and len(head) == 14
    assert rest.split(",")[-1] == "2"
    assert dump_line(5, [(3, 5), (0, 0)]) == "00000000000005,3:5,0:0"
