"""Integer-interval arithmetic coding of per-block adaptivity metadata.

A block's 64 letters are coded into the integer range ``[0, 2**k)`` (k = 56 in
the filters).  Interval splits only use shifts, adds and the
:func:`floor_mul_frac` identity, so encode and decode agree bit-for-bit.  The
code word is the final ``low``; encoding fails as soon as ``high - low < 2``.

Three probability models are supported:

``Fixed256``
    Hard-coded shift sums tuned for eps = 1/256 selector distributions.
``Geometric(x, y)``
    P(0) = 1 - 2^-x and P(i) = 2^-x (1 - 2^-y) 2^-y(i-1) for i >= 1.
``ExtensionModel(length)``
    Letters are fingerprint extensions ``(length, value)``.  The interval is
    first split by length using a geometric length model, then the chosen
    length's piece is cut into ``2**length`` equal parts.

:func:`oracle_encode` is an exact rational reference used by the tests to
bound what the shift approximation costs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import log2
from typing import Iterable, Sequence, Union

CODE_BITS = 56
BLOCK_LETTERS = 64

Extension = tuple[int, int]  # (length in bits, value read LSB-first)
EMPTY_EXTENSION: Extension = (0, 0)


class CodeOverflow(Exception):
    """The letters do not fit in the code word (or a letter is unencodable)."""


def floor_mul_frac(m: int, n: int) -> int:
    """Exact ``floor(m * (2**n - 1) / 2**n)`` using only shifts and masks."""
    mask = (1 << n) - 1
    low_bits = m & mask
    return (m >> n) * mask + low_bits - (low_bits != 0)


# Letter k of the eps=1/256 model has width sum(range >> s for s in shifts[k]).
# Letter 6 takes whatever is left above letter 5.
FIXED256_SHIFTS = (
    (1, 2, 5),
    (3, 4, 7, 9),
    (6, 8),
    (10, 11),
    (14, 16),
    (19, 20, 23),
)


@dataclass(frozen=True)
class Fixed256:
    max_letter: int = field(default=6, init=False)

    def probability(self, letter: int) -> Fraction:
        if 0 <= letter < len(FIXED256_SHIFTS):
            return sum((Fraction(1, 1 << s) for s in FIXED256_SHIFTS[letter]), Fraction(0))
        if letter == 6:
            return 1 - sum((self.probability(k) for k in range(6)), Fraction(0))
        return Fraction(0)

    def split(self, r: int, letter: int) -> tuple[int, int]:
        """Return ``(offset, width)`` of ``letter`` inside a range of size ``r``."""
        cum = 0
        for k in range(letter):
            cum += _shift_sum(r, FIXED256_SHIFTS[k])
        if letter == 6:
            return cum, r - cum
        return cum, _shift_sum(r, FIXED256_SHIFTS[letter])


@dataclass(frozen=True)
class Geometric:
    x: int = 2
    y: int = 2
    max_letter: int = 31

    def __post_init__(self):
        if self.x < 1 or self.y < 1:
            raise ValueError("geometric shifts must be >= 1")
        if self.max_letter < 0:
            raise ValueError("max_letter must be non-negative")

    def probability(self, letter: int) -> Fraction:
        if letter < 0 or letter > self.max_letter:
            return Fraction(0)
        p_tail = Fraction(1, 1 << self.x)
        if letter == 0:
            return 1 - p_tail
        return p_tail * (1 - Fraction(1, 1 << self.y)) * Fraction(1, 1 << (self.y * (letter - 1)))

    def split(self, r: int, letter: int) -> tuple[int, int]:
        w = floor_mul_frac(r, self.x)
        if letter == 0:
            return 0, w
        cum = w
        m = r - w
        y = self.y
        for _ in range(letter - 1):
            w = floor_mul_frac(m, y)
            cum += w
            m -= w
        return cum, floor_mul_frac(m, y)


@dataclass(frozen=True)
class ExtensionModel:
    length: Geometric = Geometric(x=5, y=1, max_letter=16)

    @property
    def max_length(self) -> int:
        return self.length.max_letter

    def probability(self, ext: Extension) -> Fraction:
        n, value = ext
        if value < 0 or value >= 1 << n:
            return Fraction(0)
        return self.length.probability(n) / (1 << n)


SelectorModel = Union[Fixed256, Geometric]


def _shift_sum(r: int, shifts: Sequence[int]) -> int:
    total = 0
    for s in shifts:
        total += r >> s
    return total


def encode_selectors(values: Iterable[int], model: SelectorModel, k: int = CODE_BITS) -> int:
    """Code a block of selector values; raises :class:`CodeOverflow` if they do not fit."""
    if isinstance(model, Fixed256):
        return _encode_fixed256(values, k)
    low, high = 0, 1 << k
    top = model.max_letter
    for v in values:
        if v < 0 or v > top:
            raise CodeOverflow(f"letter {v} outside [0, {top}]")
        offset, width = model.split(high - low, v)
        low += offset
        high = low + width
        if high - low < 2:
            raise CodeOverflow("interval exhausted")
    return low


def _encode_fixed256(values: Iterable[int], k: int) -> int:
    low, high = 0, 1 << k
    for v in values:
        r = high - low
        if v == 0:
            high = low + (r >> 1) + (r >> 2) + (r >> 5)
        elif 0 < v <= 6:
            cum = 0
            for j in range(v):
                cum += _shift_sum(r, FIXED256_SHIFTS[j])
            if v < 6:
                high = low + cum + _shift_sum(r, FIXED256_SHIFTS[v])
            low += cum
        else:
            raise CodeOverflow(f"letter {v} not encodable by the fixed model")
        if high - low < 2:
            raise CodeOverflow("interval exhausted")
    return low


def decode_selectors(code: int, model: SelectorModel, n: int = BLOCK_LETTERS, k: int = CODE_BITS) -> list[int]:
    """Inverse of :func:`encode_selectors`.

    ``n`` may be smaller than the block size to decode only a prefix.  Letters
    are found by probing 0, 1, 2, ... in order.
    """
    if isinstance(model, Fixed256):
        return _decode_fixed256(code, n, k)
    low, high = 0, 1 << k
    out = []
    x, y, top = model.x, model.y, model.max_letter
    for _ in range(n):
        r = high - low
        off = code - low
        w = floor_mul_frac(r, x)
        if off < w or top == 0:
            out.append(0)
            high = low + w
            continue
        cum = w
        m = r - w
        letter = 1
        w = floor_mul_frac(m, y)
        while letter < top and off >= cum + w:
            cum += w
            m -= w
            letter += 1
            w = floor_mul_frac(m, y)
        low += cum
        high = low + w
        out.append(letter)
    return out


def _decode_fixed256(code: int, n: int, k: int) -> list[int]:
    low, high = 0, 1 << k
    out = []
    for _ in range(n):
        r = high - low
        off = code - low
        w = (r >> 1) + (r >> 2) + (r >> 5)
        if off < w:
            out.append(0)
            high = low + w
            continue
        cum = w
        letter = 1
        while letter < 6:
            w = _shift_sum(r, FIXED256_SHIFTS[letter])
            if off < cum + w:
                high = low + cum + w
                break
            cum += w
            letter += 1
        low += cum
        out.append(letter)
    return out


def encode_extensions(exts: Iterable[Extension], model: ExtensionModel, k: int = CODE_BITS) -> int:
    """Code a block of ``(length, value)`` extensions; raises :class:`CodeOverflow`."""
    lengths = model.length
    cap = lengths.max_letter
    low, high = 0, 1 << k
    for n, value in exts:
        if n < 0 or n > cap:
            raise CodeOverflow(f"extension length {n} outside [0, {cap}]")
        if value < 0 or value >> n:
            raise ValueError(f"extension value {value} does not fit in {n} bits")
        offset, width = lengths.split(high - low, n)
        piece = width >> n
        low += offset + piece * value
        high = low + piece
        if high - low < 2:
            raise CodeOverflow("interval exhausted")
    return low


def decode_extensions(code: int, model: ExtensionModel, n: int = BLOCK_LETTERS, k: int = CODE_BITS) -> list[Extension]:
    lengths = model.length
    x, y, top = lengths.x, lengths.y, lengths.max_letter
    low, high = 0, 1 << k
    out = []
    for _ in range(n):
        r = high - low
        off = code - low
        w = floor_mul_frac(r, x)
        if off < w or top == 0:
            out.append(EMPTY_EXTENSION)
            high = low + w
            continue
        cum = w
        m = r - w
        length = 1
        w = floor_mul_frac(m, y)
        while length < top and off >= cum + w:
            cum += w
            m -= w
            length += 1
            w = floor_mul_frac(m, y)
        piece = w >> length
        value = (off - cum) // piece if piece > 0 else 0
        value = min(max(value, 0), (1 << length) - 1)
        low += cum + piece * value
        high = low + piece
        out.append((length, value))
    return out


def oracle_encode(values: Iterable, model) -> tuple[Fraction, Fraction]:
    """Exact arithmetic-coding interval of ``values`` inside [0, 1)."""
    low, width = Fraction(0), Fraction(1)
    for v in values:
        if isinstance(model, ExtensionModel):
            n, value = v
            before = sum((model.length.probability(j) for j in range(n)), Fraction(0))
            before += model.probability(v) * value
        else:
            before = sum((model.probability(j) for j in range(v)), Fraction(0))
        low += width * before
        width *= model.probability(v)
    return low, low + width


def oracle_cost(values: Iterable, model) -> float:
    """Exact code length in bits, ``-log2`` of the oracle interval width."""
    low, high = oracle_encode(values, model)
    width = high - low
    if width == 0:
        return float("inf")
    return log2(width.denominator) - log2(width.numerator)


def dump_line(code: int, values: Sequence) -> str:
    """Debug dump format ``code_hex,values_csv``."""
    if values and isinstance(values[0], tuple):
        parts = [f"{n}:{v:x}" for n, v in values]
    else:
        parts = [str(v) for v in values]
    return f"{code:014x}," + ",".join(parts)
