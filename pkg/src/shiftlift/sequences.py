"""Normal-sequence generators, deterministic selection, and digit addition.

Desk-scale material for the subsequence-selection and digit-addition
experiments: the base-b Champernowne word, the golden Sturmian word,
selection along indicators or index lists, block-entropy and normality
diagnostics, and truncated fractional addition with an explicit
unresolved-carry mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import numpy as np

from .core import Alphabet, Word
from .measures import DepthError, block_counts

_FRAC_BITS = 96
_PHI_FRAC = (isqrt(5 << (2 * _FRAC_BITS)) - (1 << _FRAC_BITS)) >> 1


def champernowne(base: int, length: int) -> Word:
    """First ``length`` digits of the base-``base`` concatenation 1, 2, 3, ..."""
    if base < 2:
        raise ValueError("base must be >= 2")
    if length < 1:
        raise ValueError("length must be >= 1")
    digits = bytearray()
    n = 1
    while len(digits) < length:
        chunk = []
        v = n
        while v:
            chunk.append(v % base)
            v //= base
        digits.extend(reversed(chunk))
        n += 1
    return Word(Alphabet(base), bytes(digits[:length]))


def sturmian(count: int) -> Word:
    """Golden Sturmian 0/1 word: successive floor differences of N * phi^-1.

    Computed in 96-bit fixed point, so the floors are exact far beyond any
    desk-scale length.  Ones appear with density phi^-1 ~ 0.618.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = bytearray(count)
    acc = _PHI_FRAC  # N = 1
    prev = acc >> _FRAC_BITS
    for i in range(count):
        acc += _PHI_FRAC
        cur = acc >> _FRAC_BITS
        out[i] = cur - prev
        prev = cur
    return Word(Alphabet(2), bytes(out))


@dataclass(frozen=True)
class Selector:
    """Index selection given by a 0/1 indicator word or an explicit index list."""

    indicator: Word | None = None
    indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if (self.indicator is None) == (self.indices is None):
            raise ValueError("give exactly one of indicator or indices")
        if self.indices is not None:
            if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
                raise ValueError("index list must be strictly increasing")
            if any(i < 0 for i in self.indices):
                raise ValueError("indices must be nonnegative")
        if self.indicator is not None and self.indicator.alphabet.size != 2:
            raise ValueError("indicator must be a 0/1 word")

    def positions(self, upto: int) -> np.ndarray:
        if self.indicator is not None:
            arr = self.indicator.as_array()[:upto]
            return np.nonzero(arr)[0]
        idx = np.array(self.indices, dtype=np.int64)
        return idx[idx < upto]


def select(x: Word, sel: Selector) -> Word:
    """Subsequence of ``x`` at the selector's positions, in order."""
    if sel.indices is not None and sel.indices and sel.indices[-1] >= len(x):
        raise IndexError("selector index out of range")
    pos = sel.positions(len(x))
    data = x.as_array()[pos].tobytes()
    return Word(x.alphabet, data)


def block_entropy(w: Word, depth: int) -> float:
    """Shannon entropy of the depth-``depth`` block statistics, bits per symbol."""
    if len(w) < depth:
        raise DepthError("word shorter than the entropy depth")
    counts = block_counts(w.data, depth, w.alphabet.size)[depth - 1]
    total = len(w) - depth + 1
    h = 0.0
    for c in counts.values():
        p = c / total
        h -= p * np.log2(p)
    return h / depth


def normality_deviation(w: Word, depth: int) -> float:
    """Largest gap between a block frequency and its uniform value, depths <= depth."""
    if len(w) < depth:
        raise DepthError("word shorter than the requested depth")
    base = w.alphabet.size
    worst = 0.0
    counts = block_counts(w.data, depth, base)
    for j in range(1, depth + 1):
        total = len(w) - j + 1
        uniform = base ** -j
        level = counts[j - 1]
        seen = 0
        for c in level.values():
            worst = max(worst, abs(c / total - uniform))
            seen += 1
        if seen < base ** j:
            worst = max(worst, uniform)  # some block never occurs
    return worst


@dataclass(frozen=True)
class DigitSum:
    """Truncated fractional addition with its unresolved-carry mask.

    ``unresolved`` lists the positions inside the maximal run of digits
    b-1 adjacent to the truncation end; exactly these digits would flip if
    a carry entered from beyond the truncation.
    """

    word: Word
    unresolved: tuple[int, ...]


def add_base_b(x: Word, y: Word, base: int) -> DigitSum:
    """Digitwise fractional sum of 0.x + 0.y in the given base.

    Carries propagate right to left within the truncation; the integer
    part is dropped.
    """
    if len(x) != len(y):
        raise ValueError("addends must have equal length")
    if x.alphabet.size > base or y.alphabet.size > base:
        raise ValueError("digits exceed the base")
    if any(d >= base for d in x.data) or any(d >= base for d in y.data):
        raise ValueError("digits exceed the base")
    n = len(x)
    out = bytearray(n)
    carry = 0
    for i in range(n - 1, -1, -1):
        s = x.data[i] + y.data[i] + carry
        out[i] = s % base
        carry = s // base
    run_start = n
    while run_start > 0 and out[run_start - 1] == base - 1:
        run_start -= 1
    return DigitSum(
        word=Word(Alphabet(base), bytes(out)),
        unresolved=tuple(range(run_start, n)),
    )
