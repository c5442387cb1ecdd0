"""Alphabets, finite words, and subshifts of finite type.

Words are stored as raw bytes over integer alphabets (symbols 0..size-1,
size <= 255), which keeps slicing cheap and makes words usable as dict
keys.  A subshift of finite type is given by a 0/1 transition matrix; the
full shift is the all-ones case.  Mixing SFTs admit a uniform connection
gap g0: any two symbols can be joined by an admissible filler of every
length >= g0, which is what makes exact shadowing possible downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np


class NotMixingError(ValueError):
    """Raised when an operation needs a primitive transition matrix."""


class FillerError(ValueError):
    """No admissible filler of the requested length exists."""

    def __init__(self, start: int, end: int, gap: int):
        self.start = start
        self.end = end
        self.gap = gap
        super().__init__(
            f"no admissible filler of length {gap} between symbols "
            f"{start} and {end}"
        )


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("alphabet size must be >= 1")
        if self.size > 255:
            raise ValueError("alphabet size must fit in a byte")

    def symbols(self) -> range:
        return range(self.size)


@dataclass(frozen=True)
class Word:
    """A finite word over an alphabet, stored as bytes."""

    alphabet: Alphabet
    data: bytes

    def __post_init__(self):
        if self.data and max(self.data) >= self.alphabet.size:
            raise ValueError("word contains a symbol outside its alphabet")

    def __len__(self) -> int:
        return len(self.data)

    def __iter__(self) -> Iterator[int]:
        return iter(self.data)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.alphabet, self.data[item])
        return self.data[item]

    def __add__(self, other: "Word") -> "Word":
        if other.alphabet != self.alphabet:
            raise ValueError("cannot concatenate words over different alphabets")
        return Word(self.alphabet, self.data + other.data)

    def __str__(self) -> str:
        if self.alphabet.size <= 10:
            return "".join(str(s) for s in self.data)
        return ",".join(str(s) for s in self.data)

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8)


def word(alphabet: Alphabet, symbols: Iterable[int] | str) -> Word:
    """Build a word from an iterable of symbols or a digit string."""
    if isinstance(symbols, str):
        if alphabet.size > 10:
            raise ValueError("digit strings only cover alphabets of size <= 10")
        symbols = [int(ch) for ch in symbols]
    return Word(alphabet, bytes(symbols))


def word_to_text(w: Word) -> str:
    """Serialize a word: digit string for size <= 10, JSON array otherwise."""
    if w.alphabet.size <= 10:
        return "".join(str(s) for s in w.data)
    return json.dumps(list(w.data))


def word_from_text(alphabet: Alphabet, text: str) -> Word:
    text = text.strip()
    if alphabet.size <= 10:
        return word(alphabet, text)
    return Word(alphabet, bytes(json.loads(text)))


@dataclass(eq=False)
class Sft:
    """Subshift of finite type over ``alphabet`` with a 0/1 transition matrix.

    ``transitions[a][b] == 1`` means the two-letter word ``ab`` is allowed.
    Every symbol must have at least one successor and one predecessor.
    Primitivity (some matrix power strictly positive) is required by the
    operations that need mixing and is checked there, not assumed here.
    """

    alphabet: Alphabet
    transitions: tuple[tuple[int, ...], ...]
    matrix: np.ndarray = field(init=False, repr=False)
    _reach: list[np.ndarray] = field(init=False, repr=False)
    _all_positive_from: int | None = field(init=False, repr=False)

    def __post_init__(self):
        m = self.alphabet.size
        self.transitions = tuple(tuple(int(v) for v in row) for row in self.transitions)
        mat = np.array(self.transitions, dtype=np.uint8)
        if mat.shape != (m, m):
            raise ValueError(f"transition matrix must be {m}x{m}")
        if not np.isin(mat, (0, 1)).all():
            raise ValueError("transition matrix entries must be 0 or 1")
        if not mat.any(axis=1).all():
            raise ValueError("every symbol needs at least one successor")
        if not mat.any(axis=0).all():
            raise ValueError("every symbol needs at least one predecessor")
        self.matrix = mat
        self._reach = [np.eye(m, dtype=bool), mat.astype(bool)]
        self._all_positive_from = None

    @classmethod
    def full_shift(cls, size: int) -> "Sft":
        return cls(Alphabet(size), tuple((1,) * size for _ in range(size)))

    @classmethod
    def golden_mean(cls) -> "Sft":
        """The binary SFT forbidding the word 11."""
        return cls(Alphabet(2), ((1, 1), (1, 0)))

    def reachable(self, steps: int) -> np.ndarray:
        """Boolean matrix of pairs joined by an admissible path of ``steps`` edges."""
        if self._all_positive_from is not None and steps >= self._all_positive_from:
            return self._reach[self._all_positive_from]
        while len(self._reach) <= steps:
            nxt = self._reach[-1] @ self._reach[1]
            self._reach.append(nxt)
            if nxt.all() and self._all_positive_from is None:
                self._all_positive_from = len(self._reach) - 1
                break
        if self._all_positive_from is not None and steps >= self._all_positive_from:
            return self._reach[self._all_positive_from]
        return self._reach[steps]

    def primitivity_index(self) -> int | None:
        """Least t with all pairs joined by t-step paths, or None if not primitive.

        The Wielandt bound (m-1)^2 + 1 makes the search finite.
        """
        m = self.alphabet.size
        bound = (m - 1) ** 2 + 1
        for t in range(1, bound + 1):
            if self.reachable(t).all():
                return t
        return None

    def to_json(self) -> dict:
        return {
            "alphabet_size": self.alphabet.size,
            "transitions": [list(row) for row in self.transitions],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Sft":
        return cls(Alphabet(int(obj["alphabet_size"])), tuple(tuple(r) for r in obj["transitions"]))


@dataclass(frozen=True)
class ConnectionGap:
    """Smallest g such that every symbol pair has fillers of every length >= g.

    ``certificate_end`` records the last filler length verified exhaustively;
    longer lengths follow by path pumping.
    """

    g0: int
    certificate_end: int


def validate_word(sft: Sft, w: Word) -> bool:
    """True iff every adjacent symbol pair of ``w`` is allowed by ``sft``."""
    if w.alphabet != sft.alphabet:
        raise ValueError("word alphabet does not match the system alphabet")
    if len(w) <= 1:
        return True
    arr = w.as_array()
    return bool(sft.matrix[arr[:-1], arr[1:]].all())


def connection_gap(sft: Sft) -> ConnectionGap:
    """Uniform connection gap of a primitive SFT.

    A filler of length g between symbols a and b exists iff a path of g+1
    edges joins them, so g0 is one less than the least all-positive matrix
    power.  Column-surjectivity makes all-positivity persist under further
    multiplication, hence the single certificate.
    """
    t = sft.primitivity_index()
    if t is None:
        raise NotMixingError("system not mixing; weak specification unavailable")
    g0 = t - 1
    window_end = g0 + sft.alphabet.size
    for g in range(g0, window_end + 1):
        if not sft.reachable(g + 1).all():
            raise AssertionError(f"connection gap certificate failed at length {g}")
    return ConnectionGap(g0=g0, certificate_end=window_end)


def connect(sft: Sft, a: int, b: int, gap: int) -> Word:
    """Lexicographically least filler w of length ``gap`` with a.w.b admissible."""
    size = sft.alphabet.size
    if a >= size or b >= size or a < 0 or b < 0:
        raise ValueError("connect endpoints must be alphabet symbols")
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    if not sft.reachable(gap + 1)[a, b]:
        raise FillerError(a, b, gap)
    fill = bytearray()
    prev = a
    for i in range(gap):
        remaining = gap - i  # edges still needed from the chosen symbol to b
        row = sft.matrix[prev]
        reach = sft.reachable(remaining)
        for c in range(size):
            if row[c] and reach[c, b]:
                fill.append(c)
                prev = c
                break
        else:
            raise FillerError(a, b, gap)
    return Word(sft.alphabet, bytes(fill))


def least_path_into(sft: Sft, length: int, target: int) -> bytes:
    """Lexicographically least admissible word of ``length`` that can precede ``target``."""
    out = bytearray()
    prev: int | None = None
    for i in range(length):
        remaining = length - i  # edges from here to the target symbol
        reach = sft.reachable(remaining)
        row = sft.matrix[prev] if prev is not None else None
        for c in range(sft.alphabet.size):
            if (row is None or row[c]) and reach[c, target]:
                out.append(c)
                prev = c
                break
        else:
            raise FillerError(prev if prev is not None else -1, target, length - i)
    return bytes(out)


def least_continuation(sft: Sft, start: int, length: int) -> bytes:
    """Lexicographically least admissible continuation of ``length`` symbols after ``start``."""
    out = bytearray()
    prev = start
    for _ in range(length):
        row = sft.matrix[prev]
        c = int(np.argmax(row))  # least symbol with row[c] == 1
        if not row[c]:
            raise FillerError(prev, -1, length)
        out.append(c)
        prev = c
    return bytes(out)


def admissible_words(sft: Sft, length: int) -> Iterator[bytes]:
    """All admissible words of ``length`` in lexicographic order."""
    size = sft.alphabet.size
    if length == 0:
        yield b""
        return
    mat = sft.matrix
    stack = bytearray()

    def rec():
        if len(stack) == length:
            yield bytes(stack)
            return
        for c in range(size):
            if not stack or mat[stack[-1], c]:
                stack.append(c)
                yield from rec()
                stack.pop()

    yield from rec()
