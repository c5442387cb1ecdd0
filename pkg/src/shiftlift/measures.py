"""Finite cylinder representations of measures and a weighted weak* metric.

A CylinderDistribution stores block frequencies at depths 1..K.  Target
measures (Bernoulli, Markov, product and diagonal joinings, empirical
families) expose cylinder probabilities, from which everything else is
derived.  The metric enumerates cylinder indicators depth-major and
lexicographically within each depth, weighting the n-th one by 2^-n, so
every distance value is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .core import Alphabet, Word, word

SUM_TOL = 1e-9


class DepthError(ValueError):
    """A requested depth exceeds what a distribution stores."""


class NullConditionError(ValueError):
    """Conditioning block has zero mass under the second marginal."""


# ---------------------------------------------------------------------------
# cylinder distributions


class CylinderDistribution:
    """Consistent family of block-frequency maps at depths 1..max_depth."""

    __slots__ = ("alphabet_size", "levels")

    def __init__(self, alphabet_size: int, levels: Sequence[dict[bytes, float]],
                 validate: bool = True):
        self.alphabet_size = alphabet_size
        self.levels = [dict(lv) for lv in levels]
        if validate:
            self._check()

    def _check(self):
        if self.alphabet_size < 1:
            raise ValueError("alphabet size must be >= 1")
        if not self.levels:
            raise ValueError("a cylinder distribution needs depth >= 1")
        for j, lv in enumerate(self.levels, start=1):
            total = 0.0
            for key, v in lv.items():
                if len(key) != j:
                    raise ValueError(f"key {key!r} has wrong length at depth {j}")
                if v < -SUM_TOL:
                    raise ValueError("negative cylinder frequency")
                total += v
            if abs(total - 1.0) > SUM_TOL:
                raise ValueError(f"depth-{j} frequencies sum to {total}, not 1")

    @property
    def max_depth(self) -> int:
        return len(self.levels)

    def level(self, depth: int) -> dict[bytes, float]:
        if not 1 <= depth <= self.max_depth:
            raise DepthError(f"depth {depth} outside stored range 1..{self.max_depth}")
        return self.levels[depth - 1]

    def value(self, block: bytes) -> float:
        return self.level(len(block)).get(block, 0.0)

    def truncated(self, depth: int) -> "CylinderDistribution":
        if depth > self.max_depth:
            raise DepthError(f"cannot truncate to depth {depth} > {self.max_depth}")
        return CylinderDistribution(self.alphabet_size, self.levels[:depth], validate=False)

    def to_json(self) -> dict:
        def key_str(k: bytes) -> str:
            if self.alphabet_size <= 10:
                return "".join(str(s) for s in k)
            return ",".join(str(s) for s in k)

        return {
            "alphabet_size": self.alphabet_size,
            "max_depth": self.max_depth,
            "levels": [
                {"depth": j, "entries": {key_str(k): v for k, v in sorted(lv.items())}}
                for j, lv in enumerate(self.levels, start=1)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CylinderDistribution":
        size = int(obj["alphabet_size"])

        def parse_key(s: str) -> bytes:
            if size <= 10:
                return bytes(int(ch) for ch in s)
            return bytes(int(p) for p in s.split(","))

        levels: list[dict[bytes, float]] = [dict() for _ in range(int(obj["max_depth"]))]
        for entry in obj["levels"]:
            levels[int(entry["depth"]) - 1] = {
                parse_key(k): float(v) for k, v in entry["entries"].items()
            }
        return cls(size, levels)


def _counts_python(data: bytes, depth: int) -> list[dict[bytes, int]]:
    out = []
    n = len(data)
    for j in range(1, depth + 1):
        c: dict[bytes, int] = {}
        for i in range(n - j + 1):
            k = data[i:i + j]
            c[k] = c.get(k, 0) + 1
        out.append(c)
    return out


def _counts_numpy(data: bytes, depth: int, size: int) -> list[dict[bytes, int]]:
    arr = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
    out = []
    code = arr
    for j in range(1, depth + 1):
        if j > 1:
            code = code[:-1] * size + arr[j - 1:]
        counts = np.bincount(code, minlength=size ** j)
        level: dict[bytes, int] = {}
        for idx in np.nonzero(counts)[0]:
            k = idx
            sym = bytearray(j)
            for p in range(j - 1, -1, -1):
                sym[p] = k % size
                k //= size
            level[bytes(sym)] = int(counts[idx])
        out.append(level)
    return out


def block_counts(data: bytes, depth: int, size: int) -> list[dict[bytes, int]]:
    """Sliding-window block counts of ``data`` at depths 1..depth."""
    if len(data) >= 4096 and size ** depth <= 1 << 22:
        return _counts_numpy(data, depth, size)
    return _counts_python(data, depth)


def empirical_measure(w: Word, depth: int) -> CylinderDistribution:
    """Sliding-window block frequencies of an orbit segment at depths 1..depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if len(w) < depth:
        raise DepthError(f"word of length {len(w)} is too short for depth {depth}")
    size = w.alphabet.size
    levels = []
    for j, counts in enumerate(block_counts(w.data, depth, size), start=1):
        total = len(w) - j + 1
        levels.append({k: c / total for k, c in counts.items()})
    return CylinderDistribution(size, levels, validate=False)


# ---------------------------------------------------------------------------
# the weak* metric


@dataclass(frozen=True)
class MetricConfig:
    """Truncation depth of the cylinder-indicator enumeration.

    Functions are enumerated depth-major and lexicographically within each
    depth; the n-th one carries weight 2^-n, so the total weight is < 1 and
    the metric has diameter < 1.
    """

    depth: int = 3

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("metric depth must be >= 1")


@lru_cache(maxsize=64)
def cylinder_weights(alphabet_size: int, depth: int) -> tuple[tuple[bytes, float], ...]:
    out = []
    n = 0
    for j in range(1, depth + 1):
        for idx in range(alphabet_size ** j):
            k = idx
            sym = bytearray(j)
            for p in range(j - 1, -1, -1):
                sym[p] = k % alphabet_size
                k //= alphabet_size
            n += 1
            out.append((bytes(sym), 2.0 ** -n))
    return tuple(out)


def weakstar_distance(d1: CylinderDistribution, d2: CylinderDistribution,
                      cfg: MetricConfig | None = None) -> float:
    """Weighted sum of cylinder-frequency gaps; symmetric, triangle, < 1."""
    cfg = cfg or MetricConfig()
    if d1.alphabet_size != d2.alphabet_size:
        raise ValueError("distributions live over different alphabets")
    if d1.max_depth < cfg.depth or d2.max_depth < cfg.depth:
        raise DepthError("both distributions must store the metric depth")
    total = 0.0
    for block, weight in cylinder_weights(d1.alphabet_size, cfg.depth):
        lv1 = d1.levels[len(block) - 1]
        lv2 = d2.levels[len(block) - 1]
        total += weight * abs(lv1.get(block, 0.0) - lv2.get(block, 0.0))
    return total


def distance_to_levels(levels: Sequence[dict[bytes, float]], counts: Iterable[dict[bytes, int]],
                       totals: Sequence[int], weights) -> float:
    """Metric distance between raw block counts and stored frequency levels.

    Fast path used by block classification; avoids building distribution
    objects per block.
    """
    freq = [{k: c / t for k, c in lv.items()} for lv, t in zip(counts, totals)]
    total = 0.0
    for block, weight in weights:
        j = len(block) - 1
        total += weight * abs(freq[j].get(block, 0.0) - levels[j].get(block, 0.0))
    return total


# ---------------------------------------------------------------------------
# shift action and averaging diagnostics


def shift_pushforward(d: CylinderDistribution) -> CylinderDistribution:
    """Image of the distribution under the shift; loses one depth level."""
    if d.max_depth < 2:
        raise DepthError("pushforward needs depth >= 2")
    levels: list[dict[bytes, float]] = []
    for j in range(1, d.max_depth):
        src = d.levels[j]  # depth j+1
        out: dict[bytes, float] = {}
        for key, v in src.items():
            tail = key[1:]
            out[tail] = out.get(tail, 0.0) + v
        levels.append(out)
    return CylinderDistribution(d.alphabet_size, levels, validate=False)


def cesaro_average(d: CylinderDistribution, n: int) -> CylinderDistribution:
    """Arithmetic mean of d, Td, ..., T^(n-1)d at the common surviving depth."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if d.max_depth < n:
        raise DepthError(f"depth {d.max_depth} cannot support {n} averaging steps")
    common = d.max_depth - n + 1
    acc: list[dict[bytes, float]] = [dict() for _ in range(common)]
    cur = d
    for i in range(n):
        for j in range(common):
            for key, v in cur.levels[j].items():
                acc[j][key] = acc[j].get(key, 0.0) + v / n
        if i < n - 1:
            cur = shift_pushforward(cur)
    return CylinderDistribution(d.alphabet_size, acc, validate=False)


def invariance_defect(d: CylinderDistribution, cfg: MetricConfig | None = None) -> float:
    """Metric distance between the distribution and its shift image."""
    cfg = cfg or MetricConfig()
    if d.max_depth < cfg.depth + 1:
        raise DepthError("invariance defect needs one level beyond the metric depth")
    pushed = shift_pushforward(d)
    return weakstar_distance(pushed.truncated(cfg.depth), d.truncated(cfg.depth), cfg)


# ---------------------------------------------------------------------------
# target measures


class TargetMeasure:
    """A measure given by its cylinder probabilities."""

    alphabet_size: int

    def cylinder(self, block: bytes) -> float:
        raise NotImplementedError

    def support_extensions(self, prefix: bytes) -> list[int]:
        """Symbols a with positive mass on ``prefix + a``."""
        out = []
        for a in range(self.alphabet_size):
            if self.cylinder(prefix + bytes([a])) > 0.0:
                out.append(a)
        return out

    def cylinder_distribution(self, depth: int) -> CylinderDistribution:
        levels: list[dict[bytes, float]] = []
        frontier: list[bytes] = [b""]
        for _ in range(depth):
            nxt: dict[bytes, float] = {}
            for p in frontier:
                for a in range(self.alphabet_size):
                    blk = p + bytes([a])
                    v = self.cylinder(blk)
                    if v > 0.0:
                        nxt[blk] = v
            levels.append(nxt)
            frontier = list(nxt)
        return CylinderDistribution(self.alphabet_size, levels, validate=False)

    def step_probabilities(self, prefix: bytes) -> np.ndarray:
        """Conditional next-symbol probabilities given a sampled prefix."""
        base = self.cylinder(prefix) if prefix else 1.0
        if base <= 0.0:
            raise ValueError("cannot extend a null prefix")
        probs = np.array(
            [self.cylinder(prefix + bytes([a])) for a in range(self.alphabet_size)]
        )
        return probs / base

    def sample(self, length: int, rng: np.random.Generator) -> bytes:
        out = bytearray()
        for _ in range(length):
            probs = self.step_probabilities(bytes(out))
            out.append(rng.choice(self.alphabet_size, p=probs))
        return bytes(out)

    def to_json(self) -> dict:
        raise NotImplementedError


class Bernoulli(TargetMeasure):
    """Product measure with i.i.d. symbol probabilities."""

    def __init__(self, probs: Sequence[float]):
        probs = tuple(float(p) for p in probs)
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError("probability vector must sum to 1 within 1e-12")
        self.probs = probs
        self.alphabet_size = len(probs)

    def cylinder(self, block: bytes) -> float:
        v = 1.0
        for s in block:
            v *= self.probs[s]
        return v

    def sample(self, length: int, rng: np.random.Generator) -> bytes:
        return bytes(rng.choice(self.alphabet_size, size=length, p=np.array(self.probs)).astype(np.uint8).tolist())

    def to_json(self) -> dict:
        return {"kind": "bernoulli", "params": {"probs": list(self.probs)}}


class MarkovChain(TargetMeasure):
    """Stationary Markov measure: pi(b0) * prod P(b_i, b_i+1)."""

    def __init__(self, stationary: Sequence[float] | None, matrix: Sequence[Sequence[float]]):
        P = np.array(matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition matrix must be square")
        if (P < 0).any():
            raise ValueError("transition probabilities must be nonnegative")
        if np.abs(P.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("transition matrix rows must sum to 1")
        if stationary is None:
            stationary = stationary_vector(P)
        pi = np.array(stationary, dtype=float)
        if abs(pi.sum() - 1.0) > 1e-9:
            raise ValueError("stationary vector must sum to 1")
        if np.abs(pi @ P - pi).max() > 1e-9:
            raise ValueError("vector is not stationary for the matrix (pi P != pi)")
        self.pi = pi
        self.P = P
        self.alphabet_size = P.shape[0]

    def cylinder(self, block: bytes) -> float:
        if not block:
            return 1.0
        v = self.pi[block[0]]
        for a, b in zip(block, block[1:]):
            v *= self.P[a, b]
        return v

    def sample(self, length: int, rng: np.random.Generator) -> bytes:
        if length == 0:
            return b""
        out = bytearray(length)
        cum = np.cumsum(self.P, axis=1)
        u = rng.random(length)
        out[0] = int(np.searchsorted(np.cumsum(self.pi), u[0], side="right"))
        for i in range(1, length):
            out[i] = int(np.searchsorted(cum[out[i - 1]], u[i], side="right"))
        return bytes(out)

    def to_json(self) -> dict:
        return {
            "kind": "markov",
            "params": {"stationary": self.pi.tolist(), "matrix": self.P.tolist()},
        }


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Stationary row vector of a stochastic matrix (largest eigenvalue)."""
    vals, vecs = np.linalg.eig(P.T)
    idx = int(np.argmax(vals.real))
    v = np.abs(vecs[:, idx].real)
    return v / v.sum()


def pair_encode(u: int, v: int, second_size: int) -> int:
    return u * second_size + v


def zip_words(wx: Word, wy: Word) -> Word:
    """Interleave two equal-length words into one over the product alphabet."""
    if len(wx) != len(wy):
        raise ValueError("paired words must have equal length")
    sy = wy.alphabet.size
    data = bytes(u * sy + v for u, v in zip(wx.data, wy.data))
    return Word(Alphabet(wx.alphabet.size * sy), data)


def unzip_word(w: Word, first_size: int, second_size: int) -> tuple[Word, Word]:
    if w.alphabet.size != first_size * second_size:
        raise ValueError("word is not over the expected product alphabet")
    xs = bytes(s // second_size for s in w.data)
    ys = bytes(s % second_size for s in w.data)
    return Word(Alphabet(first_size), xs), Word(Alphabet(second_size), ys)


def split_pair_block(block: bytes, second_size: int) -> tuple[bytes, bytes]:
    return (
        bytes(s // second_size for s in block),
        bytes(s % second_size for s in block),
    )


class ProductJoining(TargetMeasure):
    """Independent joining of two measures on the product alphabet."""

    def __init__(self, first: TargetMeasure, second: TargetMeasure):
        self.first = first
        self.second = second
        self.alphabet_size = first.alphabet_size * second.alphabet_size

    def cylinder(self, block: bytes) -> float:
        bx, by = split_pair_block(block, self.second.alphabet_size)
        return self.first.cylinder(bx) * self.second.cylinder(by)

    def sample(self, length: int, rng: np.random.Generator) -> bytes:
        sx = self.first.sample(length, rng)
        sy = self.second.sample(length, rng)
        k = self.second.alphabet_size
        return bytes(u * k + v for u, v in zip(sx, sy))

    def to_json(self) -> dict:
        return {
            "kind": "product",
            "params": {"first": self.first.to_json(), "second": self.second.to_json()},
        }


class DiagonalJoining(TargetMeasure):
    """Self-joining supported on the diagonal of the product alphabet."""

    def __init__(self, base: TargetMeasure):
        self.base = base
        self.alphabet_size = base.alphabet_size ** 2

    def cylinder(self, block: bytes) -> float:
        bx, by = split_pair_block(block, self.base.alphabet_size)
        if bx != by:
            return 0.0
        return self.base.cylinder(bx)

    def sample(self, length: int, rng: np.random.Generator) -> bytes:
        s = self.base.sample(length, rng)
        k = self.base.alphabet_size
        return bytes(u * k + u for u in s)

    def to_json(self) -> dict:
        return {"kind": "diagonal", "params": {"base": self.base.to_json()}}


class EmpiricalTarget(TargetMeasure):
    """Target given directly by a stored cylinder family."""

    def __init__(self, dist: CylinderDistribution):
        self.dist = dist
        self.alphabet_size = dist.alphabet_size

    def cylinder(self, block: bytes) -> float:
        if not block:
            return 1.0
        if len(block) > self.dist.max_depth:
            raise DepthError(
                f"cylinder depth {len(block)} exceeds stored depth {self.dist.max_depth}"
            )
        return self.dist.value(block)

    def cylinder_distribution(self, depth: int) -> CylinderDistribution:
        return self.dist.truncated(depth)

    def step_probabilities(self, prefix: bytes) -> np.ndarray:
        window = prefix[-(self.dist.max_depth - 1):] if self.dist.max_depth > 1 else b""
        base = self.cylinder(window) if window else 1.0
        if base <= 0.0:
            raise ValueError("cannot extend a null prefix")
        probs = np.array(
            [self.cylinder(window + bytes([a])) for a in range(self.alphabet_size)]
        )
        total = probs.sum()
        if total <= 0.0:
            raise ValueError("stored family admits no extension of the prefix")
        return probs / total

    def to_json(self) -> dict:
        return {"kind": "empirical", "params": {"distribution": self.dist.to_json()}}


def parse_target(obj: dict) -> TargetMeasure:
    kind = obj["kind"]
    params = obj.get("params", {})
    if kind == "bernoulli":
        return Bernoulli(params["probs"])
    if kind == "markov":
        return MarkovChain(params.get("stationary"), params["matrix"])
    if kind == "product":
        return ProductJoining(parse_target(params["first"]), parse_target(params["second"]))
    if kind == "diagonal":
        return DiagonalJoining(parse_target(params["base"]))
    if kind == "empirical":
        return EmpiricalTarget(CylinderDistribution.from_json(params["distribution"]))
    raise ValueError(f"unknown target kind {kind!r}")


def measure_cylinder(t: TargetMeasure, b: Word) -> float:
    """Probability of the cylinder set of ``b`` under ``t``."""
    if b.alphabet.size != t.alphabet_size:
        raise ValueError("block alphabet does not match the measure alphabet")
    return t.cylinder(b.data)


def marginal(t: TargetMeasure, coordinate: int, second_size: int, depth: int) -> CylinderDistribution:
    """Coordinate marginal of a measure on a product alphabet."""
    if t.alphabet_size % second_size != 0:
        raise ValueError("alphabet is not a product with the given second size")
    first_size = t.alphabet_size // second_size
    if isinstance(t, ProductJoining):
        side = t.first if coordinate == 0 else t.second
        return side.cylinder_distribution(depth)
    if isinstance(t, DiagonalJoining):
        return t.base.cylinder_distribution(depth)
    sizes = (first_size, second_size)
    out_size = sizes[coordinate]
    other_size = sizes[1 - coordinate]
    levels: list[dict[bytes, float]] = []
    frontier = [b""]
    for j in range(1, depth + 1):
        lv: dict[bytes, float] = {}
        for p in frontier:
            for a in range(out_size):
                blk = p + bytes([a])
                total = 0.0
                for other_idx in range(other_size ** j):
                    k = other_idx
                    other = bytearray(j)
                    for q in range(j - 1, -1, -1):
                        other[q] = k % other_size
                        k //= other_size
                    if coordinate == 0:
                        pair = bytes(u * second_size + v for u, v in zip(blk, other))
                    else:
                        pair = bytes(u * second_size + v for u, v in zip(other, blk))
                    total += t.cylinder(pair)
                if total > 0.0:
                    lv[blk] = total
        levels.append(lv)
        frontier = list(lv)
    return CylinderDistribution(out_size, levels, validate=False)


def conditional_joint(xi: TargetMeasure, C: Word, Bs: Sequence[Word]) -> np.ndarray:
    """Conditional probabilities xi(B x C) / nu(C) over the listed first-coordinate blocks."""
    second_size = C.alphabet.size
    if xi.alphabet_size % second_size != 0:
        raise ValueError("joining alphabet is not a product with the block alphabet")
    joint = []
    for B in Bs:
        if len(B) != len(C):
            raise ValueError("conditioning and conditioned blocks must share a length")
        pair = bytes(u * second_size + v for u, v in zip(B.data, C.data))
        joint.append(xi.cylinder(pair))
    nu_C = float(sum(joint))
    if nu_C <= 0.0:
        raise NullConditionError("conditioning on null block")
    return np.array(joint) / nu_C


def project_pair_distribution(d: CylinderDistribution, coordinate: int,
                              second_size: int) -> CylinderDistribution:
    """Coordinate marginal of an empirical distribution over a product alphabet."""
    if d.alphabet_size % second_size != 0:
        raise ValueError("distribution alphabet is not a product with the given size")
    first_size = d.alphabet_size // second_size
    out_size = first_size if coordinate == 0 else second_size
    levels: list[dict[bytes, float]] = []
    for lv in d.levels:
        out: dict[bytes, float] = {}
        for key, v in lv.items():
            if coordinate == 0:
                proj = bytes(s // second_size for s in key)
            else:
                proj = bytes(s % second_size for s in key)
            out[proj] = out.get(proj, 0.0) + v
        levels.append(out)
    return CylinderDistribution(out_size, levels, validate=False)
