"""Constructions that turn quasi-generic material into generic points.

The pieces: two-gap marker sequences from Beatty slopes, integer block
allocation by largest remainder, classification of blocks by closeness to
a target measure, repair of quasi-generic words stage by stage, assembly
of paired specifications whose first coordinate realizes a conditional
block allocation, and an explicit word whose ergodic averages oscillate
across two thresholds forever.

Everything here is deterministic given its inputs; sampling happens only
through explicitly seeded generators passed in by callers.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from math import isqrt
from typing import Sequence

import numpy as np

from .core import Alphabet, Sft, Word, connect, connection_gap, least_continuation, validate_word
from .measures import (
    CylinderDistribution,
    DepthError,
    MetricConfig,
    NullConditionError,
    TargetMeasure,
    block_counts,
    cylinder_weights,
    empirical_measure,
    marginal,
    weakstar_distance,
    zip_words,
)
from .sampling import sample_word, stream

# Fractional part of the golden slope at 96 fixed-point bits; exact floor
# of ((sqrt 5) - 1)/2 * 2^96.
_FRAC_BITS = 96
_PHI_FRAC = (isqrt(5 << (2 * _FRAC_BITS)) - (1 << _FRAC_BITS)) >> 1

# Depth-2 block statistics of a 32-symbol prefix of a genuinely typical
# point miss tight tolerances with constant probability, so reports start
# their power-of-two scale sweep here.
DEFAULT_SCALE_FLOOR = 1024


class NoGoodBlockError(ValueError):
    """A construction stage found no block close enough to the target."""


# ---------------------------------------------------------------------------
# marker sequences


@dataclass(frozen=True)
class MarkerSequence:
    """Increasing positions whose consecutive differences are L or L+1."""

    L: int
    markers: tuple[int, ...]
    slope: float

    def __post_init__(self):
        bad = [
            (a, b) for a, b in zip(self.markers, self.markers[1:])
            if b - a not in (self.L, self.L + 1)
        ]
        if bad:
            raise ValueError(f"marker gaps outside {{L, L+1}}: {bad[:3]}")

    @property
    def gaps(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.markers, self.markers[1:]))


def beatty_markers(L: int, count: int, anchor: int = 0) -> list[int]:
    """anchor + floor(N * (L + phi^-1)) for N = 1..count, in exact integer arithmetic."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    if count * (L + 1) >= 1 << 62:
        raise ValueError("marker range exceeds the supported integer range")
    slope_fp = (L << _FRAC_BITS) + _PHI_FRAC
    acc = 0
    out = []
    for _ in range(count):
        acc += slope_fp
        out.append(anchor + (acc >> _FRAC_BITS))
    return out


def marker_sequence(L: int, count: int) -> MarkerSequence:
    """Two-gap marker sequence from the Beatty word of slope L + phi^-1."""
    markers = beatty_markers(L, count)
    return MarkerSequence(L=L, markers=tuple(markers), slope=L + (math.sqrt(5) - 1) / 2)


def relative_generation_distance(x: Word, m: MarkerSequence, mu: TargetMeasure,
                                 depth: int, upto: int) -> float:
    """Distance between the blocks of ``x`` read at markers and ``mu``.

    The samples are the depth-``depth`` blocks starting at the first
    ``upto`` markers; their prefix statistics are compared to the target's
    cylinder family.
    """
    if upto < 1 or upto > len(m.markers):
        raise ValueError("upto must select a nonempty marker prefix")
    picked = m.markers[:upto]
    if picked[-1] + depth > len(x):
        raise ValueError("marker out of range for the given word and depth")
    levels: list[dict[bytes, float]] = []
    for j in range(1, depth + 1):
        counts: dict[bytes, int] = {}
        for a in picked:
            k = x.data[a:a + j]
            counts[k] = counts.get(k, 0) + 1
        levels.append({k: c / upto for k, c in counts.items()})
    sampled = CylinderDistribution(x.alphabet.size, levels, validate=False)
    return weakstar_distance(sampled, mu.cylinder_distribution(depth), MetricConfig(depth))


# ---------------------------------------------------------------------------
# allocation and block classification


def rational_allocation(p: Sequence[float], denom: int) -> np.ndarray:
    """Largest-remainder rounding of denom * p; ties go to lower indices."""
    arr = np.asarray(p, dtype=float)
    if (arr < 0).any():
        raise ValueError("probability entries must be nonnegative")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError("probability vector must sum to 1 within 1e-9")
    if denom < 1:
        raise ValueError("denominator must be >= 1")
    scaled = arr * denom
    base = np.floor(scaled).astype(np.int64)
    remainder = int(denom - base.sum())
    if remainder > 0:
        fracs = scaled - base
        order = sorted(range(len(arr)), key=lambda i: (-fracs[i], i))
        for i in order[:remainder]:
            base[i] += 1
    return base


class BlockScorer:
    """Memoized metric distance from block words to a target's cylinder family."""

    def __init__(self, mu: TargetMeasure, depth: int):
        self.depth = depth
        self.alphabet_size = mu.alphabet_size
        self.levels = mu.cylinder_distribution(depth).levels
        self.weights = cylinder_weights(mu.alphabet_size, depth)
        self._cache: dict[bytes, float] = {}

    def distance(self, block: bytes) -> float:
        d = self._cache.get(block)
        if d is None:
            counts = block_counts(block, self.depth, self.alphabet_size)
            freq = [
                {k: c / (len(block) - j) for k, c in lv.items()}
                for j, lv in enumerate(counts)
            ]
            d = 0.0
            for blk, w in self.weights:
                lv = freq[len(blk) - 1]
                d += w * abs(lv.get(blk, 0.0) - self.levels[len(blk) - 1].get(blk, 0.0))
            self._cache[block] = d
        return d


@dataclass
class BlockClassification:
    good: list[Word]
    bad: list[Word]
    mean_distance: float


def classify_blocks(blocks: Sequence[Word], mu: TargetMeasure, eps: float,
                    depth: int) -> BlockClassification:
    """Split blocks by closeness of their empirical measures to ``mu``.

    Also reports the distance of the arithmetic mean of the block
    distributions to the target, a finite stand-in for the barycenter of
    the induced measure on measures.
    """
    if any(len(b) < depth for b in blocks):
        raise DepthError("every block must be at least as long as the depth")
    if not blocks:
        raise ValueError("no blocks to classify")
    scorer = BlockScorer(mu, depth)
    good: list[Word] = []
    bad: list[Word] = []
    mean_levels: list[dict[bytes, float]] = [dict() for _ in range(depth)]
    for b in blocks:
        if scorer.distance(b.data) <= eps:
            good.append(b)
        else:
            bad.append(b)
        counts = block_counts(b.data, depth, b.alphabet.size)
        for j in range(depth):
            total = len(b) - j
            for k, c in counts[j].items():
                mean_levels[j][k] = mean_levels[j].get(k, 0.0) + c / (total * len(blocks))
    mean_dist = 0.0
    weights = cylinder_weights(mu.alphabet_size, depth)
    target_levels = scorer.levels
    for blk, w in weights:
        lv = mean_levels[len(blk) - 1]
        mean_dist += w * abs(lv.get(blk, 0.0) - target_levels[len(blk) - 1].get(blk, 0.0))
    return BlockClassification(good=good, bad=bad, mean_distance=mean_dist)


# ---------------------------------------------------------------------------
# growth schedules


@dataclass(frozen=True)
class LiftSchedule:
    """Stage growth parameters: checkpoints, block lengths, tolerances.

    ``gap`` is the system's connection gap; padded slot lengths are
    block length + gap.  The ratio checks keep every stage's blocks
    negligible against its checkpoint and each checkpoint negligible
    against the next, which is what the constructions rely on.
    """

    checkpoints: tuple[int, ...]
    block_lengths: tuple[int, ...]
    tolerances: tuple[float, ...]
    closeness: tuple[float, ...]
    slack: tuple[float, ...]
    gap: int = 0

    def __post_init__(self):
        k = len(self.checkpoints)
        if not (len(self.block_lengths) == len(self.tolerances)
                == len(self.closeness) == len(self.slack) == k):
            raise ValueError("schedule fields must have one entry per stage")
        if k == 0:
            raise ValueError("a schedule needs at least one stage")

    @property
    def stages(self) -> int:
        return len(self.checkpoints)

    @property
    def padded_lengths(self) -> tuple[int, ...]:
        return tuple(l + self.gap for l in self.block_lengths)

    def validate(self, block_alphabet: int = 2, driver_alphabet: int = 1) -> None:
        n = self.checkpoints
        l = self.block_lengths
        for k in range(self.stages):
            stage = k + 1
            if l[k] <= self.gap:
                raise ValueError(f"stage {stage} blocks are shorter than the trim gap")
            if k > 0 and l[k] <= l[k - 1]:
                raise ValueError("block lengths must be strictly increasing")
            if n[k] < 1 or (k > 0 and n[k] <= n[k - 1]):
                raise ValueError("checkpoints must be strictly increasing")
            if l[k] * stage > n[k]:
                raise ValueError(f"stage {stage} violates block/checkpoint ratio l_k/n_k <= 1/k")
            if k + 1 < self.stages and n[k] * stage > n[k + 1]:
                raise ValueError(f"stage {stage} violates checkpoint growth n_k/n_k+1 <= 1/k")
            if self.gap * stage > l[k]:
                raise ValueError(f"stage {stage} violates gap/block ratio g0/l_k <= 1/k")
            if self.closeness[k] > self.tolerances[k] + 1e-12:
                raise ValueError("closeness must not exceed the stage tolerance")
            blocks = float(block_alphabet * driver_alphabet) ** l[k]
            g = self.slack[k]
            if not 2 * g + g * g < self.closeness[k] / blocks:
                raise ValueError(f"stage {stage} slack too large for its block family")


def schedule_from_lengths(checkpoints: Sequence[int], lengths: Sequence[int],
                          gap: int = 0, eps1: float = 0.5,
                          tolerances: Sequence[float] | None = None,
                          block_alphabet: int = 2,
                          driver_alphabet: int = 1) -> LiftSchedule:
    """Schedule with explicit block lengths and default tolerance decay."""
    k = len(checkpoints)
    if tolerances is None:
        tolerances = tuple(eps1 * 2.0 ** (1 - j) for j in range(1, k + 1))
    else:
        tolerances = tuple(tolerances)
    closeness = tolerances
    slack = tuple(
        c / (4.0 * float(block_alphabet * driver_alphabet) ** l)
        for c, l in zip(closeness, lengths)
    )
    sched = LiftSchedule(
        checkpoints=tuple(int(x) for x in checkpoints),
        block_lengths=tuple(int(x) for x in lengths),
        tolerances=tolerances,
        closeness=closeness,
        slack=slack,
        gap=gap,
    )
    sched.validate(block_alphabet, driver_alphabet)
    return sched


def geometric_schedule(checkpoints: Sequence[int], gap: int = 0, l1: int = 8,
                       eps1: float = 0.5, tolerances: Sequence[float] | None = None,
                       block_alphabet: int = 2, driver_alphabet: int = 1) -> LiftSchedule:
    """Doubling block lengths; suits flows that only score observed blocks."""
    lengths = tuple(l1 * 2 ** j for j in range(len(checkpoints)))
    return schedule_from_lengths(checkpoints, lengths, gap, eps1, tolerances,
                                 block_alphabet, driver_alphabet)


def additive_schedule(checkpoints: Sequence[int], gap: int = 0, l1: int = 4,
                      step: int = 2, eps1: float = 0.5,
                      tolerances: Sequence[float] | None = None,
                      block_alphabet: int = 2, driver_alphabet: int = 1) -> LiftSchedule:
    """Slowly growing block lengths; keeps full block enumeration feasible."""
    lengths = tuple(l1 + step * j for j in range(len(checkpoints)))
    return schedule_from_lengths(checkpoints, lengths, gap, eps1, tolerances,
                                 block_alphabet, driver_alphabet)


# ---------------------------------------------------------------------------
# reports


@dataclass
class LiftReport:
    kind: str
    horizon: int
    depth: int
    checkpoints: tuple[int, ...]
    domain_density: float
    stage_boundaries: tuple[int, ...] = ()
    scale_distances: tuple[tuple[int, float], ...] = ()
    checkpoint_distances: tuple[tuple[int, float], ...] = ()
    adjusted_checkpoints: tuple[int, ...] = ()
    pair_distances: tuple[tuple[int, float], ...] = ()
    m_density: tuple[tuple[int, float], ...] = ()
    bad_fractions: tuple[float, ...] = ()
    marker_generation: tuple[float, ...] = ()
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for pairs in (self.scale_distances, self.checkpoint_distances, self.pair_distances):
            for _, d in pairs:
                if not 0.0 <= d <= 1.0:
                    raise ValueError("reported distances must lie in [0, 1]")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "depth": self.depth,
            "checkpoints": list(self.checkpoints),
            "domain_density": self.domain_density,
            "stage_boundaries": list(self.stage_boundaries),
            "scale_distances": [[n, d] for n, d in self.scale_distances],
            "checkpoint_distances": [[n, d] for n, d in self.checkpoint_distances],
            "adjusted_checkpoints": list(self.adjusted_checkpoints),
            "pair_distances": [[n, d] for n, d in self.pair_distances],
            "m_density": [[n, d] for n, d in self.m_density],
            "bad_fractions": list(self.bad_fractions),
            "marker_generation": list(self.marker_generation),
            "config": self.config,
        }


def default_scales(horizon: int, floor: int = DEFAULT_SCALE_FLOOR) -> tuple[int, ...]:
    """Power-of-two prefix scales from the floor up to the horizon."""
    out = []
    s = floor
    while s <= horizon:
        out.append(s)
        s *= 2
    return tuple(out)


def prefix_distance(w: Word, upto: int, target: CylinderDistribution,
                    depth: int) -> float:
    emp = empirical_measure(w[:upto], depth)
    return weakstar_distance(emp, target.truncated(depth), MetricConfig(depth))


def interval_density(intervals: Sequence[tuple[int, int]], upto: int) -> float:
    """Density within [0, upto) of a set given as half-open intervals."""
    covered = sum(max(0, min(stop, upto) - start) for start, stop in intervals)
    return covered / upto


# ---------------------------------------------------------------------------
# genericize: repair a quasi-generic word into a generic one


@dataclass
class GenericizeResult:
    word: Word
    agreement: tuple[tuple[int, int], ...]
    report: LiftReport

    def agreement_density(self, upto: int) -> float:
        return interval_density(self.agreement, upto)


def genericize(x0: Word, checkpoints: Sequence[int], mu: TargetMeasure,
               sched: LiftSchedule, sft: Sft, *, depth: int = 2,
               input_tol: float = 0.2,
               scales: Sequence[int] | None = None) -> GenericizeResult:
    """Turn a word quasi-generic along the checkpoints into a generic one.

    Stage by stage the word is cut into consecutive slots, each slot's
    block (left-trimmed by the connection gap) is scored against the
    target, and the blocks that stray are replaced by the stage's most
    frequent close block.  The kept slots form the agreement set; the
    repaired specification is then shadowed into a single admissible word.
    """
    from .specification import Specification, shadow

    checkpoints = tuple(int(n) for n in checkpoints)
    if tuple(sched.checkpoints) != checkpoints:
        raise ValueError("schedule checkpoints must match the requested checkpoints")
    g0 = connection_gap(sft).g0
    if sched.gap != g0:
        raise ValueError("schedule gap does not match the system connection gap")
    if x0.alphabet != sft.alphabet:
        raise ValueError("input word alphabet does not match the system")
    sched.validate(sft.alphabet.size, 1)
    mu_dist = mu.cylinder_distribution(depth)

    for n in checkpoints:
        d = prefix_distance(x0, n, mu_dist, depth)
        if d > input_tol:
            raise ValueError(
                f"input word is not quasi-generic at checkpoint {n}: distance {d:.4f}"
            )

    # stage slots: consecutive, length l_k + g0, running until each checkpoint
    # is covered
    slots: list[tuple[int, int, int]] = []  # (stage index, start, padded length)
    pos = 0
    for k in range(sched.stages):
        L = sched.block_lengths[k] + g0
        while pos <= checkpoints[k]:
            slots.append((k, pos, L))
            pos += L
    if pos > len(x0):
        raise ValueError("input word too short for the final stage slots")

    scorer = BlockScorer(mu, depth)
    segments: list[tuple[int, Word]] = []
    agreement: list[tuple[int, int]] = []
    bad_fractions: list[float] = []
    stage_bounds: list[int] = []
    eps_by_stage = [2.0 * e for e in sched.tolerances]

    for k in range(sched.stages):
        stage_slots = [s for s in slots if s[0] == k]
        stage_bounds.append(len(stage_slots) + (stage_bounds[-1] if stage_bounds else 0))
        blocks = [x0.data[start + g0:start + L] for _, start, L in stage_slots]
        flags = [scorer.distance(b) <= eps_by_stage[k] for b in blocks]
        if not any(flags):
            raise NoGoodBlockError(f"stage {k + 1} admits no mu-typical segment")
        counts = Counter(b for b, ok in zip(blocks, flags) if ok)
        top = max(counts.values())
        mode = min(b for b, c in counts.items() if c == top)
        bad_fractions.append(1.0 - sum(flags) / len(flags))
        for (_, start, L), block, ok in zip(stage_slots, blocks, flags):
            chosen = block if ok else mode
            segments.append((start + g0, Word(sft.alphabet, chosen)))
            if ok:
                agreement.append((start + g0, start + L))

    spec = Specification(sft, segments)
    horizon = spec.segments[-1].end
    out = shadow(spec, horizon)

    scale_list = tuple(scales) if scales is not None else default_scales(horizon)
    scale_list = tuple(s for s in scale_list if s <= horizon + 1)
    report = LiftReport(
        kind="genericize",
        horizon=horizon,
        depth=depth,
        checkpoints=checkpoints,
        domain_density=spec.domain_density(horizon),
        stage_boundaries=tuple(stage_bounds),
        scale_distances=tuple(
            (s, prefix_distance(out, s, mu_dist, depth)) for s in scale_list
        ),
        checkpoint_distances=tuple(
            (n, prefix_distance(out, n, mu_dist, depth)) for n in checkpoints
        ),
        m_density=tuple((n, interval_density(agreement, n)) for n in checkpoints),
        bad_fractions=tuple(bad_fractions),
    )
    return GenericizeResult(word=out, agreement=tuple(agreement), report=report)


# ---------------------------------------------------------------------------
# paired specification assembly


@dataclass
class Allocation:
    """Integer block counts per conditioning block for one stage."""

    stage: int
    counts: dict[tuple[bytes, bytes], int]
    visits: dict[bytes, int]
    fallbacks: tuple[bytes, ...] = ()

    def check(self) -> None:
        by_c: dict[bytes, int] = {}
        for (_, c), r in self.counts.items():
            by_c[c] = by_c.get(c, 0) + r
        for c, m in self.visits.items():
            if by_c.get(c, 0) != m:
                raise AssertionError(f"allocation for block {c!r} sums to {by_c.get(c, 0)} != {m}")


def _measure_support(m: TargetMeasure, sft: Sft, length: int,
                     cap: int) -> tuple[list[bytes], np.ndarray]:
    """Admissible blocks of ``length`` with positive mass under ``m``."""
    size = sft.alphabet.size
    mat = sft.matrix
    blocks: list[bytes] = []
    probs: list[float] = []
    visited = 0
    stack = bytearray()
    prob_stack = [1.0]

    def rec():
        nonlocal visited
        visited += 1
        if visited > cap:
            raise ValueError(
                "support enumeration exceeds the desk-scale cap; "
                "use shorter stage blocks"
            )
        if len(stack) == length:
            blocks.append(bytes(stack))
            probs.append(prob_stack[-1])
            return
        base = prob_stack[-1]
        prefix = bytes(stack)
        for a in range(size):
            if stack and not mat[stack[-1], a]:
                continue
            p = m.cylinder(prefix + bytes([a]))
            if p > 0.0:
                stack.append(a)
                prob_stack.append(p)
                rec()
                prob_stack.pop()
                stack.pop()

    rec()
    return blocks, np.array(probs)


def _conditional_support(xi: TargetMeasure, c_block: bytes, sft: Sft,
                         second_size: int, cap: int) -> tuple[list[bytes], np.ndarray]:
    """First-coordinate blocks with positive joint mass against ``c_block``.

    Depth-first search over admissible prefixes, pruning prefixes whose
    paired cylinder already has zero mass; returns blocks in lexicographic
    order with their joint probabilities.
    """
    from .measures import DiagonalJoining

    if isinstance(xi, DiagonalJoining):
        # only the matching block carries mass
        p = xi.base.cylinder(c_block)
        w = Word(sft.alphabet, c_block) if max(c_block, default=0) < sft.alphabet.size else None
        if p > 0.0 and w is not None and validate_word(sft, w):
            return [c_block], np.array([p])
        return [], np.array([])

    l = len(c_block)
    size = sft.alphabet.size
    mat = sft.matrix
    blocks: list[bytes] = []
    probs: list[float] = []
    visited = 0
    stack = bytearray()

    def joint(prefix: bytes) -> float:
        pair = bytes(u * second_size + v for u, v in zip(prefix, c_block))
        return xi.cylinder(pair)

    def rec():
        nonlocal visited
        visited += 1
        if visited > cap:
            raise ValueError(
                "conditional support enumeration exceeds the desk-scale cap; "
                "use shorter stage blocks"
            )
        if len(stack) == l:
            blocks.append(bytes(stack))
            probs.append(joint(bytes(stack)))
            return
        for a in range(size):
            if stack and not mat[stack[-1], a]:
                continue
            stack.append(a)
            if joint(bytes(stack)) > 0.0:
                rec()
            stack.pop()

    rec()
    return blocks, np.array(probs)


def _spread_assignment(quotas: Sequence[int], steps: int) -> list[int]:
    """Visit order realizing integer quotas exactly, spread evenly.

    At each step the index with the largest accumulated deficit against its
    proportional quota is chosen (ties to the lower index), so every prefix
    of the schedule stays close to the target proportions.
    """
    total = sum(quotas)
    if total != steps:
        raise ValueError("quotas must sum to the number of steps")
    rates = [q / total for q in quotas]
    used = [0] * len(quotas)
    order: list[int] = []
    for step in range(1, steps + 1):
        best = -1
        best_deficit = -math.inf
        for i, q in enumerate(quotas):
            if used[i] >= q:
                continue
            deficit = rates[i] * step - used[i]
            if deficit > best_deficit:
                best = i
                best_deficit = deficit
        used[best] += 1
        order.append(best)
    return order


def build_lift_spec(y: Word, xi: TargetMeasure, mu: TargetMeasure,
                    sched: LiftSchedule, sft: Sft,
                    stage_markers: Sequence[Sequence[int]], *, depth: int = 2,
                    enum_cap: int = 1 << 20):
    """Assemble the first-coordinate specification of a paired construction.

    For every marker the conditioning block is read from ``y``; the
    conditional distribution of first-coordinate blocks given it,
    restricted to blocks close to ``mu`` and renormalized, is realized as
    an exact integer multiset via largest-remainder allocation, and the
    multiset is laid out over that conditioning block's markers in a
    spread order.  Blocks are left-trimmed by the connection gap so the
    resulting segments are always shadowable.

    Returns the specification and the per-stage allocations.
    """
    from .specification import Specification

    if len(stage_markers) != sched.stages:
        raise ValueError("need one marker list per stage")
    g0 = connection_gap(sft).g0
    if sched.gap != g0:
        raise ValueError("schedule gap does not match the system connection gap")
    second_size = y.alphabet.size
    if xi.alphabet_size != sft.alphabet.size * second_size:
        raise ValueError("joining alphabet is not the product of the two systems")

    scorer = BlockScorer(mu, depth)
    segments: list[tuple[int, Word]] = []
    allocations: list[Allocation] = []

    for k in range(sched.stages):
        l = sched.block_lengths[k]
        eps = sched.tolerances[k]
        markers = list(stage_markers[k])
        if not markers:
            raise ValueError(f"stage {k + 1} has no markers")
        if markers[-1] + l > len(y):
            raise ValueError("driver word too short to read a block at every marker")

        c_blocks = [y.data[a:a + l] for a in markers]
        visits = Counter(c_blocks)
        order_seen = list(dict.fromkeys(c_blocks))

        # product joinings share one first-coordinate support across all
        # conditioning blocks, scaled by the driver marginal
        from .measures import ProductJoining

        product_support = None
        if isinstance(xi, ProductJoining):
            product_support = _measure_support(xi.first, sft, l, enum_cap)

        supports: dict[bytes, tuple[list[bytes], np.ndarray]] = {}
        any_good = False
        for c in order_seen:
            if product_support is not None:
                base_blocks, base_probs = product_support
                blocks, probs = base_blocks, base_probs * xi.second.cylinder(c)
            else:
                blocks, probs = _conditional_support(xi, c, sft, second_size, enum_cap)
            if probs.sum() <= 0.0:
                raise NullConditionError("conditioning on null block")
            supports[c] = (blocks, probs)
            if not any_good:
                any_good = any(scorer.distance(b) <= eps for b in blocks)
        if not any_good:
            raise NoGoodBlockError(f"no mu-typical block at stage {k + 1}")

        shared_good: list[int] | None = None
        if product_support is not None:
            base_blocks, _ = product_support
            shared_good = [
                i for i, b in enumerate(base_blocks) if scorer.distance(b) <= eps
            ]
            shared_good.sort(key=lambda i: (scorer.distance(base_blocks[i]), base_blocks[i]))

        counts: dict[tuple[bytes, bytes], int] = {}
        schedules: dict[bytes, list[bytes]] = {}
        fallbacks: list[bytes] = []
        for c in order_seen:
            blocks, probs = supports[c]
            m_c = visits[c]
            if shared_good is not None:
                good_idx = list(shared_good)
            else:
                good_idx = [i for i, b in enumerate(blocks) if scorer.distance(b) <= eps]
                # order the conditional vector by closeness to the target so
                # the largest-remainder tie cascade lands on the most typical
                # blocks
                good_idx.sort(key=lambda i: (scorer.distance(blocks[i]), blocks[i]))
            if good_idx:
                mass = probs[good_idx]
                total = mass.sum()
                if total <= 0.0:
                    good_idx = []
            if good_idx:
                alloc = rational_allocation(mass / total, m_c)
                quota_blocks = [blocks[i] for i in good_idx]
                quotas = [int(r) for r in alloc]
            else:
                # no close block carries conditional mass for this driver
                # block; fall back to the most target-typical support block
                best = min(blocks, key=lambda b: (scorer.distance(b), b))
                quota_blocks = [best]
                quotas = [m_c]
                fallbacks.append(c)
            nonzero = [(b, q) for b, q in zip(quota_blocks, quotas) if q > 0]
            visit_order = _spread_assignment([q for _, q in nonzero], m_c)
            schedules[c] = [nonzero[i][0] for i in visit_order]
            for b, q in nonzero:
                counts[(b, c)] = counts.get((b, c), 0) + q

        consumed: dict[bytes, int] = {c: 0 for c in order_seen}
        for a, c in zip(markers, c_blocks):
            b = schedules[c][consumed[c]]
            consumed[c] += 1
            segments.append((a + g0, Word(sft.alphabet, b[g0:])))

        alloc_record = Allocation(
            stage=k + 1,
            counts=counts,
            visits=dict(visits),
            fallbacks=tuple(fallbacks),
        )
        alloc_record.check()
        allocations.append(alloc_record)

    return Specification(sft, segments), allocations


# ---------------------------------------------------------------------------
# the full pair lift


@dataclass
class LiftResult:
    word: Word
    report: LiftReport
    allocations: list[Allocation]


def stage_marker_layout(sched: LiftSchedule, y_len: int) -> list[list[int]]:
    """Beatty markers per stage, each stage re-anchored at the previous end.

    Within a stage the marker gaps are the padded slot length or one more;
    re-anchoring makes the junction gap exactly the next stage's slot
    length, so every gap stays in the two-value set of its stage.
    """
    out: list[list[int]] = []
    anchor = 0
    for k in range(sched.stages):
        L = sched.padded_lengths[k]
        n_k = sched.checkpoints[k]
        slope_fp = (L << _FRAC_BITS) + _PHI_FRAC
        acc = 0
        markers: list[int] = []
        while True:
            acc += slope_fp
            a = anchor + (acc >> _FRAC_BITS)
            if a + L - 1 > n_k:
                break
            markers.append(a)
        if not markers:
            raise ValueError(f"stage {k + 1} leaves no room for marker slots")
        if markers[-1] + sched.block_lengths[k] > y_len:
            raise ValueError("driver word too short for the stage markers")
        out.append(markers)
        anchor = markers[-1]
    return out


def lift_pair(y: Word, checkpoints: Sequence[int], xi: TargetMeasure,
              mu: TargetMeasure, sft: Sft, sched: LiftSchedule, *,
              depth: int = 2, input_tol: float = 0.2,
              scales: Sequence[int] | None = None,
              enum_cap: int = 1 << 20) -> LiftResult:
    """Construct a point over ``sft`` pairing with ``y`` to realize ``xi``.

    The output word is close to ``mu`` at every reported prefix scale while
    the zipped pair tracks ``xi`` at the adjusted checkpoints, which sit at
    the last marker slot of each stage.
    """
    checkpoints = tuple(int(n) for n in checkpoints)
    if len(checkpoints) < 2:
        raise ValueError("checkpoint list too short (< 2 stages)")
    if tuple(sched.checkpoints) != checkpoints:
        raise ValueError("schedule checkpoints must match the requested checkpoints")
    g0 = connection_gap(sft).g0
    if sched.gap != g0:
        raise ValueError("schedule gap does not match the system connection gap")
    second_size = y.alphabet.size
    if xi.alphabet_size != sft.alphabet.size * second_size:
        raise ValueError("joining alphabet is not the product of the two systems")
    sched.validate(sft.alphabet.size, second_size)

    # marginal coherence of the joining against the requested first marginal
    dm = min(sched.block_lengths[0], 3)
    from .core import admissible_words

    for b in admissible_words(sft, dm):
        total = 0.0
        for idx in range(second_size ** dm):
            v = idx
            cword = bytearray(dm)
            for p in range(dm - 1, -1, -1):
                cword[p] = v % second_size
                v //= second_size
            pair = bytes(u * second_size + w for u, w in zip(b, cword))
            total += xi.cylinder(pair)
        if abs(total - mu.cylinder(b)) > 1e-6:
            raise ValueError("joining first marginal disagrees with the target measure")

    nu_dist = marginal(xi, 1, second_size, depth)
    for n in checkpoints:
        if n >= len(y):
            raise ValueError("driver word shorter than a checkpoint")
        d = prefix_distance(y, n, nu_dist, depth)
        if d > input_tol:
            raise ValueError(
                f"driver word is not quasi-generic at checkpoint {n}: distance {d:.4f}"
            )

    markers = stage_marker_layout(sched, len(y))
    spec, allocations = build_lift_spec(
        y, xi, mu, sched, sft, markers, depth=depth, enum_cap=enum_cap
    )
    horizon = max(checkpoints[-1], spec.segments[-1].end)
    if horizon >= len(y):
        horizon = len(y) - 1
    from .specification import shadow

    x = shadow(spec, horizon)

    adjusted = tuple(
        min(stage[-1] + sched.padded_lengths[k] - 1, horizon)
        for k, stage in enumerate(markers)
    )
    mu_dist = mu.cylinder_distribution(depth)
    xi_dist = xi.cylinder_distribution(depth)
    pair = zip_words(x, y[:len(x)])
    scale_list = tuple(scales) if scales is not None else default_scales(horizon)
    scale_list = tuple(s for s in scale_list if s <= horizon + 1)

    bad_fractions = []
    marker_gen = []
    for k, stage in enumerate(markers):
        scorer = BlockScorer(mu, depth)
        l = sched.block_lengths[k]
        blocks = {y.data[a:a + l] for a in stage}
        bad = sum(1 for b in blocks if scorer.distance(b) > sched.tolerances[k])
        bad_fractions.append(bad / len(blocks))
        seq = MarkerSequence(
            L=sched.padded_lengths[k],
            markers=tuple(stage),
            slope=sched.padded_lengths[k] + (math.sqrt(5) - 1) / 2,
        )
        marker_gen.append(
            relative_generation_distance(y, seq, _SecondMarginal(nu_dist), depth, len(stage))
        )

    report = LiftReport(
        kind="lift_pair",
        horizon=horizon,
        depth=depth,
        checkpoints=checkpoints,
        domain_density=spec.domain_density(horizon),
        stage_boundaries=tuple(np.cumsum([len(s) for s in markers]).tolist()),
        scale_distances=tuple(
            (s, prefix_distance(x, s, mu_dist, depth)) for s in scale_list
        ),
        checkpoint_distances=tuple(
            (n, prefix_distance(x, n, mu_dist, depth)) for n in checkpoints
        ),
        adjusted_checkpoints=adjusted,
        pair_distances=tuple(
            (n, prefix_distance(pair, n, xi_dist, depth)) for n in adjusted
        ),
        bad_fractions=tuple(bad_fractions),
        marker_generation=tuple(marker_gen),
    )
    return LiftResult(word=x, report=report, allocations=allocations)


class _SecondMarginal(TargetMeasure):
    """Wrap a cylinder family as a target for marker diagnostics."""

    def __init__(self, dist: CylinderDistribution):
        self.dist = dist
        self.alphabet_size = dist.alphabet_size

    def cylinder(self, block: bytes) -> float:
        if not block:
            return 1.0
        return self.dist.value(block)

    def cylinder_distribution(self, depth: int) -> CylinderDistribution:
        return self.dist.truncated(depth)


# ---------------------------------------------------------------------------
# oscillating averages


@dataclass
class OscillationCheckpoint:
    position: int
    average: float
    phase: str  # "above" or "below"
    met: bool


@dataclass
class OscillationResult:
    word: Word
    cylinder: Word
    scale: float
    offset: float
    checkpoints: list[OscillationCheckpoint]

    def to_json(self) -> dict:
        return {
            "cylinder": str(self.cylinder),
            "scale": self.scale,
            "offset": self.offset,
            "checkpoints": [
                {"n": c.position, "average": c.average, "phase": c.phase, "met": c.met}
                for c in self.checkpoints
            ],
        }


# Integral targets for the separating test function.  Alternating blocks at
# 4:1 length growth drive the running average toward the two-cycle fixed
# points (3*hi + lo)/4 and (3*lo + hi)/4, which must clear the thresholds
# 1 and 0 with margin; (2.5, -1.75) gives fixed points 1.65 and -0.9.
OSC_TARGET_HI = 2.5
OSC_TARGET_LO = -1.75


def oscillation_point(mu: TargetMeasure, nu: TargetMeasure, sft: Sft,
                      stages: int, *, seed: int | str = 0,
                      base_length: int = 256) -> OscillationResult:
    """Word whose running averages of a cylinder test function oscillate.

    The first cylinder of depth <= 3 separating the two measures maximally
    is turned into an affine test function with integral OSC_TARGET_HI
    under ``mu`` and OSC_TARGET_LO under ``nu``; alternating typical blocks
    of lengths base * 4^j then push the averages above 1 and below 0 at
    consecutive block ends.
    """
    if stages < 1:
        raise ValueError("need at least one stage")
    g0 = connection_gap(sft).g0
    size = sft.alphabet.size
    best_block: bytes | None = None
    best_gap = 0.0
    for blk, _ in cylinder_weights(size, min(3, 3)):
        try:
            gap = abs(mu.cylinder(blk) - nu.cylinder(blk))
        except DepthError:
            continue
        if gap > best_gap + 1e-15:
            best_gap = gap
            best_block = blk
    if best_block is None or best_gap <= 1e-9:
        raise ValueError("measures not separated at supported depth")

    mu_b = mu.cylinder(best_block)
    nu_b = nu.cylinder(best_block)
    scale = (OSC_TARGET_HI - OSC_TARGET_LO) / (mu_b - nu_b)
    offset = OSC_TARGET_HI - scale * mu_b

    pieces: list[bytes] = []
    checkpoints: list[int] = []
    total = 0
    prev_symbol: int | None = None
    for j in range(1, stages + 1):
        target = mu if j % 2 == 1 else nu
        length = base_length * 4 ** j
        rng = stream(seed, f"oscillation/{j}")
        block = sample_word(target, length, rng)
        if not validate_word(sft, block):
            raise ValueError("sampled block is not admissible; target not supported here")
        if prev_symbol is not None and g0 >= 0:
            filler = connect(sft, prev_symbol, block[0], g0)
            pieces.append(filler.data)
            total += g0
        pieces.append(block.data)
        total += length
        prev_symbol = block[len(block) - 1]
        checkpoints.append(total)

    # tail so the last window reads are complete
    tail = least_continuation(sft, prev_symbol, len(best_block) - 1) if len(best_block) > 1 else b""
    data = b"".join(pieces) + tail
    x = Word(sft.alphabet, data)

    arr = x.as_array()
    match = np.ones(len(arr) - len(best_block) + 1, dtype=bool)
    for t, s in enumerate(best_block):
        match &= arr[t:t + len(match)] == s
    cum = np.concatenate([[0], np.cumsum(match)])

    records = []
    for j, n in enumerate(checkpoints, start=1):
        count = int(cum[n])
        avg = scale * count / n + offset
        phase = "above" if j % 2 == 1 else "below"
        met = avg > 1.0 if phase == "above" else avg < 0.0
        records.append(OscillationCheckpoint(position=n, average=avg, phase=phase, met=met))

    return OscillationResult(
        word=x,
        cylinder=Word(sft.alphabet, best_block),
        scale=scale,
        offset=offset,
        checkpoints=records,
    )
