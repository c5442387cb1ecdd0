"""Specifications as data: placed orbit segments, gap schedules, shadowing.

A specification is an ordered list of (start, word) segments with
nonnegative gaps.  On a mixing SFT every gap of at least the connection
gap can be filled admissibly, so shadowing is exact: the output word
equals each segment on its interval, symbol for symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Sft, Word, connect, least_continuation, least_path_into, validate_word
from .measures import CylinderDistribution, DepthError


@dataclass(frozen=True)
class Segment:
    start: int
    word: Word

    @property
    def end(self) -> int:
        """Last index covered by the segment."""
        return self.start + len(self.word) - 1


@dataclass
class Specification:
    """Ordered placed segments over an SFT; gaps are derived, not stored."""

    sft: Sft
    segments: tuple[Segment, ...]

    def __init__(self, sft: Sft, segments):
        self.sft = sft
        segs = tuple(
            s if isinstance(s, Segment) else Segment(int(s[0]), s[1]) for s in segments
        )
        if not segs:
            raise ValueError("a specification needs at least one segment")
        prev_end = None
        for seg in segs:
            if seg.start < 0:
                raise ValueError("segment starts must be nonnegative")
            if len(seg.word) == 0:
                raise ValueError("segments must be nonempty words")
            if not validate_word(sft, seg.word):
                raise ValueError(f"segment at {seg.start} is not admissible")
            if prev_end is not None and seg.start <= prev_end:
                raise ValueError("segments must be disjoint and increasing")
            prev_end = seg.end
        self.segments = segs

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(s.word) for s in self.segments)

    @property
    def gaps(self) -> tuple[int, ...]:
        """Gap after each segment except the last."""
        return tuple(
            nxt.start - cur.end - 1
            for cur, nxt in zip(self.segments, self.segments[1:])
        )

    @property
    def domain_size(self) -> int:
        return sum(self.lengths)

    def domain_density(self, horizon: int) -> float:
        covered = sum(
            max(0, min(seg.end, horizon) - seg.start + 1) for seg in self.segments
        )
        return covered / (horizon + 1)

    def to_json(self) -> dict:
        return {
            "sft": self.sft.to_json(),
            "segments": [{"start": s.start, "word": str(s.word)} for s in self.segments],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Specification":
        from .core import word

        sft = Sft.from_json(obj["sft"])
        segs = [(int(s["start"]), word(sft.alphabet, s["word"])) for s in obj["segments"]]
        return cls(sft, segs)


@dataclass(frozen=True)
class GapSchedule:
    """Per-stage gap requirements and tolerances.

    Stage k covers segment indices in (stage_bounds[k-1], stage_bounds[k]]
    with 1-based segments and stage_bounds[0] = 0 implied.  The tolerance
    sequence must have a summable shape; the stored finite prefix is checked
    against the default geometric decay.
    """

    stage_bounds: tuple[int, ...]
    min_gaps: tuple[int, ...]
    tolerances: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.stage_bounds) == len(self.min_gaps) == len(self.tolerances)):
            raise ValueError("schedule fields must have one entry per stage")
        prev = 0
        for b in self.stage_bounds:
            if b <= prev:
                raise ValueError("stage bounds must be strictly increasing from 0")
            prev = b
        if any(g < 0 for g in self.min_gaps):
            raise ValueError("gap requirements must be nonnegative")
        if any(e <= 0 for e in self.tolerances):
            raise ValueError("tolerances must be positive")
        if any(b > a + 1e-12 for a, b in zip(self.tolerances, self.tolerances[1:])):
            raise ValueError("tolerances must be non-increasing (summable shape)")

    @classmethod
    def constant(cls, gap: int, num_segments: int, eps1: float = 0.5) -> "GapSchedule":
        return cls((num_segments,), (gap,), (eps1,))

    @classmethod
    def geometric(cls, stage_bounds, min_gaps, eps1: float = 0.5) -> "GapSchedule":
        bounds = tuple(stage_bounds)
        eps = tuple(eps1 * 2.0 ** (1 - k) for k in range(1, len(bounds) + 1))
        return cls(bounds, tuple(min_gaps), eps)

    def stage_of(self, segment_index: int) -> int:
        """1-based stage containing a 1-based segment index."""
        for k, bound in enumerate(self.stage_bounds, start=1):
            if segment_index <= bound:
                return k
        return len(self.stage_bounds)


@dataclass(frozen=True)
class GapCheck:
    ok: bool
    first_violation: int | None = None


def validate_gaps(spec: Specification, sched: GapSchedule) -> GapCheck:
    """Check every gap against its stage requirement; report the least violator."""
    for idx, gap in enumerate(spec.gaps, start=1):
        stage = sched.stage_of(idx)
        if gap < sched.min_gaps[stage - 1]:
            return GapCheck(False, idx)
    return GapCheck(True, None)


def spec_empirical(spec: Specification, depth: int) -> CylinderDistribution:
    """Pooled sliding-window block frequencies over the segments.

    Windows are read within segments only, never across gaps, so the
    family is the symbolic reading of the specification's own statistics.
    """
    if any(len(s.word) < depth for s in spec.segments):
        raise DepthError("every segment must be at least as long as the depth")
    size = spec.sft.alphabet.size
    levels: list[dict[bytes, float]] = []
    for j in range(1, depth + 1):
        counts: dict[bytes, int] = {}
        total = 0
        for seg in spec.segments:
            data = seg.word.data
            for i in range(len(data) - j + 1):
                k = data[i:i + j]
                counts[k] = counts.get(k, 0) + 1
            total += len(data) - j + 1
        levels.append({k: c / total for k, c in counts.items()})
    return CylinderDistribution(size, levels, validate=False)


def shadow(spec: Specification, horizon: int) -> Word:
    """Single admissible word matching every segment exactly on its interval.

    Gaps are filled by the least connecting words, the stretch before the
    first segment by the least word that can precede it, and the tail after
    the last segment by the least admissible continuation.
    """
    last_end = spec.segments[-1].end
    if horizon < last_end:
        raise ValueError(f"horizon {horizon} ends before the last segment ({last_end})")
    sft = spec.sft
    out = bytearray(horizon + 1)

    first = spec.segments[0]
    if first.start > 0:
        out[0:first.start] = least_path_into(sft, first.start, first.word[0])

    for seg in spec.segments:
        out[seg.start:seg.end + 1] = seg.word.data

    for cur, nxt in zip(spec.segments, spec.segments[1:]):
        gap = nxt.start - cur.end - 1
        filler = connect(sft, cur.word[len(cur.word) - 1], nxt.word[0], gap)
        out[cur.end + 1:nxt.start] = filler.data

    if horizon > last_end:
        tail = least_continuation(sft, out[last_end], horizon - last_end)
        out[last_end + 1:horizon + 1] = tail

    return Word(sft.alphabet, bytes(out))


def shadow_report(spec: Specification, horizon: int) -> dict:
    """Shadow a specification and report the domain density of its segments."""
    w = shadow(spec, horizon)
    return {
        "word": str(w),
        "report": {
            "domain_density": spec.domain_density(horizon),
            "exactness": True,
            "horizon": horizon,
        },
    }
