"""Symbolic dynamics at desk scale: shift spaces, empirical measures,
specifications with exact shadowing, and constructions of generic points
paired against quasi-generic drivers."""

from .core import (
    Alphabet,
    ConnectionGap,
    FillerError,
    NotMixingError,
    Sft,
    Word,
    admissible_words,
    connect,
    connection_gap,
    validate_word,
    word,
    word_from_text,
    word_to_text,
)
from .measures import (
    Bernoulli,
    CylinderDistribution,
    DepthError,
    DiagonalJoining,
    EmpiricalTarget,
    MarkovChain,
    MetricConfig,
    NullConditionError,
    ProductJoining,
    TargetMeasure,
    cesaro_average,
    conditional_joint,
    empirical_measure,
    invariance_defect,
    marginal,
    measure_cylinder,
    parse_target,
    project_pair_distribution,
    shift_pushforward,
    stationary_vector,
    unzip_word,
    weakstar_distance,
    zip_words,
)
from .specification import (
    GapCheck,
    GapSchedule,
    Segment,
    Specification,
    shadow,
    shadow_report,
    spec_empirical,
    validate_gaps,
)
from .lift import (
    Allocation,
    BlockClassification,
    GenericizeResult,
    LiftReport,
    LiftResult,
    LiftSchedule,
    MarkerSequence,
    NoGoodBlockError,
    OscillationResult,
    additive_schedule,
    build_lift_spec,
    classify_blocks,
    default_scales,
    genericize,
    geometric_schedule,
    lift_pair,
    marker_sequence,
    oscillation_point,
    rational_allocation,
    relative_generation_distance,
    schedule_from_lengths,
    stage_marker_layout,
)
from .sampling import sample_word, seed_int, stream
from .sequences import (
    DigitSum,
    Selector,
    add_base_b,
    block_entropy,
    champernowne,
    normality_deviation,
    select,
    sturmian,
)

__version__ = "0.1.0"
