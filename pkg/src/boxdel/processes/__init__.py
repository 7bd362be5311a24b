"""Exploration, census and digit-revelation procedures on random point sets."""

from .census import BoxCensus, CensusRow, empty_box_census
from .intervals import (
    DetectionOutcome,
    IntervalCensus,
    choose_r,
    consecutive_pairs,
    detect_edge_via_digits,
    interval_census_2d,
)
from .pairs import (
    ParamsOutOfRange,
    RecursionAborted,
    StageRecord,
    SuitablePairs,
    box_f,
    check_suitable_pairs,
    default_L,
    suitable_pairs,
)
from .sweep import ExplorationTrace, default_cap, sweep_exploration, verify_cover_claim
