"""Label-shift and covariate-shift benchmark splits."""

from .builders import make_covariate_split, make_label_split, round_half_up
from .manifest import (
    PARTITIONS,
    SPLIT_KINDS,
    InfeasibleSplit,
    SplitManifest,
    ValidationReport,
    largest_remainder,
    validate_manifest,
)
from .summary import format_summary, summarize_shift

__all__ = [
    "InfeasibleSplit",
    "PARTITIONS",
    "SPLIT_KINDS",
    "SplitManifest",
    "ValidationReport",
    "format_summary",
    "largest_remainder",
    "make_covariate_split",
    "make_label_split",
    "round_half_up",
    "summarize_shift",
    "validate_manifest",
]
