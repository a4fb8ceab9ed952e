"""Workbench for sense-chain annotation.

Validates and manipulates sense forests (prototype/metaphor/metonymy chains
with feature slippage), computes agreement and combinatorial statistics,
trains polysemy-parsing baselines, and serves a live annotation workflow.
"""

from sensechain.model import (
    Feature,
    FeatureJudgement,
    HomonymyPartition,
    LabelKind,
    SenseAnnotation,
    SenseId,
    SenseLabel,
    SenseRecord,
    Verdict,
    Violation,
    WordAnnotation,
    merge_split,
    partition,
    preprocess,
    strip_virtual,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Feature",
    "FeatureJudgement",
    "HomonymyPartition",
    "LabelKind",
    "SenseAnnotation",
    "SenseId",
    "SenseLabel",
    "SenseRecord",
    "Verdict",
    "Violation",
    "WordAnnotation",
    "merge_split",
    "partition",
    "preprocess",
    "strip_virtual",
    "validate",
    "__version__",
]
