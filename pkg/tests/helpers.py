"""Shared fixture builders for the test suite."""

from __future__ import annotations

from sensechain.model import (
    Feature,
    FeatureJudgement,
    LabelKind,
    SenseAnnotation,
    SenseId,
    SenseLabel,
    SenseRecord,
    Verdict,
    WordAnnotation,
)


def sense(
    word: str,
    index: str,
    kind: str,
    parent: str | None = None,
    conduit: bool = False,
    features=(),
    judgements=(),
    definition: str | None = None,
    known: bool = True,
) -> SenseAnnotation:
    return SenseAnnotation(
        sense=SenseRecord(SenseId(word, index), definition or f"sense {index} of {word}", (), known),
        label=SenseLabel(LabelKind(kind), SenseId(word, parent) if parent else None),
        conduit=conduit,
        features=tuple(features),
        judgements=tuple(judgements),
    )


def feat(fid: int, text: str = "") -> Feature:
    return Feature(fid, text or f"has trait {fid}")


def judge(fid: int, verdict: str, text: str | None = None) -> FeatureJudgement:
    if verdict == "modified" and text is None:
        text = f"has trait {fid} differently"
    return FeatureJudgement(fid, Verdict(verdict), text)


def word_ann(word: str, senses, annotator: str = "a1", word_known: bool = True) -> WordAnnotation:
    return WordAnnotation(word, annotator, tuple(senses), word_known)


def march_annotation(annotator: str = "a1") -> WordAnnotation:
    """Two prototypes, a metonym of one, and a metaphor hanging off the metonym."""
    return word_ann(
        "march",
        (
            sense("march", "1", "prototype", definition="the month after February"),
            sense("march", "2", "prototype", definition="walking with regular steps"),
            sense(
                "march",
                "4",
                "metonymy",
                "2",
                definition="a procession of people walking together",
                features=(feat(1, "gradually advances"), feat(2, "is a group of people")),
            ),
            sense(
                "march",
                "3",
                "metaphor",
                "4",
                definition="a steady advance",
                judgements=(judge(1, "kept"), judge(2, "lost")),
            ),
        ),
        annotator,
    )


def neck_annotation(annotator: str = "a1") -> WordAnnotation:
    """One prototype with two metaphors and two metonyms: a single cluster."""
    return word_ann(
        "neck",
        (
            sense(
                "neck",
                "1",
                "prototype",
                definition="the body part joining head and torso",
                features=(feat(1, "is long and thin"), feat(2, "is part of a body")),
            ),
            sense(
                "neck",
                "2",
                "metaphor",
                "1",
                definition="a narrow strip of land",
                judgements=(judge(1, "kept"), judge(2, "modified", "is part of a landmass")),
            ),
            sense("neck", "3", "metonymy", "1", definition="a cut of meat from the neck"),
            sense(
                "neck",
                "4",
                "metaphor",
                "1",
                definition="a narrow part of an artifact",
                judgements=(judge(1, "kept"), judge(2, "lost")),
            ),
            sense("neck", "5", "metonymy", "1", definition="an opening in a garment"),
        ),
        annotator,
    )
