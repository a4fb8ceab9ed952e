"""Synthetic data: random valid annotations and plantable embeddings.

The generator produces annotations that always pass validation, exercising
conduits, feature slippage, split halves, and virtual senses. The embedding
builder plants a forest inside the vectors so that parent direction and
label are linearly decodable, which gives training code a clean target.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from sensechain.corpus import EmbeddingTable
from sensechain.decoding import Parse, parse_from_annotation
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

_WORDS = (
    "arch", "band", "bark", "bay", "beam", "bolt", "brace", "brook", "cape",
    "chord", "crane", "crest", "dart", "draft", "film", "flank", "fork",
    "gale", "gorge", "grain", "hatch", "hull", "knot", "lash", "ledge",
    "mast", "mould", "notch", "perch", "pique", "plume", "quill", "reed",
    "ridge", "rind", "scale", "shard", "sling", "spool", "sprig", "stern",
    "swarm", "tuft", "vane", "wisp",
)


def synthetic_word(index: int) -> str:
    base = _WORDS[index % len(_WORDS)]
    return base if index < len(_WORDS) else f"{base}{index // len(_WORDS)}"


def random_annotation(
    word: str,
    rng: np.random.Generator,
    n_senses: int | None = None,
    annotator: str = "synthetic",
    p_extra_root: float = 0.2,
    p_conduit: float = 0.15,
    p_split: float = 0.0,
    p_virtual: float = 0.0,
) -> WordAnnotation:
    """A random annotation that satisfies every invariant.

    Structure grows sense by sense: each new sense becomes another prototype
    with probability ``p_extra_root`` or attaches to a uniformly chosen
    legal (parent, label) option. Metaphors get full judgement sets that
    meet the slippage minimum. Split pairs and virtual senses are injected
    afterwards when requested.
    """
    n = int(n_senses if n_senses is not None else rng.integers(2, 9))
    kinds: list[LabelKind] = [LabelKind.PROTOTYPE]
    parents: list[int | None] = [None]
    conduits: list[bool] = [False]
    for i in range(1, n):
        options: list[tuple[int, LabelKind]] = []
        for j in range(i):
            if kinds[j] == LabelKind.PROTOTYPE or conduits[j]:
                options.append((j, LabelKind.METONYMY))
            if kinds[j] != LabelKind.METAPHOR or conduits[j]:
                options.append((j, LabelKind.METAPHOR))
        if rng.random() < p_extra_root or not options:
            kinds.append(LabelKind.PROTOTYPE)
            parents.append(None)
            conduits.append(False)
        else:
            parent, kind = options[int(rng.integers(0, len(options)))]
            kinds.append(kind)
            parents.append(parent)
            conduits.append(bool(rng.random() < p_conduit))

    ids = [SenseId.plain(word, i + 1) for i in range(n)]
    features: list[tuple[Feature, ...]] = [() for _ in range(n)]
    judgements: list[tuple[FeatureJudgement, ...]] = [() for _ in range(n)]
    for i in range(n):
        child_metaphors = [
            j for j in range(n) if parents[j] == i and kinds[j] == LabelKind.METAPHOR
        ]
        if not child_metaphors:
            continue
        count = int(rng.integers(1, 4))
        features[i] = tuple(
            Feature(f + 1, f"has trait {word}-{i + 1}-{f + 1}") for f in range(count)
        )
        for j in child_metaphors:
            judgements[j] = _random_judgements(features[i], rng)

    senses = [
        SenseAnnotation(
            sense=SenseRecord(ids[i], f"sense {i + 1} of {word}", (), True),
            label=SenseLabel(kinds[i], ids[parents[i]] if parents[i] is not None else None),
            conduit=conduits[i] and kinds[i] != LabelKind.PROTOTYPE,
            features=features[i],
            judgements=judgements[i],
        )
        for i in range(n)
    ]
    annotation = WordAnnotation(word, annotator, tuple(senses))
    if p_split > 0 and rng.random() < p_split:
        annotation = _inject_split(annotation, rng)
    if p_virtual > 0 and rng.random() < p_virtual:
        annotation = _inject_virtual(annotation, rng)
    return annotation


def _random_judgements(
    parent_features: tuple[Feature, ...], rng: np.random.Generator
) -> tuple[FeatureJudgement, ...]:
    verdicts = [Verdict(rng.choice(["kept", "lost", "modified"])) for _ in parent_features]
    if Verdict.MODIFIED not in verdicts and not (
        Verdict.KEPT in verdicts and Verdict.LOST in verdicts
    ):
        verdicts[0] = Verdict.MODIFIED
    return tuple(
        FeatureJudgement(
            f.id,
            v,
            f"{f.text} in a shifted way" if v == Verdict.MODIFIED else None,
        )
        for f, v in zip(parent_features, verdicts)
    )


def _inject_split(annotation: WordAnnotation, rng: np.random.Generator) -> WordAnnotation:
    """Split one metaphor-free plain sense into an A half plus a metaphor B half."""
    from dataclasses import replace

    candidates = [
        s
        for s in annotation.senses
        if not s.id.is_virtual
        and not s.id.is_split_half
        and s.label.kind != LabelKind.METAPHOR
        and not s.features
    ]
    if not candidates:
        return annotation
    target = candidates[int(rng.integers(0, len(candidates)))]
    word = annotation.word
    a_id = SenseId.split_half(word, target.id.base, "A")
    b_id = SenseId.split_half(word, target.id.base, "B")
    feature = Feature(1, f"has trait {word}-{target.id.index}-split")
    half_a = replace(
        target,
        sense=replace(target.sense, id=a_id),
        label=replace(target.label),
        features=(feature,),
    )
    half_b = SenseAnnotation(
        sense=SenseRecord(b_id, f"figurative half of {target.sense.definition}", (), True),
        label=SenseLabel(LabelKind.METAPHOR, a_id),
        features=(),
        judgements=(FeatureJudgement(1, Verdict.MODIFIED, "has a shifted trait"),),
    )
    senses = []
    for s in annotation.senses:
        if s.id == target.id:
            senses.extend([half_a, half_b])
        elif s.label.parent == target.id:
            senses.append(replace(s, label=replace(s.label, parent=a_id)))
        else:
            senses.append(s)
    return WordAnnotation(word, annotation.annotator, tuple(senses), annotation.word_known)


def _inject_virtual(annotation: WordAnnotation, rng: np.random.Generator) -> WordAnnotation:
    """Interpose a virtual sense on one non-metaphor edge."""
    from dataclasses import replace

    by_id = annotation.sense_map()
    edges = [
        s
        for s in annotation.senses
        if s.label.parent is not None and s.label.kind == LabelKind.METONYMY
    ]
    if not edges:
        return annotation
    child = edges[int(rng.integers(0, len(edges)))]
    parent = by_id[child.label.parent]
    word = annotation.word
    ordinal = 1 + sum(1 for s in annotation.senses if s.id.is_virtual)
    v_id = SenseId.virtual(word, ordinal)
    # The virtual must accept the child's metonymy, so it is a conduit
    # unless it can itself be a prototype (it cannot: it needs a parent).
    v_kind = (
        LabelKind.METONYMY
        if parent.label.kind == LabelKind.PROTOTYPE or parent.conduit
        else LabelKind.METAPHOR
    )
    v_judgements: tuple[FeatureJudgement, ...] = ()
    v = SenseAnnotation(
        sense=SenseRecord(v_id, f"intermediate sense of {word}", (), True),
        label=SenseLabel(v_kind, parent.id),
        conduit=True,
        judgements=v_judgements,
    )
    if v_kind == LabelKind.METAPHOR:
        # Judging the parent's features keeps slippage complete; give the
        # parent a feature set if metaphors never extended it before.
        if not parent.features:
            parent = replace(
                parent, features=(Feature(1, f"has trait {word}-{parent.id.index}-v"),)
            )
        v = replace(v, judgements=_random_judgements(parent.features, rng))
    senses = []
    for s in annotation.senses:
        if s.id == parent.id:
            senses.append(parent)
        elif s.id == child.id:
            senses.append(replace(s, label=replace(s.label, parent=v_id)))
        else:
            senses.append(s)
    senses.append(v)
    return WordAnnotation(word, annotation.annotator, tuple(senses), annotation.word_known)


def planted_embeddings(
    parses: Mapping[str, Parse] | Iterable[WordAnnotation],
    identity_dim: int = 16,
    noise: float = 0.01,
    scale: float = 10.0,
    seed: int = 0,
) -> EmbeddingTable:
    """Embeddings that encode each word's forest with exact linear margins.

    Each sense vector concatenates its label one-hot, a per-word orthonormal
    identity vector, and a copy of its parent's identity (its own identity
    for prototypes, which lets the mean-embedding root win the prototype's
    head competition by a 1/n margin).
    """
    if not isinstance(parses, Mapping):
        parses = {ann.word: parse_from_annotation(ann) for ann in parses}
    rng = np.random.default_rng(seed)
    k = 3 + 2 * identity_dim
    vectors: dict[SenseId, np.ndarray] = {}
    for word in sorted(parses):
        parse = parses[word]
        senses = parse.sense_ids()
        n = len(senses)
        if n > identity_dim:
            raise ValueError(f"{word}: {n} senses exceed identity dimension {identity_dim}")
        basis, _ = np.linalg.qr(rng.standard_normal((identity_dim, identity_dim)))
        identity = {sid: basis[:, i] for i, sid in enumerate(senses)}
        labels, parents = parse.labels(), parse.parents()
        for sid in senses:
            one_hot = np.zeros(3)
            one_hot[(LabelKind.PROTOTYPE, LabelKind.METAPHOR, LabelKind.METONYMY).index(labels[sid])] = 1.0
            parent = parents[sid]
            pointer = identity[sid] if parent is None else identity[parent]
            vec = np.concatenate([one_hot, identity[sid], pointer]) * scale
            if noise:
                vec = vec + rng.standard_normal(k) * noise
            vectors[sid] = vec
    return EmbeddingTable(vectors, k)
