"""Sense-forest data model: labelled senses, chain edges, and feature slippage.

A word's senses form a forest. Every sense is either a prototype (a root) or
is derived from exactly one other sense by metaphor or metonymy. Metaphors
additionally record how the parent's features transform (kept/lost/modified).
Annotators may split an inventory sense into an "A"/"B" pair or insert
virtual senses; both conventions are encoded in the sense index.

All values are immutable after construction. Semantic invariants are not
enforced by constructors: ``validate`` reports every violation as data, so
that malformed annotations can be inspected, rejected by the service, or
surfaced by the CLI without raising.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence


class LabelKind(str, Enum):
    PROTOTYPE = "prototype"
    METAPHOR = "metaphor"
    METONYMY = "metonymy"


class Verdict(str, Enum):
    KEPT = "kept"
    LOST = "lost"
    MODIFIED = "modified"


LABEL_KINDS = (LabelKind.PROTOTYPE, LabelKind.METAPHOR, LabelKind.METONYMY)
EDGE_KINDS = (LabelKind.METAPHOR, LabelKind.METONYMY)

_PLAIN_RE = re.compile(r"^[1-9][0-9]*$")
_SPLIT_RE = re.compile(r"^([1-9][0-9]*)([AB])$")
_VIRTUAL_RE = re.compile(r"^V([1-9][0-9]*)$")


class SchemaError(ValueError):
    """Raised when a document does not have the canonical interchange shape."""


@dataclass(frozen=True)
class SenseId:
    """Identifier of one sense of a word.

    ``index`` is a positive ordinal ("3"), a split half ("3A"/"3B"), or a
    virtual sense ("V1"). Unique within a word.
    """

    word: str
    index: str

    def __post_init__(self) -> None:
        if not self.word:
            raise SchemaError("sense id needs a non-empty word")
        if not (
            _PLAIN_RE.match(self.index)
            or _SPLIT_RE.match(self.index)
            or _VIRTUAL_RE.match(self.index)
        ):
            raise SchemaError(f"malformed sense index {self.index!r}")

    @classmethod
    def plain(cls, word: str, ordinal: int) -> "SenseId":
        return cls(word, str(ordinal))

    @classmethod
    def split_half(cls, word: str, ordinal: int, half: str) -> "SenseId":
        return cls(word, f"{ordinal}{half}")

    @classmethod
    def virtual(cls, word: str, ordinal: int) -> "SenseId":
        return cls(word, f"V{ordinal}")

    @property
    def is_virtual(self) -> bool:
        return self.index.startswith("V")

    @property
    def is_split_half(self) -> bool:
        return self.index[-1] in "AB" and not self.is_virtual

    @property
    def base(self) -> int:
        """Numeric part of the index."""
        m = _SPLIT_RE.match(self.index) or _VIRTUAL_RE.match(self.index)
        return int(m.group(1)) if m else int(self.index)

    @property
    def split_suffix(self) -> str:
        return self.index[-1] if self.is_split_half else ""

    def sort_key(self) -> tuple:
        return (1 if self.is_virtual else 0, self.base, self.split_suffix)

    def __str__(self) -> str:
        return f"{self.word}.{self.index}"


@dataclass(frozen=True)
class SenseRecord:
    """An inventory sense (or an annotator-added virtual/split sense)."""

    id: SenseId
    definition: str
    synonyms: tuple[str, ...] = ()
    known: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "synonyms", tuple(self.synonyms))

    @property
    def is_virtual(self) -> bool:
        return self.id.is_virtual

    @property
    def is_split_half(self) -> bool:
        return self.id.is_split_half


@dataclass(frozen=True)
class SenseLabel:
    """Chain label of a sense: its kind and, for derived senses, the parent."""

    kind: LabelKind
    parent: SenseId | None = None


@dataclass(frozen=True)
class Feature:
    """A feature of a sense, phrased to complete "This thing ___"."""

    id: int
    text: str


@dataclass(frozen=True)
class FeatureJudgement:
    """How a metaphor transforms one feature of its parent sense."""

    feature_id: int
    verdict: Verdict
    modified_text: str | None = None


@dataclass(frozen=True)
class SenseAnnotation:
    sense: SenseRecord
    label: SenseLabel
    conduit: bool = False
    features: tuple[Feature, ...] = ()
    judgements: tuple[FeatureJudgement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "judgements", tuple(self.judgements))

    @property
    def id(self) -> SenseId:
        return self.sense.id


@dataclass(frozen=True)
class WordAnnotation:
    """A full annotation of one word: a labelled forest over its senses."""

    word: str
    annotator: str
    senses: tuple[SenseAnnotation, ...]
    word_known: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "senses", tuple(self.senses))

    def sense_map(self) -> dict[SenseId, SenseAnnotation]:
        return {s.id: s for s in self.senses}

    def ids(self) -> tuple[SenseId, ...]:
        return tuple(s.id for s in self.senses)

    def children_of(self, sid: SenseId) -> tuple[SenseAnnotation, ...]:
        return tuple(s for s in self.senses if s.label.parent == sid)

    def prototypes(self) -> tuple[SenseAnnotation, ...]:
        return tuple(s for s in self.senses if s.label.kind == LabelKind.PROTOTYPE)


@dataclass(frozen=True)
class HomonymyPartition:
    """Senses of a word grouped into the connected components of its forest."""

    word: str
    clusters: frozenset[frozenset[SenseId]]

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)

    def refines(self, other: "HomonymyPartition") -> bool:
        """True when every cluster here is contained in a cluster of ``other``."""
        return all(
            any(cluster <= theirs for theirs in other.clusters)
            for cluster in self.clusters
        )


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    senses: tuple[SenseId, ...] = ()

    def __str__(self) -> str:
        where = ", ".join(str(s) for s in self.senses)
        return f"[{self.code}] {self.message}" + (f" ({where})" if where else "")


class InvalidAnnotationError(ValueError):
    def __init__(self, word: str, violations: Sequence[Violation]):
        self.violations = tuple(violations)
        lines = "; ".join(str(v) for v in violations)
        super().__init__(f"invalid annotation of {word!r}: {lines}")


def validate(annotation: WordAnnotation) -> list[Violation]:
    """Check every invariant; return the violations (empty list = valid)."""
    out: list[Violation] = []
    if not annotation.senses:
        return [Violation("empty-senses", "annotation has no senses")]

    seen: set[SenseId] = set()
    for s in annotation.senses:
        sid = s.id
        if sid.word != annotation.word:
            out.append(
                Violation("foreign-word-id", f"sense belongs to {sid.word!r}", (sid,))
            )
        if sid in seen:
            out.append(Violation("duplicate-id", "sense index repeated", (sid,)))
        seen.add(sid)
        if not s.sense.definition.strip():
            what = "virtual sense" if sid.is_virtual else "sense"
            out.append(Violation("empty-definition", f"{what} lacks a definition", (sid,)))

    by_id = annotation.sense_map()

    # Label/parent consistency and attachment legality.
    for s in annotation.senses:
        sid = s.id
        kind, parent = s.label.kind, s.label.parent
        if kind == LabelKind.PROTOTYPE:
            if parent is not None:
                out.append(
                    Violation("label-parent-mismatch", "prototype carries a parent link", (sid,))
                )
            if s.conduit:
                out.append(Violation("conduit-on-prototype", "prototypes cannot be conduits", (sid,)))
            continue
        if parent is None:
            out.append(
                Violation("label-parent-mismatch", f"{kind.value} lacks a parent link", (sid,))
            )
            continue
        if parent == sid:
            out.append(Violation("self-parent", "sense derives from itself", (sid,)))
            continue
        target = by_id.get(parent)
        if target is None:
            out.append(Violation("unknown-parent", f"parent {parent} is not a sense of this word", (sid,)))
            continue
        if kind == LabelKind.METONYMY:
            if target.label.kind != LabelKind.PROTOTYPE and not target.conduit:
                out.append(
                    Violation(
                        "illegal-metonymy-parent",
                        "metonymy extends a derived sense that is not a conduit",
                        (sid, parent),
                    )
                )
        elif kind == LabelKind.METAPHOR:
            if target.label.kind == LabelKind.METAPHOR and not target.conduit:
                out.append(
                    Violation(
                        "illegal-metaphor-parent",
                        "metaphor extends a metaphor without conduit",
                        (sid, parent),
                    )
                )

    # Forest shape: cycles and root existence.
    state: dict[SenseId, int] = {}  # 0 in progress, 1 done
    for s in annotation.senses:
        path: list[SenseId] = []
        cur: SenseId | None = s.id
        while cur is not None and cur in by_id and cur not in state:
            state[cur] = 0
            path.append(cur)
            nxt = by_id[cur].label.parent
            cur = nxt if nxt != cur else None
        if cur is not None and state.get(cur) == 0:
            cycle = path[path.index(cur):]
            out.append(
                Violation("cycle", "parent links form a cycle", tuple(sorted(cycle, key=SenseId.sort_key)))
            )
        for sid in path:
            state[sid] = 1
    if not any(s.label.kind == LabelKind.PROTOTYPE for s in annotation.senses):
        out.append(Violation("no-prototype", "annotation has no prototype sense"))

    # Features and slippage.
    metaphor_children: dict[SenseId, list[SenseAnnotation]] = {}
    for s in annotation.senses:
        if s.label.kind == LabelKind.METAPHOR and s.label.parent in by_id:
            metaphor_children.setdefault(s.label.parent, []).append(s)

    for s in annotation.senses:
        sid = s.id
        feature_ids = [f.id for f in s.features]
        if len(set(feature_ids)) != len(feature_ids):
            out.append(Violation("duplicate-feature-id", "feature ids repeat", (sid,)))
        if any(not f.text.strip() for f in s.features):
            out.append(Violation("empty-feature", "feature with empty text", (sid,)))
        if s.features and sid not in metaphor_children:
            out.append(
                Violation(
                    "features-without-metaphor-child",
                    "features attached to a sense no metaphor extends",
                    (sid,),
                )
            )
        if s.judgements and s.label.kind != LabelKind.METAPHOR:
            out.append(
                Violation("judgements-on-non-metaphor", "only metaphors judge features", (sid,))
            )
        for j in s.judgements:
            if j.verdict == Verdict.MODIFIED:
                if not (j.modified_text or "").strip():
                    out.append(
                        Violation("modified-without-text", "modified judgement lacks its text", (sid,))
                    )
            elif j.modified_text is not None:
                out.append(
                    Violation("text-without-modified", "non-modified judgement carries text", (sid,))
                )
        if s.label.kind == LabelKind.METAPHOR:
            parent = by_id.get(s.label.parent) if s.label.parent else None
            if parent is not None:
                want = sorted(f.id for f in parent.features)
                got = sorted(j.feature_id for j in s.judgements)
                if want != got:
                    out.append(
                        Violation(
                            "slippage-incomplete",
                            "judgements do not match the parent's features one-to-one",
                            (sid, parent.id),
                        )
                    )
            verdicts = {j.verdict for j in s.judgements}
            if not (
                Verdict.MODIFIED in verdicts
                or (Verdict.KEPT in verdicts and Verdict.LOST in verdicts)
            ):
                out.append(
                    Violation(
                        "slippage-minimum",
                        "metaphor needs a modified feature, or one kept plus one lost",
                        (sid,),
                    )
                )

    # Split halves must pair up, and the un-split index must be gone.
    indices = {s.id.index for s in annotation.senses}
    for s in annotation.senses:
        sid = s.id
        if not sid.is_split_half:
            continue
        sibling = f"{sid.base}{'B' if sid.split_suffix == 'A' else 'A'}"
        if sibling not in indices:
            out.append(Violation("split-half-unpaired", f"half {sid.index} has no {sibling}", (sid,)))
        if str(sid.base) in indices:
            out.append(
                Violation("split-base-present", f"un-split sense {sid.base} coexists with its halves", (sid,))
            )
    return out


def partition(annotation: WordAnnotation) -> HomonymyPartition:
    """Group senses into clusters: connected components, one per prototype."""
    violations = validate(annotation)
    if violations:
        raise InvalidAnnotationError(annotation.word, violations)
    parent_of = {s.id: s.label.parent for s in annotation.senses}
    root_of: dict[SenseId, SenseId] = {}

    def root(sid: SenseId) -> SenseId:
        chain = []
        while sid not in root_of and parent_of[sid] is not None:
            chain.append(sid)
            sid = parent_of[sid]
        final = root_of.get(sid, sid)
        for c in chain:
            root_of[c] = final
        return final

    clusters: dict[SenseId, set[SenseId]] = {}
    for sid in parent_of:
        clusters.setdefault(root(sid), set()).add(sid)
    return HomonymyPartition(
        annotation.word, frozenset(frozenset(c) for c in clusters.values())
    )


# ---------------------------------------------------------------------------
# Preprocessing: merging split halves and stripping virtual senses.
# ---------------------------------------------------------------------------


def _renumber(features: Sequence[Feature], start: int) -> tuple[tuple[Feature, ...], dict[int, int]]:
    mapping = {f.id: start + i for i, f in enumerate(features)}
    return tuple(Feature(mapping[f.id], f.text) for f in features), mapping


def _remap_judgements(
    judgements: Sequence[FeatureJudgement], mapping: Mapping[int, int]
) -> tuple[FeatureJudgement, ...]:
    return tuple(
        FeatureJudgement(mapping.get(j.feature_id, j.feature_id), j.verdict, j.modified_text)
        for j in judgements
    )


def _reconcile(senses: dict[SenseId, SenseAnnotation], warnings: list[str]) -> None:
    """Restore slippage and attachment invariants after structural edits.

    Metaphors are re-keyed against their (possibly new) parent's features:
    matching ids survive, missing ones fill in as lost, dangling ones drop.
    Features nothing judges any more are cleared. Attachments made illegal by
    re-parenting are repaired by marking the new parent as a conduit.
    """
    metaphor_children: dict[SenseId, list[SenseId]] = {}
    for s in senses.values():
        if s.label.kind == LabelKind.METAPHOR and s.label.parent in senses:
            metaphor_children.setdefault(s.label.parent, []).append(s.id)

    for sid, s in list(senses.items()):
        if s.features and sid not in metaphor_children:
            senses[sid] = replace(s, features=())

    for parent_id, children in metaphor_children.items():
        parent = senses[parent_id]
        want = {f.id for f in parent.features}
        for child_id in children:
            child = senses[child_id]
            have = {j.feature_id for j in child.judgements}
            if have == want:
                continue
            kept = tuple(j for j in child.judgements if j.feature_id in want)
            filled = kept + tuple(
                FeatureJudgement(fid, Verdict.LOST) for fid in sorted(want - have)
            )
            warnings.append(f"re-keyed judgements of {child_id} against {parent_id}")
            senses[child_id] = replace(child, judgements=filled)

    for sid, s in list(senses.items()):
        parent = senses.get(s.label.parent) if s.label.parent else None
        if parent is None:
            continue
        bad = (
            s.label.kind == LabelKind.METONYMY
            and parent.label.kind != LabelKind.PROTOTYPE
            and not parent.conduit
        ) or (
            s.label.kind == LabelKind.METAPHOR
            and parent.label.kind == LabelKind.METAPHOR
            and not parent.conduit
        )
        if bad:
            warnings.append(f"marked {parent.id} as conduit to keep {sid} attachable")
            senses[parent.id] = replace(parent, conduit=True)


def _transplant_features(
    senses: dict[SenseId, SenseAnnotation],
    target_id: SenseId,
    donor: SenseAnnotation,
    moved_children: Sequence[SenseId],
) -> None:
    """Move the donor's features onto ``target`` so moved metaphors stay judged."""
    if not donor.features:
        return
    if not any(
        senses[c].label.kind == LabelKind.METAPHOR for c in moved_children if c in senses
    ):
        return
    target = senses[target_id]
    next_id = max((f.id for f in target.features), default=0) + 1
    renumbered, mapping = _renumber(donor.features, next_id)
    senses[target_id] = replace(target, features=target.features + renumbered)
    for child_id in moved_children:
        child = senses.get(child_id)
        if child is not None and child.label.kind == LabelKind.METAPHOR:
            senses[child_id] = replace(child, judgements=_remap_judgements(child.judgements, mapping))


def merge_split(annotation: WordAnnotation) -> tuple[WordAnnotation, tuple[str, ...]]:
    """Re-merge every A/B split pair into a single sense.

    The merged sense carries the annotation of the non-metaphorical half;
    edges into either half are redirected to the merged sense. When both
    halves are metaphorical, half A wins and a warning is reported.
    """
    violations = validate(annotation)
    if violations:
        raise InvalidAnnotationError(annotation.word, violations)

    warnings: list[str] = []
    senses = {s.id: s for s in annotation.senses}
    order = [s.id for s in annotation.senses]
    pairs: dict[int, dict[str, SenseId]] = {}
    for sid in senses:
        if sid.is_split_half:
            pairs.setdefault(sid.base, {})[sid.split_suffix] = sid

    for base, halves in sorted(pairs.items()):
        a, b = halves["A"], halves["B"]
        half_a, half_b = senses[a], senses[b]
        non_metaphor = [h for h in (half_a, half_b) if h.label.kind != LabelKind.METAPHOR]
        if len(non_metaphor) == 1:
            kept = non_metaphor[0]
        else:
            kept = half_a
            if not non_metaphor:
                warnings.append(f"both halves of {annotation.word}.{base} are metaphors; kept half A")
        dropped = half_b if kept is half_a else half_a

        merged_id = SenseId.plain(annotation.word, base)
        label = kept.label
        if label.parent == dropped.id:
            # The kept half pointed at its own sibling; inherit the sibling's slot.
            label = replace(label, parent=senses[dropped.id].label.parent)
        if label.parent == kept.id or label.parent == dropped.id:
            label = replace(label, parent=None)
        merged = SenseAnnotation(
            sense=replace(kept.sense, id=merged_id),
            label=label,
            conduit=kept.conduit,
            features=kept.features,
            judgements=kept.judgements,
        )
        del senses[a]
        del senses[b]
        senses[merged_id] = merged
        order[order.index(a)] = merged_id
        order.remove(b)

        moved: list[SenseId] = []
        for sid, s in list(senses.items()):
            if s.label.parent in (a, b):
                senses[sid] = replace(s, label=replace(s.label, parent=merged_id))
                if s.label.parent == dropped.id:
                    moved.append(sid)
        _transplant_features(senses, merged_id, dropped, moved)

    _reconcile(senses, warnings)
    result = WordAnnotation(
        annotation.word,
        annotation.annotator,
        tuple(senses[sid] for sid in order),
        annotation.word_known,
    )
    return result, tuple(warnings)


def strip_virtual(annotation: WordAnnotation) -> tuple[WordAnnotation, tuple[str, ...]]:
    """Remove virtual senses, re-attaching their children to their parents.

    Children keep their own edge labels. Children of a virtual prototype
    become prototypes of their own clusters (reported in the warnings).
    """
    violations = validate(annotation)
    if violations:
        raise InvalidAnnotationError(annotation.word, violations)

    warnings: list[str] = []
    senses = {s.id: s for s in annotation.senses}
    order = [s.id for s in annotation.senses]

    while True:
        virtual = next(
            (s for s in sorted(senses.values(), key=lambda s: s.id.sort_key()) if s.id.is_virtual),
            None,
        )
        if virtual is None:
            break
        vid = virtual.id
        children = [s.id for s in senses.values() if s.label.parent == vid]
        if virtual.label.kind == LabelKind.PROTOTYPE:
            warnings.append(f"virtual prototype {vid} removed; its children become prototypes")
            for child_id in children:
                child = senses[child_id]
                senses[child_id] = replace(
                    child,
                    label=SenseLabel(LabelKind.PROTOTYPE, None),
                    conduit=False,
                    judgements=(),
                )
        else:
            new_parent = virtual.label.parent
            for child_id in children:
                child = senses[child_id]
                senses[child_id] = replace(child, label=replace(child.label, parent=new_parent))
            if new_parent is not None:
                _transplant_features(senses, new_parent, virtual, children)
        del senses[vid]
        order.remove(vid)

    _reconcile(senses, warnings)
    result = WordAnnotation(
        annotation.word,
        annotation.annotator,
        tuple(senses[sid] for sid in order),
        annotation.word_known,
    )
    return result, tuple(warnings)


def preprocess(annotation: WordAnnotation) -> tuple[WordAnnotation, tuple[str, ...]]:
    """Merge split halves, then strip virtual senses."""
    merged, w1 = merge_split(annotation)
    stripped, w2 = strip_virtual(merged)
    return stripped, w1 + w2


# ---------------------------------------------------------------------------
# Canonical JSON interchange (one document per word).
# ---------------------------------------------------------------------------


def _require(doc: Mapping, key: str, kind, where: str):
    if key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{where}: field {key!r} has the wrong type")
    return value


def annotation_to_dict(annotation: WordAnnotation) -> dict:
    senses = []
    for s in annotation.senses:
        senses.append(
            {
                "id": s.id.index,
                "definition": s.sense.definition,
                "synonyms": list(s.sense.synonyms),
                "known": s.sense.known,
                "virtual": s.id.is_virtual,
                "split_half": s.id.is_split_half,
                "label": s.label.kind.value,
                "parent": s.label.parent.index if s.label.parent else None,
                "conduit": s.conduit,
                "features": [{"id": f.id, "text": f.text} for f in s.features],
                "judgements": [
                    {
                        "feature": j.feature_id,
                        "verdict": j.verdict.value,
                        "modified_text": j.modified_text,
                    }
                    for j in s.judgements
                ],
            }
        )
    return {
        "word": annotation.word,
        "annotator": annotation.annotator,
        "word_known": annotation.word_known,
        "senses": senses,
    }


def annotation_from_dict(doc: Mapping) -> WordAnnotation:
    if not isinstance(doc, Mapping):
        raise SchemaError("annotation document must be an object")
    word = _require(doc, "word", str, "annotation")
    annotator = _require(doc, "annotator", str, "annotation")
    word_known = bool(doc.get("word_known", True))
    raw_senses = _require(doc, "senses", list, "annotation")

    senses = []
    for i, raw in enumerate(raw_senses):
        where = f"{word}/senses[{i}]"
        if not isinstance(raw, Mapping):
            raise SchemaError(f"{where}: sense must be an object")
        sid = SenseId(word, _require(raw, "id", str, where))
        for flag, actual in (("virtual", sid.is_virtual), ("split_half", sid.is_split_half)):
            if flag in raw and bool(raw[flag]) != actual:
                raise SchemaError(f"{where}: {flag} flag disagrees with index {sid.index!r}")
        definition = _require(raw, "definition", str, where)
        synonyms = tuple(_require(raw, "synonyms", list, where)) if "synonyms" in raw else ()
        if any(not isinstance(x, str) for x in synonyms):
            raise SchemaError(f"{where}: synonyms must be strings")
        known = bool(raw.get("known", True))

        label_raw = _require(raw, "label", str, where)
        try:
            kind = LabelKind(label_raw)
        except ValueError:
            raise SchemaError(f"{where}: unknown label {label_raw!r}") from None
        parent_raw = raw.get("parent")
        if parent_raw is not None and not isinstance(parent_raw, str):
            raise SchemaError(f"{where}: parent must be a sense index or null")
        parent = SenseId(word, parent_raw) if parent_raw else None

        features = []
        for j, fraw in enumerate(raw.get("features", [])):
            fwhere = f"{where}/features[{j}]"
            if not isinstance(fraw, Mapping):
                raise SchemaError(f"{fwhere}: feature must be an object")
            fid = _require(fraw, "id", int, fwhere)
            if isinstance(fid, bool) or fid < 1:
                raise SchemaError(f"{fwhere}: feature id must be a positive integer")
            features.append(Feature(fid, _require(fraw, "text", str, fwhere)))

        judgements = []
        for j, jraw in enumerate(raw.get("judgements", [])):
            jwhere = f"{where}/judgements[{j}]"
            if not isinstance(jraw, Mapping):
                raise SchemaError(f"{jwhere}: judgement must be an object")
            jfid = _require(jraw, "feature", int, jwhere)
            verdict_raw = _require(jraw, "verdict", str, jwhere)
            try:
                verdict = Verdict(verdict_raw)
            except ValueError:
                raise SchemaError(f"{jwhere}: unknown verdict {verdict_raw!r}") from None
            modified = jraw.get("modified_text")
            if modified is not None and not isinstance(modified, str):
                raise SchemaError(f"{jwhere}: modified_text must be a string or null")
            judgements.append(FeatureJudgement(jfid, verdict, modified))

        senses.append(
            SenseAnnotation(
                sense=SenseRecord(sid, definition, synonyms, known),
                label=SenseLabel(kind, parent),
                conduit=bool(raw.get("conduit", False)),
                features=tuple(features),
                judgements=tuple(judgements),
            )
        )
    return WordAnnotation(word, annotator, tuple(senses), word_known)


def dump_annotation(annotation: WordAnnotation, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(annotation_to_dict(annotation), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_annotations(path: str | Path) -> list[WordAnnotation]:
    """Load annotations from a word document, a list document, or a directory."""
    p = Path(path)
    if p.is_dir():
        out: list[WordAnnotation] = []
        for child in sorted(p.glob("*.json")):
            out.extend(load_annotations(child))
        return out
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: not valid JSON ({exc})") from None
    docs = doc if isinstance(doc, list) else [doc]
    return [annotation_from_dict(d) for d in docs]


def load_corpus(path: str | Path) -> dict[str, WordAnnotation]:
    """Load one annotator's corpus keyed by word; duplicate words are an error."""
    out: dict[str, WordAnnotation] = {}
    for ann in load_annotations(path):
        if ann.word in out:
            raise SchemaError(f"{path}: word {ann.word!r} appears twice")
        out[ann.word] = ann
    return out


def schema_path() -> Path:
    """Location of the JSON schema for the interchange format."""
    return Path(__file__).parent / "schema" / "word-annotation.schema.json"
