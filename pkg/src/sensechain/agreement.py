"""Inter-annotator agreement over sense forests.

Covers partition agreement (Adjusted Rand Index over homonymy clusters),
label agreement (mean pairwise percentage and Fleiss' kappa, per category
and for the full three-way labelling), connection agreement (undirected
unlabelled/labelled attachment scores), and a cluster-granularity
comparison between two partitionings of the same words.

The AP filter keeps only words on which every compared annotator chose the
same prototype set. The AC filter keeps only senses whose undirected
attachment matches: per compared pair for pairwise percentages, across all
annotators for the pooled kappa table. Senses marked unknown by any
compared annotator, and words marked unknown by any annotator, are dropped
before anything is computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Mapping, Sequence

from sensechain.model import (
    HomonymyPartition,
    LabelKind,
    SenseId,
    WordAnnotation,
    partition,
)

LABELS = (LabelKind.PROTOTYPE, LabelKind.METAPHOR, LabelKind.METONYMY)
CATEGORIES = ("prototype", "metaphor", "metonymy", "any")
FILTERS = ("all", "ap", "ac")

# One annotator's view of one word: a label per sense and an undirected
# attachment per sense (frozenset {sense, parent}, parent None for roots).
LabelAssignment = Mapping[SenseId, LabelKind]
EdgeSet = Mapping[SenseId, frozenset]


def labels_from_annotation(annotation: WordAnnotation) -> dict[SenseId, LabelKind]:
    """Each sense gets the label of its incoming edge (prototype for roots)."""
    return {s.id: s.label.kind for s in annotation.senses}


def edges_from_annotation(annotation: WordAnnotation) -> dict[SenseId, frozenset]:
    """Each sense contributes exactly one attachment: its parent or the root."""
    return {
        s.id: frozenset({s.id, s.label.parent})  # None stands in for the root
        for s in annotation.senses
    }


def adjusted_rand(p1: HomonymyPartition, p2: HomonymyPartition) -> float:
    """Hubert-Arabie chance-corrected index between two partitions."""
    senses1 = frozenset().union(*p1.clusters) if p1.clusters else frozenset()
    senses2 = frozenset().union(*p2.clusters) if p2.clusters else frozenset()
    if senses1 != senses2:
        raise ValueError("partitions cover different sense sets")
    n = len(senses1)
    sum_cells = 0
    for a in p1.clusters:
        for b in p2.clusters:
            sum_cells += comb(len(a & b), 2)
    sum_a = sum(comb(len(a), 2) for a in p1.clusters)
    sum_b = sum(comb(len(b), 2) for b in p2.clusters)
    pairs = comb(n, 2)
    if pairs == 0:
        return 1.0
    expected = sum_a * sum_b / pairs
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0 if sum_cells == expected else 0.0
    return (sum_cells - expected) / (maximum - expected)


def fleiss_kappa(counts: Sequence[Sequence[int]]) -> float | None:
    """Fleiss' kappa from an item-by-category rating count table.

    Every row must sum to the same number of raters. Returns None when no
    items are given; unanimous tables with a single used category give 1.0.
    """
    rows = [list(r) for r in counts if sum(r) > 0]
    if not rows:
        return None
    n_raters = sum(rows[0])
    if n_raters < 2 or any(sum(r) != n_raters for r in rows):
        raise ValueError("every item needs the same number (>= 2) of ratings")
    n_items = len(rows)
    p_bar = sum(
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1)) for row in rows
    ) / n_items
    totals = [sum(row[j] for row in rows) for j in range(len(rows[0]))]
    p_e = sum((t / (n_items * n_raters)) ** 2 for t in totals)
    if p_e >= 1.0:
        return 1.0 if p_bar >= 1.0 else 0.0
    return (p_bar - p_e) / (1 - p_e)


@dataclass(frozen=True)
class LabelAgreementResult:
    percent: dict[str, float | None]
    kappa: dict[str, float | None]
    n_items: int


def _prototype_sets_agree(assignments: Sequence[LabelAssignment]) -> bool:
    sets = [
        frozenset(s for s, kind in a.items() if kind == LabelKind.PROTOTYPE)
        for a in assignments
    ]
    return all(s == sets[0] for s in sets)


def label_agreement(
    assignments_per_word: Sequence[Mapping[str, LabelAssignment]],
    flt: str = "all",
    edge_sets_per_word: Sequence[Mapping[str, EdgeSet]] | None = None,
) -> LabelAgreementResult:
    """Mean pairwise percentage and Fleiss' kappa over sense labels.

    ``assignments_per_word`` holds one {word: {sense: label}} mapping per
    annotator over a shared word list. The AC filter needs the matching
    edge sets.
    """
    if len(assignments_per_word) < 2:
        raise ValueError("agreement needs at least two annotators")
    if flt not in FILTERS:
        raise ValueError(f"unknown filter {flt!r}")
    if flt == "ac" and edge_sets_per_word is None:
        raise ValueError("the ac filter needs edge sets")

    words = sorted(set(assignments_per_word[0]).intersection(*assignments_per_word[1:]))
    n_annotators = len(assignments_per_word)

    if flt == "ap":
        words = [
            w
            for w in words
            if _prototype_sets_agree([a[w] for a in assignments_per_word])
        ]

    # Pairwise percentages; AC conditions each pair on its own matching senses.
    pair_stats = {cat: [0, 0] for cat in CATEGORIES}  # matches, comparisons
    for i in range(n_annotators):
        for j in range(i + 1, n_annotators):
            for w in words:
                a, b = assignments_per_word[i][w], assignments_per_word[j][w]
                shared = sorted(set(a) & set(b), key=SenseId.sort_key)
                if flt == "ac":
                    ea, eb = edge_sets_per_word[i][w], edge_sets_per_word[j][w]
                    shared = [s for s in shared if ea.get(s) == eb.get(s)]
                for s in shared:
                    match = a[s] == b[s]
                    pair_stats["any"][0] += match
                    pair_stats["any"][1] += 1
                    for kind in LABELS:
                        involved = a[s] == kind or b[s] == kind
                        if involved:
                            pair_stats[kind.value][0] += a[s] == b[s]
                            pair_stats[kind.value][1] += 1

    percent: dict[str, float | None] = {}
    for cat, (hits, total) in pair_stats.items():
        percent[cat] = 100.0 * hits / total if total else None

    # Pooled kappa table; AC here keeps senses on which all annotators agree.
    kappa_words = words
    rows_any: list[list[int]] = []
    rows_binary: dict[str, list[list[int]]] = {kind.value: [] for kind in LABELS}
    for w in kappa_words:
        per_ann = [a[w] for a in assignments_per_word]
        shared = sorted(set(per_ann[0]).intersection(*per_ann[1:]), key=SenseId.sort_key)
        if flt == "ac":
            per_edges = [e[w] for e in edge_sets_per_word]
            shared = [
                s
                for s in shared
                if all(e.get(s) == per_edges[0].get(s) for e in per_edges)
            ]
        for s in shared:
            votes = [a[s] for a in per_ann]
            rows_any.append([sum(v == kind for v in votes) for kind in LABELS])
            for kind in LABELS:
                k = sum(v == kind for v in votes)
                rows_binary[kind.value].append([k, len(votes) - k])

    kappa: dict[str, float | None] = {"any": fleiss_kappa(rows_any)}
    for kind in LABELS:
        kappa[kind.value] = fleiss_kappa(rows_binary[kind.value])
    return LabelAgreementResult(percent, kappa, len(rows_any))


def attachment_agreement(
    edge_sets_per_word: Sequence[Mapping[str, EdgeSet]],
    labelled: bool = False,
    flt: str = "all",
    assignments_per_word: Sequence[Mapping[str, LabelAssignment]] | None = None,
) -> float | None:
    """Mean pairwise per-sense attachment match rate, as a percentage.

    A sense's attachment counts as agreed when its undirected edge appears
    anywhere in the other annotator's forest, so flipping which end of a
    chain is the prototype does not cascade into every attachment. Root
    attachments count as edges too. The labelled variant additionally
    requires the sense's labels to match (root attachments count as label
    prototype, which the label already reflects).
    """
    if len(edge_sets_per_word) < 2:
        raise ValueError("agreement needs at least two annotators")
    if flt not in ("all", "ap"):
        raise ValueError(f"unknown filter {flt!r}")
    if labelled and assignments_per_word is None:
        raise ValueError("the labelled variant needs label assignments")
    if flt == "ap" and assignments_per_word is None:
        raise ValueError("the ap filter needs label assignments")

    words = sorted(set(edge_sets_per_word[0]).intersection(*edge_sets_per_word[1:]))
    if flt == "ap":
        words = [
            w
            for w in words
            if _prototype_sets_agree([a[w] for a in assignments_per_word])
        ]

    hits = 0.0
    total = 0
    for i in range(len(edge_sets_per_word)):
        for j in range(i + 1, len(edge_sets_per_word)):
            for w in words:
                ea, eb = edge_sets_per_word[i][w], edge_sets_per_word[j][w]
                shared = sorted(set(ea) & set(eb), key=SenseId.sort_key)
                if shared and set(ea) != set(eb):
                    raise ValueError(f"annotators cover different senses of {w!r}")
                edges_a, edges_b = set(ea.values()), set(eb.values())
                for s in shared:
                    # halved two-way membership: the pairwise sum equals the
                    # size of the undirected edge intersection
                    match = ((ea[s] in edges_b) + (eb[s] in edges_a)) / 2
                    if labelled and (
                        assignments_per_word[i][w][s] != assignments_per_word[j][w][s]
                    ):
                        match = 0.0
                    hits += match
                    total += 1
    return 100.0 * hits / total if total else None


@dataclass(frozen=True)
class GranularityComparison:
    fraction_differing: float
    mean_clusters_a: float
    mean_clusters_b: float
    fraction_finer: float


def compare_granularity(
    a: Mapping[str, HomonymyPartition], b: Mapping[str, HomonymyPartition]
) -> GranularityComparison:
    """Compare two per-word partitionings (e.g. cognitive vs etymological)."""
    words = sorted(set(a) & set(b))
    if not words:
        raise ValueError("no shared words to compare")
    differing = [w for w in words if a[w].clusters != b[w].clusters]
    finer = [w for w in differing if a[w].refines(b[w])]
    return GranularityComparison(
        fraction_differing=len(differing) / len(words),
        mean_clusters_a=sum(a[w].cluster_count for w in words) / len(words),
        mean_clusters_b=sum(b[w].cluster_count for w in words) / len(words),
        fraction_finer=len(finer) / len(differing) if differing else 0.0,
    )


@dataclass(frozen=True)
class AgreementReport:
    """The full agreement grid for a multiply-annotated word set."""

    ari: float | None
    pct_label: dict[str, dict[str, float | None]]  # category -> filter -> value
    fleiss_kappa: dict[str, dict[str, float | None]]
    uuas: dict[str, float | None]  # filter (all/ap) -> value
    ulas: dict[str, float | None]
    n_words: int
    n_annotators: int

    def to_dict(self) -> dict:
        return {
            "ari": self.ari,
            "pct_label": self.pct_label,
            "fleiss_kappa": self.fleiss_kappa,
            "uuas": self.uuas,
            "ulas": self.ulas,
            "n_words": self.n_words,
            "n_annotators": self.n_annotators,
        }


def agreement_report(
    corpora: Sequence[Mapping[str, WordAnnotation]],
    filters: Sequence[str] = FILTERS,
) -> AgreementReport:
    """Assemble the agreement grid from one corpus per annotator.

    Words unknown to any annotator are dropped entirely; senses any compared
    annotator marked unknown are dropped from label and attachment scores
    (but not from the partitions, which need full coverage).
    """
    if len(corpora) < 2:
        raise ValueError("agreement needs at least two annotators")
    words = sorted(set(corpora[0]).intersection(*corpora[1:]))
    words = [w for w in words if all(c[w].word_known for c in corpora)]
    if not words:
        raise ValueError("no shared known words")

    partitions = [{w: partition(c[w]) for w in words} for c in corpora]
    ari_values = []
    for w in words:
        for i in range(len(corpora)):
            for j in range(i + 1, len(corpora)):
                ari_values.append(adjusted_rand(partitions[i][w], partitions[j][w]))
    ari = sum(ari_values) / len(ari_values) if ari_values else None

    unknown: dict[str, set[SenseId]] = {
        w: {
            s.id
            for c in corpora
            for s in c[w].senses
            if not s.sense.known
        }
        for w in words
    }
    assignments = [
        {
            w: {s: k for s, k in labels_from_annotation(c[w]).items() if s not in unknown[w]}
            for w in words
        }
        for c in corpora
    ]
    edge_sets = [
        {
            w: {s: e for s, e in edges_from_annotation(c[w]).items() if s not in unknown[w]}
            for w in words
        }
        for c in corpora
    ]

    pct: dict[str, dict[str, float | None]] = {cat: {} for cat in CATEGORIES}
    kap: dict[str, dict[str, float | None]] = {cat: {} for cat in CATEGORIES}
    for flt in filters:
        result = label_agreement(assignments, flt, edge_sets)
        for cat in CATEGORIES:
            pct[cat][flt] = result.percent[cat]
            kap[cat][flt] = result.kappa[cat]

    uuas = {}
    ulas = {}
    for flt in ("all", "ap"):
        if flt in filters or flt == "all":
            uuas[flt] = attachment_agreement(edge_sets, False, flt, assignments)
            ulas[flt] = attachment_agreement(edge_sets, True, flt, assignments)

    return AgreementReport(ari, pct, kap, uuas, ulas, len(words), len(corpora))
