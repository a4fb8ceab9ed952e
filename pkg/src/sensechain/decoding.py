"""Tree decoding: undirected MST, maximum spanning arborescence, and n-best.

A Parse is a model-side forest over a word's senses: a label per sense and a
parent for each derived sense, with no features or slippage. Parses are not
required to obey the annotation interface's attachment restrictions; models
may emit structures an annotator could not enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from sensechain.model import LabelKind, SenseId, WordAnnotation


class DecodingError(ValueError):
    pass


@dataclass(frozen=True)
class Parse:
    """A labelled forest over a word's senses (sorted by sense index)."""

    word: str
    entries: tuple[tuple[SenseId, LabelKind, SenseId | None], ...]

    @classmethod
    def build(
        cls,
        word: str,
        labels: Mapping[SenseId, LabelKind],
        parents: Mapping[SenseId, SenseId | None],
    ) -> "Parse":
        if set(labels) != set(parents):
            raise DecodingError("labels and parents cover different senses")
        entries = []
        for sid in sorted(labels, key=SenseId.sort_key):
            kind, parent = labels[sid], parents[sid]
            if (kind == LabelKind.PROTOTYPE) != (parent is None):
                raise DecodingError(f"{sid}: label {kind.value} inconsistent with parent {parent}")
            if parent is not None and parent not in labels:
                raise DecodingError(f"{sid}: parent {parent} is not a sense of this word")
            entries.append((sid, kind, parent))
        parse = cls(word, tuple(entries))
        if not any(kind == LabelKind.PROTOTYPE for _, kind, _ in entries):
            raise DecodingError("a parse needs at least one prototype")
        parse._check_forest()
        return parse

    def _check_forest(self) -> None:
        parents = self.parents()
        for sid in parents:
            seen = {sid}
            cur = parents[sid]
            while cur is not None:
                if cur in seen:
                    raise DecodingError("parse parents form a cycle")
                seen.add(cur)
                cur = parents[cur]

    def sense_ids(self) -> tuple[SenseId, ...]:
        return tuple(sid for sid, _, _ in self.entries)

    def labels(self) -> dict[SenseId, LabelKind]:
        return {sid: kind for sid, kind, _ in self.entries}

    def parents(self) -> dict[SenseId, SenseId | None]:
        return {sid: parent for sid, _, parent in self.entries}

    def prototype_ids(self) -> tuple[SenseId, ...]:
        return tuple(sid for sid, kind, _ in self.entries if kind == LabelKind.PROTOTYPE)


def parse_from_annotation(annotation: WordAnnotation) -> Parse:
    """Project a gold annotation down to its parse (labels and connections)."""
    labels = {s.id: s.label.kind for s in annotation.senses}
    parents = {s.id: s.label.parent for s in annotation.senses}
    return Parse.build(annotation.word, labels, parents)


def parse_to_dict(parse: Parse) -> dict:
    return {
        "word": parse.word,
        "senses": [
            {"id": sid.index, "label": kind.value, "parent": parent.index if parent else None}
            for sid, kind, parent in parse.entries
        ],
    }


def parse_from_dict(doc: Mapping) -> Parse:
    word = doc["word"]
    labels: dict[SenseId, LabelKind] = {}
    parents: dict[SenseId, SenseId | None] = {}
    for raw in doc["senses"]:
        sid = SenseId(word, raw["id"])
        labels[sid] = LabelKind(raw["label"])
        parents[sid] = SenseId(word, raw["parent"]) if raw.get("parent") else None
    return Parse.build(word, labels, parents)


@dataclass(frozen=True)
class ScoreMatrix:
    """Directed edge scores over a word's senses plus a synthetic root.

    Row/column 0 is the root; sense i sits at position i+1 in the order of
    ``senses``. The diagonal and every edge into the root are unusable.
    """

    senses: tuple[SenseId, ...]
    scores: np.ndarray

    @classmethod
    def build(cls, senses: Sequence[SenseId], scores: np.ndarray) -> "ScoreMatrix":
        senses = tuple(senses)
        n = len(senses) + 1
        scores = np.asarray(scores, dtype=np.float64).copy()
        if scores.shape != (n, n):
            raise DecodingError(f"score matrix must be {n}x{n} including the root")
        np.fill_diagonal(scores, -np.inf)
        scores[:, 0] = -np.inf
        return cls(senses, scores)

    @property
    def size(self) -> int:
        return len(self.senses) + 1


def _pair_distance(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    if metric == "euclidean":
        return float(np.linalg.norm(a - b))
    if metric == "cosine":
        denom = float(np.linalg.norm(a) * np.linalg.norm(b))
        if denom == 0.0:
            return 1.0
        return 1.0 - float(a @ b) / denom
    raise DecodingError(f"unknown distance metric {metric!r}")


def undirected_mst(
    points: Sequence[np.ndarray],
    forbidden: Iterable[tuple[int, int]] = (),
    metric: str = "euclidean",
) -> list[tuple[int, int]]:
    """Spanning tree of the complete graph minimising total distance.

    Euclidean by default; cosine distance sits behind the ``metric`` flag.
    Ties break lexicographically on the (i, j) edge id, so the result is
    deterministic. ``forbidden`` edges are excluded; if that disconnects the
    graph a DecodingError is raised.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    if not pts:
        raise DecodingError("need at least one point")
    dim = pts[0].shape
    if any(p.shape != dim for p in pts):
        raise DecodingError("points differ in dimension")
    n = len(pts)
    banned = {(min(a, b), max(a, b)) for a, b in forbidden}

    edges = sorted(
        (_pair_distance(pts[i], pts[j], metric), i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if (i, j) not in banned
    )
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen: list[tuple[int, int]] = []
    for _, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            chosen.append((i, j))
            if len(chosen) == n - 1:
                break
    if len(chosen) != n - 1:
        raise DecodingError("forbidden edges disconnect the point set")
    return chosen


def max_arborescence(matrix: ScoreMatrix) -> dict[SenseId, SenseId | None]:
    """Highest-scoring directed spanning tree rooted at the synthetic root.

    Chu-Liu/Edmonds with cycle contraction; ties break towards the lower
    head index. Returns each sense's head (None when attached to the root).
    """
    n = matrix.size
    arcs: dict[tuple[int, int], float] = {}
    for h in range(n):
        for d in range(1, n):
            w = matrix.scores[h, d]
            if np.isfinite(w):
                arcs[(h, d)] = float(w)
    heads = _chu_liu_edmonds(n, arcs)
    out: dict[SenseId, SenseId | None] = {}
    for d in range(1, n):
        h = heads[d]
        out[matrix.senses[d - 1]] = None if h == 0 else matrix.senses[h - 1]
    return out


def arborescence_score(matrix: ScoreMatrix, heads: Mapping[SenseId, SenseId | None]) -> float:
    index = {sid: i + 1 for i, sid in enumerate(matrix.senses)}
    total = 0.0
    for dep, head in heads.items():
        total += float(matrix.scores[0 if head is None else index[head], index[dep]])
    return total


def _chu_liu_edmonds(n: int, arcs: dict[tuple[int, int], float]) -> dict[int, int]:
    """Best incoming head per node for nodes 1..n-1, rooted at node 0."""
    best: dict[int, tuple[int, float]] = {}
    for d in range(1, n):
        incoming = [(h, w) for (h, dd), w in arcs.items() if dd == d]
        if not incoming:
            raise DecodingError(f"node {d} has no usable incoming edge")
        h, w = max(incoming, key=lambda item: (item[1], -item[0]))
        best[d] = (h, w)

    cycle = _find_cycle({d: h for d, (h, _) in best.items()})
    if cycle is None:
        return {d: h for d, (h, _) in best.items()}

    cycle_set = set(cycle)
    cycle_node = n  # fresh id for the contracted node
    new_arcs: dict[tuple[int, int], float] = {}
    entering: dict[int, tuple[int, int]] = {}  # external head -> (real head, real dep)
    leaving: dict[int, tuple[int, int]] = {}  # external dep -> (real head, real dep)

    for (h, d), w in arcs.items():
        if h in cycle_set and d in cycle_set:
            continue
        if d in cycle_set:
            adjusted = w - best[d][1]
            key = (h, cycle_node)
            if key not in new_arcs or adjusted > new_arcs[key] or (
                adjusted == new_arcs[key] and (h, d) < entering[h]
            ):
                new_arcs[key] = adjusted
                entering[h] = (h, d)
        elif h in cycle_set:
            key = (cycle_node, d)
            if key not in new_arcs or w > new_arcs[key] or (
                w == new_arcs[key] and (h, d) < leaving[d]
            ):
                new_arcs[key] = w
                leaving[d] = (h, d)
        else:
            new_arcs[(h, d)] = w

    contracted = _chu_liu_edmonds_contracted(n, cycle_node, cycle_set, new_arcs)
    heads: dict[int, int] = {}
    for d, h in contracted.items():
        if d == cycle_node:
            real_h, real_d = entering[h]
            heads[real_d] = real_h
            for node in cycle_set:
                if node != real_d:
                    heads[node] = best[node][0]
        else:
            heads[d] = leaving[d][0] if h == cycle_node else h
    return heads


def _chu_liu_edmonds_contracted(
    n: int, extra: int, removed: set[int], arcs: dict[tuple[int, int], float]
) -> dict[int, int]:
    remaining = [v for v in range(1, n) if v not in removed] + [extra]
    mapping = {v: i + 1 for i, v in enumerate(remaining)}
    back = {i + 1: v for i, v in enumerate(remaining)}
    mapping[0] = 0
    back[0] = 0
    renamed = {(mapping[h], mapping[d]): w for (h, d), w in arcs.items()}
    solved = _chu_liu_edmonds(len(remaining) + 1, renamed)
    return {back[d]: back[h] for d, h in solved.items()}


def _find_cycle(heads: Mapping[int, int]) -> list[int] | None:
    seen: set[int] = set()
    for start in sorted(heads):
        if start in seen:
            continue
        path: list[int] = []
        on_path: set[int] = set()
        cur: int | None = start
        while cur is not None and cur in heads and cur not in seen:
            path.append(cur)
            on_path.add(cur)
            seen.add(cur)
            cur = heads[cur]
        if cur in on_path:
            return path[path.index(cur):]
    return None


def orient_and_label(
    senses: Sequence[SenseId],
    edges: Sequence[tuple[int, int]],
    labels: Mapping[SenseId, LabelKind],
    probabilities: Mapping[SenseId, Mapping[LabelKind, float]] | None = None,
) -> Parse:
    """Orient an undirected tree outward from the prototype and label it.

    Each non-prototype keeps its predicted label. Should orientation leave a
    non-root sense labelled prototype, it is re-labelled by its higher of
    the metaphor and metonymy probabilities (metaphor on a tie).
    """
    senses = list(senses)
    prototypes = [sid for sid in senses if labels.get(sid) == LabelKind.PROTOTYPE]
    if not prototypes:
        raise DecodingError("orientation needs at least one prototype label")
    root = min(prototypes, key=SenseId.sort_key)
    index = {sid: i for i, sid in enumerate(senses)}

    adj: dict[int, list[int]] = {i: [] for i in range(len(senses))}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)

    parents: dict[SenseId, SenseId | None] = {root: None}
    order = [index[root]]
    seen = {index[root]}
    queue = [index[root]]
    while queue:
        cur = queue.pop(0)
        for nxt in sorted(adj[cur]):
            if nxt not in seen:
                seen.add(nxt)
                parents[senses[nxt]] = senses[cur]
                queue.append(nxt)
                order.append(nxt)
    if len(seen) != len(senses):
        raise DecodingError("edges do not span the senses")

    final_labels: dict[SenseId, LabelKind] = {}
    for sid in senses:
        if sid == root:
            final_labels[sid] = LabelKind.PROTOTYPE
            continue
        kind = labels.get(sid, LabelKind.METAPHOR)
        if kind == LabelKind.PROTOTYPE:
            kind = _derived_fallback(sid, probabilities)
        final_labels[sid] = kind
    return Parse.build(senses[0].word if senses else "", final_labels, parents)


def _derived_fallback(
    sid: SenseId,
    probabilities: Mapping[SenseId, Mapping[LabelKind, float]] | None,
) -> LabelKind:
    if probabilities and sid in probabilities:
        p = probabilities[sid]
        if p.get(LabelKind.METONYMY, 0.0) > p.get(LabelKind.METAPHOR, 0.0):
            return LabelKind.METONYMY
    return LabelKind.METAPHOR


def n_best_variants(
    parse: Parse,
    *,
    scores: ScoreMatrix | None = None,
    edge_labels: Mapping[tuple[SenseId, SenseId], LabelKind] | None = None,
    points: Sequence[np.ndarray] | None = None,
    labels: Mapping[SenseId, LabelKind] | None = None,
    probabilities: Mapping[SenseId, Mapping[LabelKind, float]] | None = None,
    metric: str = "euclidean",
) -> list[Parse]:
    """The parse plus re-decodes with one predicted edge forbidden each.

    Deduplicated, original first, capped at the number of senses. Edge
    removals that make decoding infeasible are skipped. Score-based decoding
    labels edges via ``edge_labels``; point-based decoding keeps the
    per-sense ``labels``.
    """
    n = len(parse.entries)
    variants: list[Parse] = [parse]

    if scores is not None:
        index = {sid: i + 1 for i, sid in enumerate(scores.senses)}
        for dep, head in parse.parents().items():
            h = 0 if head is None else index[head]
            d = index[dep]
            failed = scores.scores.copy()
            failed[h, d] = -np.inf
            try:
                heads = max_arborescence(ScoreMatrix(scores.senses, failed))
            except DecodingError:
                continue
            variants.append(
                _parse_from_heads(parse.word, scores.senses, heads, edge_labels, labels, probabilities)
            )
    elif points is not None and labels is not None:
        senses = parse.sense_ids()
        index = {sid: i for i, sid in enumerate(senses)}
        tree_edges = [
            (min(index[d], index[h]), max(index[d], index[h]))
            for d, h in parse.parents().items()
            if h is not None
        ]
        for edge in tree_edges:
            try:
                mst = undirected_mst(points, forbidden=[edge], metric=metric)
                variants.append(orient_and_label(senses, mst, labels, probabilities))
            except DecodingError:
                continue
    else:
        raise DecodingError("n_best_variants needs either scores or points+labels")

    unique: list[Parse] = []
    seen: set = set()
    for candidate in variants:
        if candidate.entries not in seen:
            seen.add(candidate.entries)
            unique.append(candidate)
    return unique[: max(n, 1)]


def _parse_from_heads(
    word: str,
    senses: Sequence[SenseId],
    heads: Mapping[SenseId, SenseId | None],
    edge_labels: Mapping[tuple[SenseId, SenseId], LabelKind] | None,
    labels: Mapping[SenseId, LabelKind] | None,
    probabilities: Mapping[SenseId, Mapping[LabelKind, float]] | None,
) -> Parse:
    final: dict[SenseId, LabelKind] = {}
    for sid in senses:
        head = heads[sid]
        if head is None:
            final[sid] = LabelKind.PROTOTYPE
        elif edge_labels and (head, sid) in edge_labels:
            final[sid] = edge_labels[(head, sid)]
        elif labels and labels.get(sid) in (LabelKind.METAPHOR, LabelKind.METONYMY):
            final[sid] = labels[sid]
        else:
            final[sid] = _derived_fallback(sid, probabilities)
    return Parse.build(word, final, dict(heads))
