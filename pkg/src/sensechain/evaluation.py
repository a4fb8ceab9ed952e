"""Scoring parses against gold and Monte Carlo permutation significance.

Three metrics: LOS (label-only score), UUAS (undirected unlabelled
attachment, where attachment to the root counts), and ULAS (label and
attachment jointly). Corpus scores are macro-averages over words, which is
also the pairing the permutation test needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from sensechain.decoding import Parse

METRICS = ("los", "uuas", "ulas")


@dataclass(frozen=True)
class Scores:
    los: float
    uuas: float
    ulas: float

    def get(self, metric: str) -> float:
        return getattr(self, metric)

    def to_dict(self) -> dict:
        return {"los": self.los, "uuas": self.uuas, "ulas": self.ulas}


def score_parse(pred: Parse, gold: Parse) -> Scores:
    """Percentage scores of a prediction against gold over one word.

    A sense's attachment is correct when its undirected edge (to its parent,
    or to the root) appears in the gold forest, so re-rooting a chain keeps
    its sense-sense connections correct.
    """
    if set(pred.sense_ids()) != set(gold.sense_ids()):
        raise ValueError("prediction and gold cover different senses")
    pred_labels, gold_labels = pred.labels(), gold.labels()
    pred_parents, gold_parents = pred.parents(), gold.parents()
    gold_edges = {frozenset({sid, parent}) for sid, parent in gold_parents.items()}
    n = len(gold_labels)
    label_hits = 0
    attach_hits = 0
    both_hits = 0
    for sid in gold_labels:
        label_ok = pred_labels[sid] == gold_labels[sid]
        attach_ok = frozenset({sid, pred_parents[sid]}) in gold_edges
        label_hits += label_ok
        attach_hits += attach_ok
        both_hits += label_ok and attach_ok
    return Scores(100.0 * label_hits / n, 100.0 * attach_hits / n, 100.0 * both_hits / n)


@dataclass(frozen=True)
class EvalResult:
    model_id: str
    protocol: str  # "1-best" or "n-best"
    per_word: dict[str, Scores]
    los: float
    uuas: float
    ulas: float

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "protocol": self.protocol,
            "los": self.los,
            "uuas": self.uuas,
            "ulas": self.ulas,
            "per_word": {w: s.to_dict() for w, s in self.per_word.items()},
        }


def evaluate(
    gold: Mapping[str, Parse],
    candidates: Mapping[str, Sequence[Parse]],
    model_id: str,
    protocol: str = "1-best",
) -> EvalResult:
    """Score candidate parses per word and macro-average over words.

    Under 1-best each word has a single candidate. Under n-best the
    candidate scoring highest on UUAS against gold is selected (ties keep
    the earliest, so the original prediction wins ties) and all three of
    its metrics are reported.
    """
    per_word: dict[str, Scores] = {}
    for word in sorted(gold):
        options = candidates[word]
        if not options:
            raise ValueError(f"no candidate parse for {word!r}")
        scored = [score_parse(parse, gold[word]) for parse in options]
        best = max(range(len(scored)), key=lambda i: (scored[i].uuas, -i))
        per_word[word] = scored[best]
    mean = lambda metric: sum(s.get(metric) for s in per_word.values()) / len(per_word)
    return EvalResult(model_id, protocol, per_word, mean("los"), mean("uuas"), mean("ulas"))


def permutation_test(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    r: int = 10_000,
    seed: int = 0,
) -> float:
    """Two-tailed Monte Carlo paired permutation test.

    Each resample swaps every pair with probability one half; the p-value is
    the add-one-smoothed share of resamples whose absolute mean difference
    reaches the observed one.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("score vectors must be paired by word")
    if r < 1:
        raise ValueError("need at least one resample")
    diffs = a - b
    observed = abs(float(diffs.mean()))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 2048
    done = 0
    while done < r:
        size = min(chunk, r - done)
        signs = rng.integers(0, 2, size=(size, diffs.size)) * 2 - 1
        means = np.abs((signs * diffs).mean(axis=1))
        hits += int(np.sum(means >= observed - 1e-12))
        done += size
    return (hits + 1) / (r + 1)


@dataclass(frozen=True)
class SignificanceResult:
    model_a: str
    model_b: str
    metric: str
    p_value: float
    r: int
    alpha: float
    n_comparisons: int
    significant: bool

    def to_dict(self) -> dict:
        return {
            "model_a": self.model_a,
            "model_b": self.model_b,
            "metric": self.metric,
            "p_value": self.p_value,
            "r": self.r,
            "alpha": self.alpha,
            "n_comparisons": self.n_comparisons,
            "corrected_alpha": self.alpha / self.n_comparisons,
            "significant": self.significant,
        }


def significance(
    results: Mapping[str, EvalResult],
    metrics: Sequence[str] = METRICS,
    r: int = 10_000,
    alpha: float = 0.01,
    seed: int = 0,
) -> list[SignificanceResult]:
    """Permutation tests over every model pair and metric, with Bonferroni.

    The corrected threshold divides alpha by the number of comparisons
    (model pairs times metrics); the divisor is recorded in each result.
    """
    names = sorted(results)
    pairs = list(combinations(names, 2))
    n_comparisons = max(len(pairs) * len(metrics), 1)
    out: list[SignificanceResult] = []
    for a, b in pairs:
        shared = sorted(set(results[a].per_word) & set(results[b].per_word))
        if not shared:
            raise ValueError(f"models {a!r} and {b!r} share no scored words")
        for metric in metrics:
            va = [results[a].per_word[w].get(metric) for w in shared]
            vb = [results[b].per_word[w].get(metric) for w in shared]
            p = permutation_test(va, vb, r=r, seed=seed)
            out.append(
                SignificanceResult(a, b, metric, p, r, alpha, n_comparisons, p < alpha / n_comparisons)
            )
    return out
