"""Polysemy-parsing baselines: random, label-then-MST, and biaffine.

Models are plain numpy with hand-written backprop so gradients are exact
and cheap to verify against finite differences. The label-then-MST baseline
(a metaphor-detection classifier plus a minimum spanning tree over
embedding distances) and the biaffine graph parser both consume fixed sense
embeddings; nothing is contextualised.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from sensechain.corpus import EmbeddingTable
from sensechain.counting import _prufer_decode
from sensechain.decoding import (
    Parse,
    ScoreMatrix,
    max_arborescence,
    orient_and_label,
    parse_from_annotation,
    undirected_mst,
)
from sensechain.model import LabelKind, SenseId, WordAnnotation

LABELS = (LabelKind.PROTOTYPE, LabelKind.METAPHOR, LabelKind.METONYMY)
EDGE_LABELS = (LabelKind.METAPHOR, LabelKind.METONYMY)

CHECKPOINT_FORMAT = 1


@dataclass
class TrainConfig:
    """The training schedule: early stopping with one learning-rate drop."""

    batch_size: int = 32
    learning_rate: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.9
    weight_decay: float = 0.01
    patience: int = 8
    lr_drops: int = 1
    dropout: float = 0.33
    seed: int = 0
    max_epochs: int | None = None
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.learning_rate <= 0 or self.patience < 1:
            raise ValueError("batch size, learning rate, and patience must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "weight_decay": self.weight_decay,
            "patience": self.patience,
            "lr_drops": self.lr_drops,
            "dropout": self.dropout,
            "seed": self.seed,
            "max_epochs": self.max_epochs,
        }


def _init(rng: np.random.Generator, *shape: int) -> np.ndarray:
    # Uniform scaled by fan-in (the last axis).
    limit = 1.0 / np.sqrt(shape[-1])
    return rng.uniform(-limit, limit, size=shape)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _masked_column_softmax(scores: np.ndarray) -> np.ndarray:
    """Softmax down each column, treating -inf entries as absent."""
    finite = np.isfinite(scores)
    safe = np.where(finite, scores, -np.inf)
    col_max = np.max(np.where(finite, safe, -np.inf), axis=0)
    exp = np.where(finite, np.exp(safe - col_max), 0.0)
    return exp / exp.sum(axis=0)


# ---------------------------------------------------------------------------
# Label classifier + spanning-tree baseline.
# ---------------------------------------------------------------------------


@dataclass
class MpdModel:
    """Linear softmax over the three labels from a sense embedding."""

    params: dict[str, np.ndarray]

    @classmethod
    def create(cls, k: int, rng: np.random.Generator) -> "MpdModel":
        return cls({"W": _init(rng, len(LABELS), k), "b": np.zeros(len(LABELS))})

    @property
    def input_dim(self) -> int:
        return self.params["W"].shape[1]

    def probabilities(self, embeddings: np.ndarray) -> np.ndarray:
        logits = embeddings @ self.params["W"].T + self.params["b"]
        return _softmax_rows(logits)


def mpd_loss_and_gradients(
    model: MpdModel, batch: Sequence[tuple[Sequence[SenseId], np.ndarray, Parse]]
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy of gold labels, with its exact gradient."""
    grads = {name: np.zeros_like(p) for name, p in model.params.items()}
    total = sum(len(senses) for senses, _, _ in batch)
    loss = 0.0
    for senses, emb, gold in batch:
        probs = model.probabilities(emb)
        gold_labels = gold.labels()
        y = np.zeros_like(probs)
        for i, sid in enumerate(senses):
            y[i, LABELS.index(gold_labels[sid])] = 1.0
        loss += -np.sum(y * np.log(np.clip(probs, 1e-300, None)))
        g = (probs - y) / total
        grads["W"] += g.T @ emb
        grads["b"] += g.sum(axis=0)
    return loss / total, grads


def _ordered(senses: Iterable[SenseId]) -> tuple[SenseId, ...]:
    return tuple(sorted(senses, key=SenseId.sort_key))


def _word_matrix(senses: Sequence[SenseId], table: EmbeddingTable) -> np.ndarray:
    rows = []
    for sid in senses:
        if sid not in table:
            raise ValueError(f"no embedding for {sid}")
        rows.append(table[sid])
    return np.stack(rows)


def mpd_predict(
    model: MpdModel,
    sense_ids: Iterable[SenseId],
    table: EmbeddingTable,
    metric: str = "euclidean",
) -> Parse:
    """Label every sense, force exactly one prototype, connect with an MST.

    The sense with the highest prototype probability becomes the prototype
    (lower index on ties); every other sense takes its higher of the
    metaphor and metonymy probabilities. Connections come from the minimum
    spanning tree over embedding distances (Euclidean unless the cosine
    flag is chosen), oriented outward from the prototype.
    """
    senses = _ordered(sense_ids)
    word = senses[0].word
    emb = _word_matrix(senses, table)
    probs = model.probabilities(emb)

    proto_idx = int(np.argmax(probs[:, 0]))
    labels: dict[SenseId, LabelKind] = {}
    prob_map: dict[SenseId, dict[LabelKind, float]] = {}
    for i, sid in enumerate(senses):
        prob_map[sid] = {kind: float(probs[i, j]) for j, kind in enumerate(LABELS)}
        if i == proto_idx:
            labels[sid] = LabelKind.PROTOTYPE
        else:
            labels[sid] = EDGE_LABELS[int(np.argmax(probs[i, 1:]))]
    if len(senses) == 1:
        return Parse.build(word, labels, {senses[0]: None})
    tree = undirected_mst(list(emb), metric=metric)
    return orient_and_label(senses, tree, labels, prob_map)


# ---------------------------------------------------------------------------
# Biaffine parser.
# ---------------------------------------------------------------------------


@dataclass
class BiaffineModel:
    """Edge and label scorers, each an MLP pair plus a biaffine form.

    The edge scorer maps head and dependent embeddings through separate
    one-hidden-layer MLPs and scores ``h' U d' + w . [h'; d'] + b``. The
    label scorer is a second biaffine with its own parameters that only
    separates metaphor from metonymy; prototypes are whatever attaches to
    the root. A synthetic root embeds as the mean of the word's senses.
    """

    params: dict[str, np.ndarray]
    dropout: float = 0.33

    @classmethod
    def create(
        cls,
        k: int,
        edge_hidden: int = 2048,
        label_hidden: int = 100,
        dropout: float = 0.33,
        rng: np.random.Generator | None = None,
    ) -> "BiaffineModel":
        rng = rng or np.random.default_rng(0)
        p = {
            "edge.head.W": _init(rng, edge_hidden, k),
            "edge.head.b": np.zeros(edge_hidden),
            "edge.dep.W": _init(rng, edge_hidden, k),
            "edge.dep.b": np.zeros(edge_hidden),
            "edge.U": _init(rng, edge_hidden, edge_hidden),
            "edge.w_head": _init(rng, edge_hidden),
            "edge.w_dep": _init(rng, edge_hidden),
            "edge.b": np.zeros(1),
            "label.head.W": _init(rng, label_hidden, k),
            "label.head.b": np.zeros(label_hidden),
            "label.dep.W": _init(rng, label_hidden, k),
            "label.dep.b": np.zeros(label_hidden),
            "label.U": _init(rng, 2, label_hidden, label_hidden),
            "label.w_head": _init(rng, 2, label_hidden),
            "label.w_dep": _init(rng, 2, label_hidden),
            "label.b": np.zeros(2),
        }
        return cls(p, dropout)

    @property
    def input_dim(self) -> int:
        return self.params["edge.head.W"].shape[1]


def _mlp_forward(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    dropout: float,
    rng: np.random.Generator | None,
) -> tuple[np.ndarray, dict]:
    pre = x @ w.T + b
    act = np.maximum(pre, 0.0)
    if rng is not None and dropout > 0.0:
        mask = (rng.random(act.shape) >= dropout) / (1.0 - dropout)
    else:
        mask = None
    out = act if mask is None else act * mask
    return out, {"x": x, "pre": pre, "mask": mask}


def _mlp_backward(d_out: np.ndarray, cache: dict) -> tuple[np.ndarray, np.ndarray]:
    d_act = d_out if cache["mask"] is None else d_out * cache["mask"]
    d_pre = d_act * (cache["pre"] > 0)
    return d_pre.T @ cache["x"], d_pre.sum(axis=0)


def _biaffine_word_forward(
    model: BiaffineModel,
    emb: np.ndarray,
    rng: np.random.Generator | None,
) -> dict:
    """Score every directed edge of one word; row/column 0 is the root."""
    p = model.params
    root = emb.mean(axis=0, keepdims=True)
    x = np.vstack([root, emb])  # (m+1, k)
    m1 = x.shape[0]

    h, h_cache = _mlp_forward(x, p["edge.head.W"], p["edge.head.b"], model.dropout, rng)
    d, d_cache = _mlp_forward(x, p["edge.dep.W"], p["edge.dep.b"], model.dropout, rng)
    scores = h @ p["edge.U"] @ d.T
    scores += (h @ p["edge.w_head"])[:, None]
    scores += (d @ p["edge.w_dep"])[None, :]
    scores += p["edge.b"][0]

    h2, h2_cache = _mlp_forward(x, p["label.head.W"], p["label.head.b"], model.dropout, rng)
    d2, d2_cache = _mlp_forward(x, p["label.dep.W"], p["label.dep.b"], model.dropout, rng)
    logits = np.einsum("hk,okl,dl->ohd", h2, p["label.U"], d2)
    logits += (h2 @ p["label.w_head"].T).T[:, :, None]
    logits += (d2 @ p["label.w_dep"].T).T[:, None, :]
    logits += p["label.b"][:, None, None]

    masked = scores.copy()
    np.fill_diagonal(masked, -np.inf)
    masked[:, 0] = -np.inf
    return {
        "x": x,
        "h": h,
        "d": d,
        "h_cache": h_cache,
        "d_cache": d_cache,
        "h2": h2,
        "d2": d2,
        "h2_cache": h2_cache,
        "d2_cache": d2_cache,
        "scores": masked,
        "label_logits": logits,
        "size": m1,
    }


def biaffine_score(
    model: BiaffineModel, sense_ids: Iterable[SenseId], table: EmbeddingTable
) -> tuple[ScoreMatrix, np.ndarray]:
    """Edge scores plus metaphor/metonymy logits for every ordered pair."""
    senses = _ordered(sense_ids)
    emb = _word_matrix(senses, table)
    fwd = _biaffine_word_forward(model, emb, rng=None)
    return ScoreMatrix(senses, fwd["scores"]), fwd["label_logits"]


def biaffine_edge_labels(
    matrix: ScoreMatrix, label_logits: np.ndarray
) -> dict[tuple[SenseId, SenseId], LabelKind]:
    """Argmax label for every ordered (head, dependent) sense pair."""
    out: dict[tuple[SenseId, SenseId], LabelKind] = {}
    for hi, head in enumerate(matrix.senses, start=1):
        for di, dep in enumerate(matrix.senses, start=1):
            if head == dep:
                continue
            out[(head, dep)] = EDGE_LABELS[int(np.argmax(label_logits[:, hi, di]))]
    return out


def biaffine_predict(
    model: BiaffineModel, sense_ids: Iterable[SenseId], table: EmbeddingTable
) -> Parse:
    """Decode the maximum spanning arborescence and label its edges.

    Senses attached to the root become prototypes; every other edge takes
    the argmax of the pairwise label logits.
    """
    senses = _ordered(sense_ids)
    word = senses[0].word
    if len(senses) == 1:
        return Parse.build(word, {senses[0]: LabelKind.PROTOTYPE}, {senses[0]: None})
    matrix, logits = biaffine_score(model, senses, table)
    heads = max_arborescence(matrix)
    index = {sid: i + 1 for i, sid in enumerate(senses)}
    labels: dict[SenseId, LabelKind] = {}
    for sid, head in heads.items():
        if head is None:
            labels[sid] = LabelKind.PROTOTYPE
        else:
            labels[sid] = EDGE_LABELS[int(np.argmax(logits[:, index[head], index[sid]]))]
    return Parse.build(word, labels, heads)


def biaffine_loss_and_gradients(
    model: BiaffineModel,
    batch: Sequence[tuple[Sequence[SenseId], np.ndarray, Parse]],
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray], dict[str, float]]:
    """Head-selection and edge-label cross-entropies with exact gradients.

    The edge loss is, per dependent sense, the cross-entropy of its gold
    head under a softmax over that sense's candidate heads; the label loss
    is the metaphor/metonymy cross-entropy on gold non-root edges. The two
    scorers share no parameters, so the summed gradient drives either a
    joint or a separate optimisation. Pass ``rng`` to sample dropout masks
    (training mode); without it the forward pass is deterministic.
    """
    p = model.params
    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    total_deps = sum(len(senses) for senses, _, _ in batch)
    total_edges = sum(
        sum(1 for _, _, parent in gold.entries if parent is not None) for _, _, gold in batch
    )
    edge_loss = 0.0
    label_loss = 0.0

    for senses, emb, gold in batch:
        fwd = _biaffine_word_forward(model, emb, rng)
        m1 = fwd["size"]
        index = {sid: i + 1 for i, sid in enumerate(senses)}
        parents = gold.parents()
        gold_labels = gold.labels()

        probs = _masked_column_softmax(fwd["scores"][:, 1:])  # (m+1, m)
        d_scores = np.zeros((m1, m1))
        for di, sid in enumerate(senses):
            gold_head = parents[sid]
            hi = 0 if gold_head is None else index[gold_head]
            edge_loss += -np.log(max(probs[hi, di], 1e-300))
            d_scores[:, di + 1] = probs[:, di]
            d_scores[hi, di + 1] -= 1.0
        d_scores /= total_deps

        d_label = np.zeros((2, m1, m1))
        if total_edges:
            for sid, head in parents.items():
                if head is None:
                    continue
                hi, di = index[head], index[sid]
                z = fwd["label_logits"][:, hi, di]
                z = z - z.max()
                soft = np.exp(z) / np.exp(z).sum()
                gold_idx = EDGE_LABELS.index(gold_labels[sid])
                label_loss += -np.log(max(soft[gold_idx], 1e-300))
                d_label[:, hi, di] = soft / total_edges
                d_label[gold_idx, hi, di] -= 1.0 / total_edges

        # Edge scorer backward.
        h, d = fwd["h"], fwd["d"]
        grads["edge.U"] += h.T @ d_scores @ d
        grads["edge.w_head"] += h.T @ d_scores.sum(axis=1)
        grads["edge.w_dep"] += d.T @ d_scores.sum(axis=0)
        grads["edge.b"][0] += d_scores.sum()
        d_h = d_scores @ d @ p["edge.U"].T + d_scores.sum(axis=1)[:, None] * p["edge.w_head"]
        d_d = d_scores.T @ h @ p["edge.U"] + d_scores.sum(axis=0)[:, None] * p["edge.w_dep"]
        dw, db = _mlp_backward(d_h, fwd["h_cache"])
        grads["edge.head.W"] += dw
        grads["edge.head.b"] += db
        dw, db = _mlp_backward(d_d, fwd["d_cache"])
        grads["edge.dep.W"] += dw
        grads["edge.dep.b"] += db

        # Label scorer backward.
        h2, d2 = fwd["h2"], fwd["d2"]
        d_h2 = np.zeros_like(h2)
        d_d2 = np.zeros_like(d2)
        for o in range(2):
            grads["label.U"][o] += h2.T @ d_label[o] @ d2
            grads["label.w_head"][o] += h2.T @ d_label[o].sum(axis=1)
            grads["label.w_dep"][o] += d2.T @ d_label[o].sum(axis=0)
            grads["label.b"][o] += d_label[o].sum()
            d_h2 += d_label[o] @ d2 @ p["label.U"][o].T
            d_h2 += d_label[o].sum(axis=1)[:, None] * p["label.w_head"][o]
            d_d2 += d_label[o].T @ h2 @ p["label.U"][o]
            d_d2 += d_label[o].sum(axis=0)[:, None] * p["label.w_dep"][o]
        dw, db = _mlp_backward(d_h2, fwd["h2_cache"])
        grads["label.head.W"] += dw
        grads["label.head.b"] += db
        dw, db = _mlp_backward(d_d2, fwd["d2_cache"])
        grads["label.dep.W"] += dw
        grads["label.dep.b"] += db

    edge_loss /= max(total_deps, 1)
    label_loss /= max(total_edges, 1)
    loss = edge_loss + label_loss
    return loss, grads, {"edge": edge_loss, "label": label_loss}


# ---------------------------------------------------------------------------
# Optimiser and the training schedule.
# ---------------------------------------------------------------------------


class AdamW:
    """Adam with decoupled weight decay (decay skips vectors and scalars)."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.9,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, param in self.params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if param.ndim >= 2 and self.weight_decay:
                update = update + self.weight_decay * param
            param -= self.lr * update


@dataclass
class EpochRecord:
    phase: str
    epoch: int
    train_loss: float
    dev_loss: float
    lr: float
    event: str = ""

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "dev_loss": self.dev_loss,
            "lr": self.lr,
            "event": self.event,
        }


def _prepare_word(
    word: str, gold: Parse, table: EmbeddingTable
) -> tuple[tuple[SenseId, ...], np.ndarray, Parse]:
    senses = gold.sense_ids()
    for sid in senses:
        if sid.is_virtual or sid.is_split_half:
            raise ValueError(f"{word}: train on preprocessed data (found {sid})")
    return senses, _word_matrix(senses, table), gold


def _as_parse(gold) -> Parse:
    return parse_from_annotation(gold) if isinstance(gold, WordAnnotation) else gold


def train(
    model_kind: str,
    config: TrainConfig,
    split,
    gold: Mapping[str, "WordAnnotation | Parse"],
    table: EmbeddingTable,
    edge_hidden: int = 2048,
    label_hidden: int = 100,
) -> tuple["MpdModel | BiaffineModel", list[EpochRecord]]:
    """Train a baseline with early stopping and a single learning-rate drop.

    Per epoch the dev loss is computed (dropout off); after ``patience``
    epochs without strict improvement the best parameters are restored and
    the learning rate divides by 10, and the second stagnation terminates.
    The biaffine edge and label scorers are trained as separate
    optimisations with their own schedules. Deterministic given the seed.
    """
    train_words = [w for w in split.train if w in gold]
    dev_words = [w for w in split.dev if w in gold]
    if not train_words or not dev_words:
        raise ValueError("train and dev splits must both be non-empty")

    data = {w: _prepare_word(w, _as_parse(gold[w]), table) for w in train_words + dev_words}
    dev_batch = [data[w] for w in dev_words]
    rng = np.random.default_rng(config.seed)
    log: list[EpochRecord] = []

    if model_kind == "mpd":
        model = MpdModel.create(table.dimension, rng)
        _run_schedule(
            "label",
            model.params,
            lambda batch, sample_rng: mpd_loss_and_gradients(model, batch)[:2],
            lambda batch: mpd_loss_and_gradients(model, batch)[0],
            train_words,
            dev_batch,
            data,
            config,
            rng,
            log,
        )
        return model, log

    if model_kind == "biaffine":
        model = BiaffineModel.create(
            table.dimension, edge_hidden, label_hidden, config.dropout, rng
        )

        def make_step(part: str):
            def step(batch, sample_rng):
                loss, grads, parts = biaffine_loss_and_gradients(model, batch, sample_rng)
                return parts[part], {k: v for k, v in grads.items() if k.startswith(part)}

            return step

        def make_eval(part: str):
            def evaluate(batch):
                _, _, parts = biaffine_loss_and_gradients(model, batch, None)
                return parts[part]

            return evaluate

        for part in ("edge", "label"):
            subset = {k: v for k, v in model.params.items() if k.startswith(part)}
            _run_schedule(
                part,
                subset,
                make_step(part),
                make_eval(part),
                train_words,
                dev_batch,
                data,
                config,
                rng,
                log,
            )
        return model, log

    raise ValueError(f"unknown model kind {model_kind!r}")


def _run_schedule(phase, params, step_fn, eval_fn, train_words, dev_batch, data, config, rng, log):
    optimiser = AdamW(
        params,
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
        weight_decay=config.weight_decay,
    )
    best = {k: v.copy() for k, v in params.items()}
    best_loss = np.inf
    stall = 0
    drops_done = 0
    epoch = 0

    def restore() -> None:
        for k in params:
            params[k][...] = best[k]

    while True:
        epoch += 1
        order = list(train_words)
        rng.shuffle(order)
        train_loss = 0.0
        batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [data[w] for w in order[start:start + config.batch_size]]
            sample_rng = rng if config.dropout > 0 else None
            loss, grads = step_fn(batch, sample_rng)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"{phase}: non-finite loss at epoch {epoch} "
                    f"(lr={optimiser.lr}, batch starting at {start})"
                )
            optimiser.step(grads)
            train_loss += float(loss)
            batches += 1
        dev_loss = float(eval_fn(dev_batch))

        event = ""
        if dev_loss < best_loss:
            best_loss = dev_loss
            best = {k: v.copy() for k, v in params.items()}
            stall = 0
        else:
            stall += 1
        if stall >= config.patience:
            restore()
            if drops_done < config.lr_drops:
                optimiser.lr /= 10.0
                drops_done += 1
                stall = 0
                event = "lr-drop"
            else:
                event = "stop"
        if config.max_epochs is not None and epoch >= config.max_epochs and event != "stop":
            restore()
            event = "stop"
        log.append(
            EpochRecord(phase, epoch, train_loss / max(batches, 1), dev_loss, optimiser.lr, event)
        )
        if event == "stop":
            return


def random_parse(
    word: str, sense_ids: Iterable[SenseId], seed: int | np.random.Generator
) -> Parse:
    """A uniform labelled rooted tree: uniform shape, root, and edge labels."""
    senses = _ordered(sense_ids)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = len(senses)
    if n == 1:
        return Parse.build(word, {senses[0]: LabelKind.PROTOTYPE}, {senses[0]: None})
    if n == 2:
        edges = [(0, 1)]
    else:
        seq = [int(v) for v in rng.integers(0, n, size=n - 2)]
        edges = _prufer_decode(seq, list(range(n)))
    root = int(rng.integers(0, n))

    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parents: dict[SenseId, SenseId | None] = {senses[root]: None}
    labels: dict[SenseId, LabelKind] = {senses[root]: LabelKind.PROTOTYPE}
    stack = [root]
    seen = {root}
    while stack:
        cur = stack.pop()
        for nxt in sorted(adj[cur]):
            if nxt not in seen:
                seen.add(nxt)
                parents[senses[nxt]] = senses[cur]
                labels[senses[nxt]] = EDGE_LABELS[int(rng.integers(0, 2))]
                stack.append(nxt)
    return Parse.build(word, labels, parents)


# ---------------------------------------------------------------------------
# Checkpoints.
# ---------------------------------------------------------------------------


def _fingerprint(meta: dict) -> str:
    return hashlib.sha256(json.dumps(meta, sort_keys=True).encode()).hexdigest()[:16]


def save_model(model: "MpdModel | BiaffineModel", path: str | Path, config: TrainConfig | None = None) -> None:
    kind = "mpd" if isinstance(model, MpdModel) else "biaffine"
    meta = {
        "format": CHECKPOINT_FORMAT,
        "kind": kind,
        "dropout": getattr(model, "dropout", 0.0),
        "config": config.to_dict() if config else None,
    }
    meta["fingerprint"] = _fingerprint(meta)
    arrays = {name.replace(".", "__"): arr for name, arr in model.params.items()}
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_model(path: str | Path) -> "MpdModel | BiaffineModel":
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {meta.get('format')!r}")
        params = {
            name.replace("__", "."): data[name].copy()
            for name in data.files
            if name != "__meta__"
        }
    if meta["kind"] == "mpd":
        return MpdModel(params)
    return BiaffineModel(params, dropout=meta.get("dropout", 0.33))
