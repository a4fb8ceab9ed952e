"""Ingestion of sense inventories, embeddings, and dataset splits.

The inventory can come from a JSON export (documented in the README) or
from the standard wordnet database layout (``index.noun``/``data.noun``).
Embeddings use a one-record-per-line text format with a JSON sidecar that
pins the dimension, chosen for streamability and bit-exact auditing.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from sensechain.model import SchemaError, SenseId, SenseRecord


@dataclass(frozen=True)
class InventorySense:
    record: SenseRecord
    proper_noun: bool = False


@dataclass(frozen=True)
class SenseInventory:
    """Nominal senses per lemma, in the lexicon's sense order (indices from 1)."""

    entries: Mapping[str, tuple[InventorySense, ...]]

    def lemmas(self) -> list[str]:
        return sorted(self.entries)

    def senses(self, lemma: str) -> tuple[SenseRecord, ...]:
        return tuple(e.record for e in self.entries[lemma])

    def __contains__(self, lemma: str) -> bool:
        return lemma in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]

    def all_words(self) -> tuple[str, ...]:
        return self.train + self.dev + self.test


@dataclass(frozen=True)
class CoverageReport:
    """Senses with no embedding vector and the words excluded because of them."""

    missing: tuple[SenseId, ...]
    excluded_words: tuple[str, ...]


@dataclass(frozen=True)
class EmbeddingTable:
    """Sense id -> fixed-dimension real vector, the only model input."""

    vectors: Mapping[SenseId, np.ndarray]
    dimension: int

    def __contains__(self, sid: SenseId) -> bool:
        return sid in self.vectors

    def __getitem__(self, sid: SenseId) -> np.ndarray:
        return self.vectors[sid]

    def __len__(self) -> int:
        return len(self.vectors)


def load_inventory_json(path: str | Path) -> SenseInventory:
    """Read the JSON inventory export: lemma -> list of sense objects."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{p}: inventory must map lemmas to sense lists")
    entries: dict[str, tuple[InventorySense, ...]] = {}
    for lemma, raw_senses in doc.items():
        if not isinstance(raw_senses, list) or not raw_senses:
            raise SchemaError(f"{p}: lemma {lemma!r} must list at least one sense")
        senses = []
        for i, raw in enumerate(raw_senses, start=1):
            if not isinstance(raw, dict) or not isinstance(raw.get("definition"), str):
                raise SchemaError(f"{p}: {lemma!r} sense {i} needs a definition")
            if not raw["definition"].strip():
                raise SchemaError(f"{p}: {lemma!r} sense {i} has an empty definition")
            synonyms = tuple(raw.get("synonyms", ()))
            senses.append(
                InventorySense(
                    SenseRecord(SenseId.plain(lemma, i), raw["definition"], synonyms),
                    proper_noun=bool(raw.get("proper_noun", False)),
                )
            )
        entries[lemma] = tuple(senses)
    return SenseInventory(entries)


def load_inventory_wndb(directory: str | Path) -> SenseInventory:
    """Read nominal senses from a wordnet database directory.

    Sense order follows ``index.noun``; glosses and synset members come from
    ``data.noun``. A sense counts as a proper noun when its synset is an
    instance (it carries an instance-hypernym pointer). Underscores in
    lemmas become spaces.
    """
    directory = Path(directory)
    data_path = directory / "data.noun"
    index_path = directory / "index.noun"
    if not data_path.exists() or not index_path.exists():
        raise FileNotFoundError(f"{directory} does not hold index.noun and data.noun")

    synsets: dict[str, tuple[str, tuple[str, ...], bool]] = {}
    for line in data_path.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("  "):
            continue
        body, _, gloss = line.partition("|")
        fields = body.split()
        offset = fields[0]
        w_cnt = int(fields[3], 16)
        words = tuple(fields[4 + 2 * i].replace("_", " ") for i in range(w_cnt))
        rest = fields[4 + 2 * w_cnt:]
        p_cnt = int(rest[0])
        pointer_symbols = {rest[1 + 4 * i] for i in range(p_cnt)}
        is_instance = "@i" in pointer_symbols
        synsets[offset] = (gloss.strip(), words, is_instance)

    entries: dict[str, tuple[InventorySense, ...]] = {}
    for line in index_path.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("  "):
            continue
        fields = line.split()
        lemma = fields[0].replace("_", " ")
        synset_cnt = int(fields[2])
        p_cnt = int(fields[3])
        offsets = fields[4 + p_cnt + 2: 4 + p_cnt + 2 + synset_cnt]
        senses = []
        for i, offset in enumerate(offsets, start=1):
            if offset not in synsets:
                raise SchemaError(f"{index_path}: {lemma!r} points at unknown synset {offset}")
            gloss, words, is_instance = synsets[offset]
            synonyms = tuple(w for w in words if w.lower() != lemma)
            senses.append(
                InventorySense(
                    SenseRecord(SenseId.plain(lemma, i), gloss, synonyms),
                    proper_noun=is_instance,
                )
            )
        if senses:
            entries[lemma] = tuple(senses)
    return SenseInventory(entries)


def load_inventory(path: str | Path) -> SenseInventory:
    """Dispatch on the path: a directory is a wordnet database, a file is JSON."""
    p = Path(path)
    return load_inventory_wndb(p) if p.is_dir() else load_inventory_json(p)


def filter_words(inventory: SenseInventory) -> list[str]:
    """Words eligible for annotation: 2 to 10 nominal senses, plain wordforms.

    Drops single-letter wordforms, wordforms with whitespace or hyphens, and
    words whose senses are all proper nouns.
    """
    kept = []
    for lemma in inventory.lemmas():
        senses = inventory.entries[lemma]
        if not 2 <= len(senses) <= 10:
            continue
        if len(lemma) == 1:
            continue
        if re.search(r"\s|-", lemma):
            continue
        if all(s.proper_noun for s in senses):
            continue
        kept.append(lemma)
    return kept


def load_word_weights(path: str | Path) -> dict[str, float]:
    """Sampling weights: one 'word weight' pair per line.

    Weights are accepted as an input file only; this package never derives
    them from a corpus.
    """
    weights: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, raw = line.split()
        value = float(raw)
        if value < 0:
            raise SchemaError(f"{path}:{lineno}: negative weight for {word!r}")
        weights[word] = value
    return weights


def sample_words(
    words: Iterable[str],
    k: int,
    seed: int,
    weights: Mapping[str, float] | None = None,
) -> list[str]:
    """Sample k distinct words, optionally weighted; deterministic by seed."""
    pool = list(words)
    if k > len(pool):
        raise ValueError(f"cannot sample {k} from {len(pool)} words")
    rng = random.Random(seed)
    if weights is None:
        return sorted(rng.sample(pool, k))
    chosen: list[str] = []
    remaining = list(pool)
    values = [float(weights.get(w, 0.0)) for w in remaining]
    for _ in range(k):
        total = sum(values)
        if total <= 0:  # everything left is zero-weighted; fall back to uniform
            values = [1.0] * len(remaining)
            total = float(len(remaining))
        pick = rng.random() * total
        cumulative = 0.0
        for i, value in enumerate(values):
            cumulative += value
            if pick <= cumulative:
                break
        chosen.append(remaining.pop(i))
        values.pop(i)
    return sorted(chosen)


def split_dataset(words: Iterable[str], seed: int) -> DatasetSplit:
    """Deterministic 80:10:10 split of the word list."""
    pool = list(words)
    if len(pool) < 10:
        raise ValueError("need at least 10 words to split 80:10:10")
    if len(set(pool)) != len(pool):
        raise ValueError("word list contains duplicates")
    rng = random.Random(seed)
    rng.shuffle(pool)
    n = len(pool)
    n_train = int(n * 0.8)
    n_dev = int(n * 0.1)
    return DatasetSplit(
        train=tuple(pool[:n_train]),
        dev=tuple(pool[n_train:n_train + n_dev]),
        test=tuple(pool[n_train + n_dev:]),
    )


def embedding_key(sid: SenseId) -> str:
    return f"{sid.word}#{sid.index}"


def parse_embedding_key(key: str) -> SenseId:
    word, sep, index = key.rpartition("#")
    if not sep or not word:
        raise SchemaError(f"malformed embedding key {key!r}")
    return SenseId(word, index)


def load_embeddings(
    path: str | Path, inventory: SenseInventory | None = None
) -> tuple[EmbeddingTable, CoverageReport]:
    """Load the line-format embedding file; report inventory senses it misses.

    Each line is ``word#index`` followed by whitespace-separated decimals.
    A ``<path>.meta`` sidecar may pin the dimension; rows must all agree.
    Words with any uncovered sense are flagged for exclusion from parsing
    experiments rather than zero-filled.
    """
    p = Path(path)
    expected_dim: int | None = None
    sidecar = p.with_name(p.name + ".meta")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        expected_dim = int(meta["dimension"])

    vectors: dict[SenseId, np.ndarray] = {}
    with open(p, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            key, *values = line.split()
            sid = parse_embedding_key(key)
            vec = np.array([float(v) for v in values], dtype=np.float64)
            if expected_dim is None:
                expected_dim = vec.shape[0]
            if vec.shape[0] != expected_dim:
                raise SchemaError(
                    f"{p}:{lineno}: vector of dimension {vec.shape[0]}, expected {expected_dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise SchemaError(f"{p}:{lineno}: non-finite embedding value")
            if sid in vectors:
                raise SchemaError(f"{p}:{lineno}: duplicate embedding for {sid}")
            vectors[sid] = vec
    if expected_dim is None:
        raise SchemaError(f"{p}: embedding file is empty")

    missing: list[SenseId] = []
    excluded: list[str] = []
    if inventory is not None:
        for lemma in inventory.lemmas():
            uncovered = [
                e.record.id for e in inventory.entries[lemma] if e.record.id not in vectors
            ]
            if uncovered:
                missing.extend(uncovered)
                excluded.append(lemma)
    table = EmbeddingTable(vectors, expected_dim)
    return table, CoverageReport(tuple(missing), tuple(excluded))


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write the line format plus the dimension sidecar."""
    p = Path(path)
    with open(p, "w", encoding="utf-8") as handle:
        for sid in sorted(table.vectors, key=lambda s: (s.word, s.sort_key())):
            values = " ".join(repr(float(v)) for v in table.vectors[sid])
            handle.write(f"{embedding_key(sid)} {values}\n")
    sidecar = p.with_name(p.name + ".meta")
    sidecar.write_text(json.dumps({"dimension": table.dimension}) + "\n", encoding="utf-8")
