"""HTTP annotation service: word queue, live checking, edits, and export.

State is an append-only JSONL event log with periodic snapshots, replayed on
start. Every mutation carries the client's expected task version; a mismatch
is a 409 and writes nothing. Drafts may be incomplete but must be
schema-shaped; a submission is accepted only when every sense is complete
and the assembled annotation passes every model invariant.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Mapping

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query

from sensechain import model as core
from sensechain.corpus import SenseInventory
from sensechain.model import LabelKind, SchemaError, Verdict

SNAPSHOT_EVERY = 50

LABEL_VALUES = {k.value for k in LabelKind}
VERDICT_VALUES = {v.value for v in Verdict}


def load_tokens(path: str | Path) -> dict[str, str]:
    """Token file: one 'annotator token' pair per line."""
    tokens: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        annotator, token = line.split()
        tokens[token] = annotator
    return tokens


# ---------------------------------------------------------------------------
# Draft checking.
# ---------------------------------------------------------------------------


def _draft_entry(draft: Mapping, index: str) -> Mapping:
    return (draft.get("senses") or {}).get(index) or {}


def check_draft_shape(draft: Mapping, view: list[dict]) -> None:
    """Reject drafts that are not schema-shaped (unknown senses, bad enums)."""
    if not isinstance(draft, Mapping):
        raise SchemaError("draft must be an object")
    senses = draft.get("senses", {})
    if not isinstance(senses, Mapping):
        raise SchemaError("draft.senses must map sense indices to entries")
    known_indices = {row["id"] for row in view}
    for index, entry in senses.items():
        if index not in known_indices:
            raise SchemaError(f"draft refers to unknown sense {index!r}")
        if not isinstance(entry, Mapping):
            raise SchemaError(f"draft entry {index!r} must be an object")
        label = entry.get("label")
        if label is not None and label not in LABEL_VALUES:
            raise SchemaError(f"draft entry {index!r}: unknown label {label!r}")
        parent = entry.get("parent")
        if parent is not None and not isinstance(parent, str):
            raise SchemaError(f"draft entry {index!r}: parent must be an index or null")
        for f in entry.get("features", []):
            if not isinstance(f, Mapping) or not isinstance(f.get("id"), int):
                raise SchemaError(f"draft entry {index!r}: malformed feature")
        for j in entry.get("judgements", []):
            if not isinstance(j, Mapping) or not isinstance(j.get("feature"), int):
                raise SchemaError(f"draft entry {index!r}: malformed judgement")
            verdict = j.get("verdict")
            if verdict is not None and verdict not in VERDICT_VALUES:
                raise SchemaError(f"draft entry {index!r}: unknown verdict {verdict!r}")


def check_draft(draft: Mapping, view: list[dict]) -> dict:
    """Completeness flags, violations, and allowed-parent options per sense.

    Allowed parents honour the default attachment rules plus conduit
    overrides, exclude the sense itself, exclude unlabelled candidates, and
    exclude any option that would close a cycle under the current links.
    """
    check_draft_shape(draft, view)
    indices = [row["id"] for row in view]
    labels = {i: _draft_entry(draft, i).get("label") for i in indices}
    parents = {i: _draft_entry(draft, i).get("parent") for i in indices}
    conduits = {i: bool(_draft_entry(draft, i).get("conduit", False)) for i in indices}
    features = {i: list(_draft_entry(draft, i).get("features", [])) for i in indices}
    judgements = {i: list(_draft_entry(draft, i).get("judgements", [])) for i in indices}
    metaphor_children = {
        i: [c for c in indices if parents[c] == i and labels[c] == "metaphor"] for i in indices
    }

    def reaches(start: str, target: str) -> bool:
        cur, hops = start, 0
        while cur is not None and hops <= len(indices):
            if cur == target:
                return True
            cur = parents.get(cur)
            hops += 1
        return False

    def allowed_parents(index: str) -> list[str]:
        label = labels[index]
        if label not in ("metaphor", "metonymy"):
            return []
        options = []
        for candidate in indices:
            if candidate == index:
                continue
            other = labels[candidate]
            if other is None:
                continue
            if label == "metonymy":
                legal = other == "prototype" or conduits[candidate]
            else:
                legal = other != "metaphor" or conduits[candidate]
            if legal and not reaches(candidate, index):
                options.append(candidate)
        return options

    violations: list[dict] = []
    complete: dict[str, bool] = {}
    options_map = {i: allowed_parents(i) for i in indices}

    def flag(index: str, code: str, message: str) -> None:
        violations.append({"sense": index, "code": code, "message": message})

    for row in view:
        i = row["id"]
        ok = True
        label = labels[i]
        if label is None:
            ok = False
            flag(i, "unlabelled", "no label chosen")
        elif label == "prototype":
            if parents[i] is not None:
                ok = False
                flag(i, "label-parent-mismatch", "prototypes take no parent")
            if conduits[i]:
                ok = False
                flag(i, "conduit-on-prototype", "prototypes cannot be conduits")
        else:
            if parents[i] is None:
                ok = False
                flag(i, "unconnected", "no parent chosen")
            elif parents[i] not in options_map[i]:
                ok = False
                flag(i, "illegal-parent", f"{parents[i]} is not a legal parent")
        if row.get("virtual") and not row.get("definition", "").strip():
            ok = False
            flag(i, "empty-definition", "virtual sense needs a definition")
        if metaphor_children[i]:
            if not features[i]:
                ok = False
                flag(i, "missing-features", "a metaphor extends this sense; add features")
            if any(not str(f.get("text", "")).strip() for f in features[i]):
                ok = False
                flag(i, "empty-feature", "feature with empty text")
        elif features[i]:
            ok = False
            flag(i, "features-without-metaphor-child", "features need a metaphor child")
        if label == "metaphor" and parents[i] is not None:
            want = [f.get("id") for f in features.get(parents[i], [])]
            got = [j.get("feature") for j in judgements[i]]
            if sorted(want) != sorted(got):
                ok = False
                flag(i, "slippage-incomplete", "judge every feature of the parent")
            verdicts = [j.get("verdict") for j in judgements[i]]
            if any(v is None for v in verdicts):
                ok = False
                flag(i, "unjudged-feature", "every feature needs a verdict")
            for j in judgements[i]:
                if j.get("verdict") == "modified" and not str(j.get("modified_text") or "").strip():
                    ok = False
                    flag(i, "modified-without-text", "modified judgement needs its text")
            if not (
                "modified" in verdicts or ("kept" in verdicts and "lost" in verdicts)
            ):
                ok = False
                flag(i, "slippage-minimum", "need one modified, or one kept plus one lost")
        elif judgements[i] and label != "metaphor":
            ok = False
            flag(i, "judgements-on-non-metaphor", "only metaphors judge features")
        complete[i] = ok

    submit_ok = bool(indices) and all(complete.values())
    if submit_ok and not any(labels[i] == "prototype" for i in indices):
        submit_ok = False
        violations.append({"sense": None, "code": "no-prototype", "message": "no prototype chosen"})
    return {
        "complete": complete,
        "violations": violations,
        "allowed_parents": options_map,
        "submit_ok": submit_ok,
    }


def assemble_annotation(word: str, annotator: str, view: list[dict], draft: Mapping, word_known: bool) -> core.WordAnnotation:
    """Build a full annotation document from the task view plus its draft."""
    senses = []
    for row in view:
        entry = _draft_entry(draft, row["id"])
        label = entry.get("label")
        if label is None:
            raise SchemaError(f"sense {row['id']} is unlabelled")
        senses.append(
            {
                "id": row["id"],
                "definition": row["definition"],
                "synonyms": row.get("synonyms", []),
                "known": row.get("known", True),
                "label": label,
                "parent": entry.get("parent"),
                "conduit": bool(entry.get("conduit", False)),
                "features": [
                    {"id": f["id"], "text": str(f.get("text", ""))} for f in entry.get("features", [])
                ],
                "judgements": [
                    {
                        "feature": j["feature"],
                        "verdict": j.get("verdict"),
                        "modified_text": j.get("modified_text"),
                    }
                    for j in entry.get("judgements", [])
                ],
            }
        )
    return core.annotation_from_dict(
        {"word": word, "annotator": annotator, "word_known": word_known, "senses": senses}
    )


# ---------------------------------------------------------------------------
# Task store.
# ---------------------------------------------------------------------------


class TaskStore:
    """All annotation tasks, persisted as an event log plus snapshots."""

    def __init__(self, directory: Path | None, inventory: SenseInventory, words: list[str]):
        self.directory = Path(directory) if directory else None
        self.lock = threading.Lock()
        self.tasks: dict[str, dict] = {}
        self.event_count = 0
        for word in words:
            if word not in inventory:
                raise ValueError(f"word {word!r} is not in the inventory")
            view = [
                {
                    "id": rec.id.index,
                    "definition": rec.definition,
                    "synonyms": list(rec.synonyms),
                    "known": True,
                    "virtual": False,
                    "split_half": False,
                }
                for rec in inventory.senses(word)
            ]
            self.tasks[word] = {
                "word": word,
                "senses": view,
                "original_senses": json.loads(json.dumps(view)),
                "annotator": None,
                "status": "pending",
                "version": 0,
                "word_known": True,
                "draft": {"senses": {}},
                "history": [],
            }
        self.queue = list(words)
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            self._replay()

    # -- persistence --------------------------------------------------------

    def _events_path(self) -> Path:
        return self.directory / "events.jsonl"

    def _snapshot_path(self) -> Path:
        return self.directory / "snapshot.json"

    def _replay(self) -> None:
        start = 0
        if self._snapshot_path().exists():
            snap = json.loads(self._snapshot_path().read_text(encoding="utf-8"))
            self.tasks = snap["tasks"]
            self.event_count = start = snap["event_count"]
        if self._events_path().exists():
            with open(self._events_path(), encoding="utf-8") as handle:
                for i, line in enumerate(handle):
                    if i < start or not line.strip():
                        continue
                    self._apply_event(json.loads(line), record=False)
                    self.event_count = i + 1

    def _record(self, event: dict) -> None:
        self._apply_event(event, record=True)

    def _apply_event(self, event: dict, record: bool) -> None:
        kind = event["event"]
        task = self.tasks[event["word"]]
        if kind == "lock":
            task["annotator"] = event["annotator"]
            task["status"] = "in_progress"
        elif kind == "draft":
            task["draft"] = event["draft"]
            task["version"] += 1
        elif kind == "edit":
            self._apply_sense_edit(task, event["op"])
            task["version"] += 1
        elif kind == "submit":
            task["version"] += 1
            task["status"] = "submitted"
            task["history"].append(
                {
                    "version": task["version"],
                    "annotator": event["annotator"],
                    "annotation": event["annotation"],
                }
            )
        if record and self.directory is not None:
            with open(self._events_path(), "a", encoding="utf-8") as handle:
                handle.write(json.dumps(event, ensure_ascii=False) + "\n")
            self.event_count += 1
            if self.event_count % SNAPSHOT_EVERY == 0:
                self._snapshot_path().write_text(
                    json.dumps({"event_count": self.event_count, "tasks": self.tasks}),
                    encoding="utf-8",
                )

    # -- sense edits ---------------------------------------------------------

    def _apply_sense_edit(self, task: dict, op: dict) -> None:
        view = task["senses"]
        kind = op["op"]
        if kind == "save_draft":
            task["draft"] = op["draft"]
        elif kind == "split":
            index = op["sense"]
            row = _find_row(view, index)
            if row is None or row["virtual"] or row["split_half"]:
                raise SchemaError(f"sense {index!r} cannot be split")
            base = int(index)
            pos = view.index(row)
            half_a = dict(row, id=f"{base}A", definition=op.get("def_a", row["definition"]), split_half=True)
            half_b = dict(row, id=f"{base}B", definition=op.get("def_b", row["definition"]), split_half=True)
            view[pos:pos + 1] = [half_a, half_b]
            self._drop_sense_state(task, index)
        elif kind == "merge":
            base = str(op["sense"]).rstrip("AB")
            rows = [r for r in view if r["split_half"] and r["id"] in (f"{base}A", f"{base}B")]
            if len(rows) != 2:
                raise SchemaError(f"sense {op['sense']!r} is not split")
            original = _find_row(task["original_senses"], base)
            pos = view.index(rows[0])
            view[:] = [r for r in view if r not in rows]
            view.insert(pos, json.loads(json.dumps(original)))
            for half in (f"{base}A", f"{base}B"):
                self._drop_sense_state(task, half)
        elif kind == "add_virtual":
            ordinal = 1 + sum(1 for r in view if r["virtual"])
            view.append(
                {
                    "id": f"V{ordinal}",
                    "definition": op.get("definition", ""),
                    "synonyms": [],
                    "known": True,
                    "virtual": True,
                    "split_half": False,
                }
            )
        elif kind == "delete_virtual":
            row = _find_row(view, op["id"])
            if row is None or not row["virtual"]:
                raise SchemaError(f"sense {op.get('id')!r} is not a virtual sense")
            view.remove(row)
            self._drop_sense_state(task, op["id"])
        elif kind == "mark_unknown":
            if "word_known" in op:
                task["word_known"] = bool(op["word_known"])
            else:
                row = _find_row(view, op["sense"])
                if row is None:
                    raise SchemaError(f"unknown sense {op.get('sense')!r}")
                row["known"] = bool(op.get("known", False))
        else:
            raise SchemaError(f"unknown edit op {kind!r}")

    def _drop_sense_state(self, task: dict, index: str) -> None:
        """Clear the removed sense's draft entry and links that point at it."""
        draft_senses = task["draft"].setdefault("senses", {})
        draft_senses.pop(index, None)
        for entry in draft_senses.values():
            if entry.get("parent") == index:
                entry["parent"] = None
                entry["judgements"] = []


def _find_row(view: list[dict], index: str) -> dict | None:
    return next((r for r in view if r["id"] == index), None)


def _public_task(task: dict) -> dict:
    return {
        "id": task["word"],
        "word": task["word"],
        "senses": task["senses"],
        "annotator": task["annotator"],
        "status": task["status"],
        "version": task["version"],
        "word_known": task["word_known"],
        "draft": task["draft"],
    }


# ---------------------------------------------------------------------------
# HTTP app.
# ---------------------------------------------------------------------------


def create_app(store: TaskStore, inventory: SenseInventory, tokens: dict[str, str]) -> FastAPI:
    app = FastAPI(title="sensechain annotation service")

    def annotator(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, "bearer token required")
        token = authorization.removeprefix("Bearer ").strip()
        if token not in tokens:
            raise HTTPException(401, "unknown token")
        return tokens[token]

    def get_task_or_404(word: str) -> dict:
        task = store.tasks.get(word)
        if task is None:
            raise HTTPException(404, f"no task for {word!r}")
        return task

    def check_version(task: dict, expected: int | None) -> None:
        if expected is None or int(expected) != task["version"]:
            raise HTTPException(
                409, {"error": "version conflict", "version": task["version"]}
            )

    def check_owner(task: dict, who: str) -> None:
        if task["annotator"] not in (None, who):
            raise HTTPException(403, f"task is locked by {task['annotator']}")

    @app.get("/tasks/next")
    def next_task(who: str = Depends(annotator)):
        with store.lock:
            for word in store.queue:  # sticky: an in-progress lock comes back first
                task = store.tasks[word]
                if task["status"] == "in_progress" and task["annotator"] == who:
                    return {"done": False, "task": _public_task(task)}
            for word in store.queue:
                task = store.tasks[word]
                if task["status"] == "pending":
                    store._record({"event": "lock", "word": word, "annotator": who})
                    return {"done": False, "task": _public_task(task)}
        return {"done": True, "task": None}

    @app.get("/tasks/{word}")
    def get_task(word: str, who: str = Depends(annotator)):
        return _public_task(get_task_or_404(word))

    @app.post("/tasks/{word}/check")
    def check(word: str, payload: dict = Body(...), who: str = Depends(annotator)):
        task = get_task_or_404(word)
        draft = payload.get("draft", task["draft"])
        try:
            return check_draft(draft, task["senses"])
        except SchemaError as exc:
            raise HTTPException(400, str(exc)) from None

    @app.post("/tasks/{word}/edit")
    def edit(word: str, payload: dict = Body(...), who: str = Depends(annotator)):
        with store.lock:
            task = get_task_or_404(word)
            check_owner(task, who)
            check_version(task, payload.get("expected_version"))
            op = payload.get("op")
            if not isinstance(op, dict) or "op" not in op:
                raise HTTPException(400, "body needs an 'op' object")
            if op["op"] == "save_draft":
                try:
                    check_draft_shape(op.get("draft", {}), task["senses"])
                except SchemaError as exc:
                    raise HTTPException(400, str(exc)) from None
            try:
                store._record({"event": "edit", "word": word, "annotator": who, "op": op})
            except SchemaError as exc:
                raise HTTPException(400, str(exc)) from None
            return _public_task(task)

    @app.put("/tasks/{word}/submit")
    def submit(word: str, payload: dict = Body(...), who: str = Depends(annotator)):
        with store.lock:
            task = get_task_or_404(word)
            check_owner(task, who)
            if task["status"] == "pending":
                raise HTTPException(400, "task is not in progress")
            check_version(task, payload.get("expected_version"))
            draft = payload.get("draft", task["draft"])
            try:
                result = check_draft(draft, task["senses"])
            except SchemaError as exc:
                raise HTTPException(400, str(exc)) from None
            if not result["submit_ok"]:
                raise HTTPException(
                    400, {"accepted": False, "violations": result["violations"]}
                )
            try:
                annotation = assemble_annotation(
                    word, who, task["senses"], draft, task["word_known"]
                )
            except SchemaError as exc:
                raise HTTPException(400, str(exc)) from None
            violations = core.validate(annotation)
            if violations:
                raise HTTPException(
                    400,
                    {
                        "accepted": False,
                        "violations": [
                            {"code": v.code, "message": v.message, "senses": [str(s) for s in v.senses]}
                            for v in violations
                        ],
                    },
                )
            store._record(
                {
                    "event": "submit",
                    "word": word,
                    "annotator": who,
                    "annotation": core.annotation_to_dict(annotation),
                }
            )
            return {"accepted": True, "version": task["version"]}

    @app.get("/tasks/{word}/history")
    def history(word: str, who: str = Depends(annotator)):
        task = get_task_or_404(word)
        return {"word": word, "versions": task["history"]}

    @app.get("/gloss")
    def gloss(lemma: str = Query(...), who: str = Depends(annotator)):
        key = lemma.lower()
        if key not in inventory:
            raise HTTPException(404, f"no entry for {lemma!r}")
        return {
            "lemma": key,
            "senses": [
                {"index": rec.id.index, "definition": rec.definition, "synonyms": list(rec.synonyms)}
                for rec in inventory.senses(key)
            ],
        }

    @app.get("/export")
    def export(who: str = Depends(annotator)):
        docs = []
        for word in sorted(store.tasks):
            task = store.tasks[word]
            if task["history"]:
                doc = task["history"][-1]["annotation"]
                exported = core.annotation_from_dict(doc)
                if core.validate(exported):
                    raise HTTPException(500, f"stored annotation of {word!r} is invalid")
                docs.append(doc)
        docs.sort(key=lambda d: (d["word"], d["annotator"]))
        return {"annotations": docs}

    return app
