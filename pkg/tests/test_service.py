import json
import threading

import pytest
from fastapi.testclient import TestClient

from sensechain.corpus import load_inventory_json
from sensechain.model import annotation_from_dict, validate
from sensechain.service import TaskStore, check_draft, create_app, load_tokens

INVENTORY_DOC = {
    "march": [
        {"definition": "the month following February"},
        {"definition": "walking with regular steps", "synonyms": ["marching"]},
        {"definition": "a steady advance"},
        {"definition": "a procession of people walking together"},
    ],
    "neck": [
        {"definition": "the body part joining head and torso"},
        {"definition": "a narrow strip of land"},
    ],
    "twin": [
        {"definition": "either of two offspring of one pregnancy"},
        {"definition": "a person born under Gemini"},
    ],
}

MARCH_DRAFT = {
    "senses": {
        "1": {"label": "prototype"},
        "2": {"label": "prototype"},
        "4": {"label": "metonymy", "parent": "2",
              "features": [{"id": 1, "text": "gradually advances"}]},
        "3": {"label": "metaphor", "parent": "4",
              "judgements": [{"feature": 1, "verdict": "modified",
                              "modified_text": "advances abstractly"}]},
    }
}


@pytest.fixture()
def inventory(tmp_path):
    path = tmp_path / "inventory.json"
    path.write_text(json.dumps(INVENTORY_DOC))
    return load_inventory_json(path)


@pytest.fixture()
def client(tmp_path, inventory):
    store = TaskStore(tmp_path / "store", inventory, ["march", "neck", "twin"])
    app = create_app(store, inventory, {"tok-1": "ann1", "tok-2": "ann2"})
    test_client = TestClient(app)
    test_client.store = store
    return test_client


H1 = {"Authorization": "Bearer tok-1"}
H2 = {"Authorization": "Bearer tok-2"}


class TestAuth:
    def test_missing_token_rejected(self, client):
        assert client.get("/tasks/next").status_code == 401

    def test_unknown_token_rejected(self, client):
        r = client.get("/tasks/next", headers={"Authorization": "Bearer nope"})
        assert r.status_code == 401

    def test_token_file_loader(self, tmp_path):
        path = tmp_path / "tokens.txt"
        path.write_text("# comment\nann1 tok-1\nann2 tok-2\n")
        assert load_tokens(path) == {"tok-1": "ann1", "tok-2": "ann2"}


class TestQueue:
    def test_fifo_and_sticky_lock(self, client):
        first = client.get("/tasks/next", headers=H1).json()
        assert first["task"]["word"] == "march"
        assert first["task"]["status"] == "in_progress"
        again = client.get("/tasks/next", headers=H1).json()
        assert again["task"]["word"] == "march"
        other = client.get("/tasks/next", headers=H2).json()
        assert other["task"]["word"] == "neck"

    def test_exhausted_queue_reports_done(self, tmp_path, inventory):
        store = TaskStore(None, inventory, ["neck"])
        app = create_app(store, inventory, {"t": "a"})
        c = TestClient(app)
        h = {"Authorization": "Bearer t"}
        c.get("/tasks/next", headers=h)
        # annotator a holds neck; a second annotator finds nothing pending
        app2_headers = h
        store.tasks["neck"]["status"] = "submitted"
        done = c.get("/tasks/next", headers=h).json()
        assert done == {"done": True, "task": None}

    def test_unknown_task_404(self, client):
        assert client.get("/tasks/zebra", headers=H1).status_code == 404


class TestCheckDraft:
    def test_incomplete_senses_flagged(self, client):
        client.get("/tasks/next", headers=H1)
        draft = {"senses": {"1": {"label": "prototype"}}}
        res = client.post("/tasks/march/check", headers=H1, json={"draft": draft}).json()
        assert res["complete"]["1"] is True
        assert res["complete"]["3"] is False
        assert res["submit_ok"] is False

    def test_allowed_parent_options(self, client):
        client.get("/tasks/next", headers=H1)
        res = client.post(
            "/tasks/march/check", headers=H1, json={"draft": MARCH_DRAFT}
        ).json()
        # metaphor 3 may extend prototypes and the metonym, never itself
        assert res["allowed_parents"]["3"] == ["1", "2", "4"]
        # metonym 4 may extend prototypes only
        assert res["allowed_parents"]["4"] == ["1", "2"]
        assert res["submit_ok"] is True

    def test_conduit_widens_options(self, client):
        client.get("/tasks/next", headers=H1)
        draft = json.loads(json.dumps(MARCH_DRAFT))
        draft["senses"]["4"]["conduit"] = True
        res = client.post("/tasks/march/check", headers=H1, json={"draft": draft}).json()
        draft["senses"]["3"]["label"] = "metonymy"
        res2 = client.post("/tasks/march/check", headers=H1, json={"draft": draft}).json()
        assert "4" in res2["allowed_parents"]["3"]  # conduit accepts the metonym

    def test_cycle_candidates_excluded(self, client):
        client.get("/tasks/next", headers=H1)
        draft = {
            "senses": {
                "1": {"label": "prototype"},
                "2": {"label": "metonymy", "parent": "1", "conduit": True},
                "3": {"label": "metonymy", "parent": "2", "conduit": True},
                "4": {"label": "metonymy", "parent": "1"},
            }
        }
        res = client.post("/tasks/march/check", headers=H1, json={"draft": draft}).json()
        # sense 2 may not choose its own descendant 3 (or itself)
        assert "3" not in res["allowed_parents"]["2"]
        assert "2" not in res["allowed_parents"]["2"]

    def test_malformed_draft_is_400(self, client):
        client.get("/tasks/next", headers=H1)
        r = client.post(
            "/tasks/march/check", headers=H1,
            json={"draft": {"senses": {"9": {"label": "prototype"}}}},
        )
        assert r.status_code == 400

    def test_check_draft_unit(self):
        view = [
            {"id": "1", "definition": "d1", "virtual": False, "split_half": False},
            {"id": "2", "definition": "d2", "virtual": False, "split_half": False},
        ]
        result = check_draft({"senses": {"1": {"label": "prototype"},
                                         "2": {"label": "metaphor", "parent": "1"}}}, view)
        # metaphor 2 has no judgements but its parent has no features either;
        # the slippage minimum still bites
        assert result["complete"]["2"] is False
        codes = {v["code"] for v in result["violations"]}
        assert "slippage-minimum" in codes or "missing-features" in codes


class TestSubmit:
    def test_valid_annotation_accepted_and_versioned(self, client):
        client.get("/tasks/next", headers=H1)
        r = client.put(
            "/tasks/march/submit", headers=H1,
            json={"expected_version": 0, "draft": MARCH_DRAFT},
        )
        assert r.status_code == 200
        assert r.json() == {"accepted": True, "version": 1}
        exported = client.get("/export", headers=H1).json()["annotations"]
        assert len(exported) == 1
        ann = annotation_from_dict(exported[0])
        assert validate(ann) == []
        assert ann.annotator == "ann1"

    def test_metaphor_without_judgements_rejected(self, client):
        client.get("/tasks/next", headers=H1)
        draft = json.loads(json.dumps(MARCH_DRAFT))
        draft["senses"]["3"]["judgements"] = []
        r = client.put(
            "/tasks/march/submit", headers=H1,
            json={"expected_version": 0, "draft": draft},
        )
        assert r.status_code == 400
        detail = r.json()["detail"]
        assert detail["accepted"] is False
        assert any("slippage" in v["code"] for v in detail["violations"])

    def test_stale_version_conflicts_without_writing(self, client):
        client.get("/tasks/next", headers=H1)
        ok = client.put(
            "/tasks/march/submit", headers=H1,
            json={"expected_version": 0, "draft": MARCH_DRAFT},
        )
        assert ok.status_code == 200
        stale = client.put(
            "/tasks/march/submit", headers=H1,
            json={"expected_version": 0, "draft": MARCH_DRAFT},
        )
        assert stale.status_code == 409
        history = client.get("/tasks/march/history", headers=H1).json()
        assert len(history["versions"]) == 1

    def test_resubmission_keeps_history(self, client):
        client.get("/tasks/next", headers=H1)
        client.put("/tasks/march/submit", headers=H1,
                   json={"expected_version": 0, "draft": MARCH_DRAFT})
        draft = json.loads(json.dumps(MARCH_DRAFT))
        draft["senses"]["3"]["judgements"][0]["modified_text"] = "progresses"
        r = client.put("/tasks/march/submit", headers=H1,
                       json={"expected_version": 1, "draft": draft})
        assert r.status_code == 200
        history = client.get("/tasks/march/history", headers=H1).json()["versions"]
        assert [h["version"] for h in history] == [1, 2]
        exported = client.get("/export", headers=H1).json()["annotations"]
        assert len(exported) == 1  # latest only
        judgement = exported[0]["senses"][2]["judgements"][0]
        assert judgement["modified_text"] == "progresses"

    def test_foreign_annotator_cannot_submit(self, client):
        client.get("/tasks/next", headers=H1)  # ann1 locks march
        r = client.put("/tasks/march/submit", headers=H2,
                       json={"expected_version": 0, "draft": MARCH_DRAFT})
        assert r.status_code == 403

    def test_concurrent_conflicting_submits_one_wins(self, client):
        client.get("/tasks/next", headers=H1)
        outcomes = []

        def submit():
            r = client.put("/tasks/march/submit", headers=H1,
                           json={"expected_version": 0, "draft": MARCH_DRAFT})
            outcomes.append(r.status_code)

        threads = [threading.Thread(target=submit) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(outcomes) == [200, 409, 409, 409]


class TestEdits:
    def _lock(self, client, word="march"):
        task = client.get("/tasks/next", headers=H1).json()["task"]
        assert task["word"] == word
        return task

    def test_split_creates_editable_halves(self, client):
        self._lock(client)
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0,
            "op": {"op": "split", "sense": "1", "def_a": "literal month",
                    "def_b": "figurative month"},
        })
        assert r.status_code == 200
        ids = [s["id"] for s in r.json()["senses"]]
        assert ids[:2] == ["1A", "1B"]
        definitions = {s["id"]: s["definition"] for s in r.json()["senses"]}
        assert definitions["1A"] == "literal month"
        assert definitions["1B"] == "figurative month"

    def test_merge_restores_original_sense(self, client):
        self._lock(client)
        client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0,
            "op": {"op": "split", "sense": "1", "def_a": "a", "def_b": "b"},
        })
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 1, "op": {"op": "merge", "sense": "1A"},
        })
        assert r.status_code == 200
        ids = [s["id"] for s in r.json()["senses"]]
        assert ids[0] == "1"
        definitions = {s["id"]: s["definition"] for s in r.json()["senses"]}
        assert definitions["1"] == INVENTORY_DOC["march"][0]["definition"]

    def test_merge_of_unsplit_sense_is_400(self, client):
        self._lock(client)
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0, "op": {"op": "merge", "sense": "2"},
        })
        assert r.status_code == 400

    def test_add_and_delete_virtual(self, client):
        self._lock(client)
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0,
            "op": {"op": "add_virtual", "definition": "an intermediate sense"},
        })
        ids = [s["id"] for s in r.json()["senses"]]
        assert "V1" in ids
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 1, "op": {"op": "delete_virtual", "id": "V1"},
        })
        assert "V1" not in [s["id"] for s in r.json()["senses"]]

    def test_delete_non_virtual_is_400(self, client):
        self._lock(client)
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0, "op": {"op": "delete_virtual", "id": "1"},
        })
        assert r.status_code == 400

    def test_deleting_parent_clears_dependent_links(self, client):
        self._lock(client)
        client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0,
            "op": {"op": "add_virtual", "definition": "hub"},
        })
        draft = {"senses": {"1": {"label": "prototype"},
                            "V1": {"label": "metonymy", "parent": "1"},
                            "2": {"label": "metonymy", "parent": "V1"}}}
        client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 1, "op": {"op": "save_draft", "draft": draft},
        })
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 2, "op": {"op": "delete_virtual", "id": "V1"},
        })
        stored = r.json()["draft"]["senses"]
        assert stored["2"]["parent"] is None
        res = client.post("/tasks/march/check", headers=H1, json={}).json()
        assert res["complete"]["2"] is False

    def test_mark_unknown_sense_and_word(self, client):
        self._lock(client)
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0,
            "op": {"op": "mark_unknown", "sense": "3", "known": False},
        })
        senses = {s["id"]: s for s in r.json()["senses"]}
        assert senses["3"]["known"] is False
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 1, "op": {"op": "mark_unknown", "word_known": False},
        })
        assert r.json()["word_known"] is False

    def test_stale_edit_conflicts(self, client):
        self._lock(client)
        client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0, "op": {"op": "add_virtual", "definition": "x"},
        })
        r = client.post("/tasks/march/edit", headers=H1, json={
            "expected_version": 0, "op": {"op": "add_virtual", "definition": "y"},
        })
        assert r.status_code == 409


class TestGloss:
    def test_lookup_hits_inventory(self, client):
        r = client.get("/gloss", headers=H1, params={"lemma": "neck"})
        assert r.status_code == 200
        assert len(r.json()["senses"]) == 2

    def test_unmatched_lemma_is_404(self, client):
        assert client.get("/gloss", headers=H1, params={"lemma": "xyzzy"}).status_code == 404


class TestPersistence:
    def test_replay_restores_state(self, tmp_path, inventory):
        store_dir = tmp_path / "store"
        store = TaskStore(store_dir, inventory, ["march", "neck"])
        app = create_app(store, inventory, {"t": "ann1"})
        c = TestClient(app)
        h = {"Authorization": "Bearer t"}
        c.get("/tasks/next", headers=h)
        c.post("/tasks/march/edit", headers=h, json={
            "expected_version": 0, "op": {"op": "add_virtual", "definition": "hub"},
        })
        c.put("/tasks/march/submit", headers=h, json={
            "expected_version": 1,
            "draft": {
                "senses": dict(MARCH_DRAFT["senses"],
                               V1={"label": "metonymy", "parent": "2"}),
            },
        })
        replayed = TaskStore(store_dir, inventory, ["march", "neck"])
        task = replayed.tasks["march"]
        assert task["version"] == 2
        assert task["status"] == "submitted"
        assert len(task["history"]) == 1
        assert any(s["id"] == "V1" for s in task["senses"])

    def test_snapshot_written_after_enough_events(self, tmp_path, inventory):
        import sensechain.service as service_module

        store_dir = tmp_path / "store"
        store = TaskStore(store_dir, inventory, ["march"])
        app = create_app(store, inventory, {"t": "ann1"})
        c = TestClient(app)
        h = {"Authorization": "Bearer t"}
        c.get("/tasks/next", headers=h)
        for i in range(service_module.SNAPSHOT_EVERY + 1):
            c.post("/tasks/march/edit", headers=h, json={
                "expected_version": i, "op": {"op": "add_virtual", "definition": f"v{i}"},
            })
        assert (store_dir / "snapshot.json").exists()
        replayed = TaskStore(store_dir, inventory, ["march"])
        assert replayed.tasks["march"]["version"] == store.tasks["march"]["version"]
