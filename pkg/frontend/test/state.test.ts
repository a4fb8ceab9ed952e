import { beforeEach, describe, expect, it } from "vitest";

import { DraftStore } from "../src/drafts";
import { deriveTableState, draftEdits } from "../src/state";
import type { Draft } from "../src/types";
import { makeCheck, makeTask } from "./stubs";

beforeEach(() => window.localStorage.clear());

describe("deriveTableState", () => {
  it("mirrors completeness colours from the server response", () => {
    const state = deriveTableState(
      makeTask(),
      { senses: {} },
      makeCheck({ complete: { "1": true, "2": false, "3": false, "4": false } }),
    );
    expect(state.rows.find((r) => r.id === "1")?.complete).toBe(true);
    expect(state.rows.find((r) => r.id === "2")?.complete).toBe(false);
  });

  it("shows the conduit toggle only on derived senses", () => {
    let draft: Draft = { senses: {} };
    draft = draftEdits.setLabel(draft, "1", "prototype");
    draft = draftEdits.setLabel(draft, "2", "metonymy");
    const state = deriveTableState(makeTask(), draft, makeCheck());
    expect(state.rows.find((r) => r.id === "1")?.conduitVisible).toBe(false);
    expect(state.rows.find((r) => r.id === "2")?.conduitVisible).toBe(true);
  });

  it("shows the feature editor once a metaphor points at the sense", () => {
    let draft: Draft = { senses: {} };
    draft = draftEdits.setLabel(draft, "3", "metaphor");
    draft = draftEdits.setParent(draft, "3", "2");
    const state = deriveTableState(makeTask(), draft, makeCheck());
    expect(state.rows.find((r) => r.id === "2")?.featureEditorVisible).toBe(true);
    expect(state.rows.find((r) => r.id === "1")?.featureEditorVisible).toBe(false);
  });

  it("derives one judgement slot per parent feature", () => {
    let draft: Draft = { senses: {} };
    draft = draftEdits.setLabel(draft, "3", "metaphor");
    draft = draftEdits.setParent(draft, "3", "2");
    draft = draftEdits.addFeature(draft, "2", "is regular");
    draft = draftEdits.addFeature(draft, "2", "is physical");
    const state = deriveTableState(makeTask(), draft, makeCheck());
    const row = state.rows.find((r) => r.id === "3")!;
    expect(row.judgements.map((j) => j.parentText)).toEqual(["is regular", "is physical"]);
    expect(row.judgements.every((j) => j.verdict === null)).toBe(true);
  });

  it("clears dependent state when the label moves back to prototype", () => {
    let draft: Draft = { senses: {} };
    draft = draftEdits.setLabel(draft, "2", "metaphor");
    draft = draftEdits.setParent(draft, "2", "1");
    draft = draftEdits.setConduit(draft, "2", true);
    draft = draftEdits.setLabel(draft, "2", "prototype");
    expect(draft.senses["2"].parent).toBeNull();
    expect(draft.senses["2"].conduit).toBe(false);
  });

  it("resets judgements when the parent changes", () => {
    let draft: Draft = { senses: {} };
    draft = draftEdits.setLabel(draft, "3", "metaphor");
    draft = draftEdits.setParent(draft, "3", "2");
    draft = draftEdits.setVerdict(draft, "3", 1, "kept", "x");
    draft = draftEdits.setParent(draft, "3", "1");
    expect(draft.senses["3"].judgements).toEqual([]);
  });
});

describe("DraftStore", () => {
  it("round-trips drafts keyed by word and version", () => {
    const store = new DraftStore(window.localStorage);
    const draft: Draft = { senses: { "1": { label: "prototype" } } };
    store.save("march", 3, draft);
    expect(store.load("march", 3)).toEqual(draft);
    expect(store.load("march", 4)).toBeNull(); // stale version
    store.clear("march");
    expect(store.load("march", 3)).toBeNull();
  });

  it("survives malformed storage contents", () => {
    window.localStorage.setItem("sensechain:draft:march", "{broken");
    const store = new DraftStore(window.localStorage);
    expect(store.load("march", 0)).toBeNull();
  });
});
