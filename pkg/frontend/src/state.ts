import type {
  CheckResponse,
  Draft,
  DraftEntry,
  FeatureEntry,
  Label,
  Task,
  Verdict,
} from "./types";

export interface ParentOption {
  id: string;
  enabled: boolean;
}

export interface JudgementState {
  featureId: number;
  parentText: string;
  verdict: Verdict | null;
  modifiedText: string | null;
  showTextBox: boolean;
}

export interface RowState {
  id: string;
  definition: string;
  known: boolean;
  virtual: boolean;
  splitHalf: boolean;
  complete: boolean;
  label: Label | null;
  conduit: boolean;
  conduitVisible: boolean;
  parent: string | null;
  parentOptions: ParentOption[];
  featureEditorVisible: boolean;
  features: FeatureEntry[];
  judgements: JudgementState[];
}

export interface TableState {
  word: string;
  version: number;
  wordKnown: boolean;
  rows: RowState[];
  submitEnabled: boolean;
  violations: CheckResponse["violations"];
}

function entryOf(draft: Draft, id: string): DraftEntry {
  return draft.senses[id] ?? {};
}

/**
 * Project the task, its draft, and the latest server check into row states.
 * Pure mirroring: completeness, allowed parents, and the submit gate all
 * come from the server response.
 */
export function deriveTableState(task: Task, draft: Draft, check: CheckResponse): TableState {
  const metaphorParents = new Set<string>();
  for (const row of task.senses) {
    const entry = entryOf(draft, row.id);
    if (entry.label === "metaphor" && entry.parent) {
      metaphorParents.add(entry.parent);
    }
  }

  const rows: RowState[] = task.senses.map((row) => {
    const entry = entryOf(draft, row.id);
    const label = entry.label ?? null;
    const allowed = new Set(check.allowed_parents[row.id] ?? []);
    const parentOptions: ParentOption[] =
      label === "metaphor" || label === "metonymy"
        ? task.senses
            .filter((other) => other.id !== row.id)
            .map((other) => ({ id: other.id, enabled: allowed.has(other.id) }))
        : [];

    const parentEntry = entry.parent ? entryOf(draft, entry.parent) : null;
    const parentFeatures = parentEntry?.features ?? [];
    const judgements: JudgementState[] =
      label === "metaphor"
        ? parentFeatures.map((feature) => {
            const judged = (entry.judgements ?? []).find((j) => j.feature === feature.id);
            const verdict = judged?.verdict ?? null;
            return {
              featureId: feature.id,
              parentText: feature.text,
              verdict,
              // the modified box pre-fills with the parent feature's text
              modifiedText:
                verdict === "modified" ? judged?.modified_text ?? feature.text : null,
              showTextBox: verdict === "modified",
            };
          })
        : [];

    return {
      id: row.id,
      definition: row.definition,
      known: row.known ?? true,
      virtual: row.virtual ?? false,
      splitHalf: row.split_half ?? false,
      complete: check.complete[row.id] ?? false,
      label,
      conduit: entry.conduit ?? false,
      conduitVisible: label === "metaphor" || label === "metonymy",
      parent: entry.parent ?? null,
      parentOptions,
      featureEditorVisible: metaphorParents.has(row.id) || (entry.features ?? []).length > 0,
      features: entry.features ?? [],
      judgements,
    };
  });

  return {
    word: task.word,
    version: task.version,
    wordKnown: task.word_known,
    rows,
    submitEnabled: check.submit_ok,
    violations: check.violations,
  };
}

/** Immutable draft update helpers used by the table's event handlers. */
export const draftEdits = {
  setLabel(draft: Draft, id: string, label: Label | null): Draft {
    const entry = { ...entryOf(draft, id), label };
    if (label === "prototype" || label === null) {
      entry.parent = null;
      entry.conduit = false;
      entry.judgements = [];
    }
    return { senses: { ...draft.senses, [id]: entry } };
  },

  setParent(draft: Draft, id: string, parent: string | null): Draft {
    // judgements reference the previous parent's features; reset them
    const entry = { ...entryOf(draft, id), parent, judgements: [] };
    return { senses: { ...draft.senses, [id]: entry } };
  },

  setConduit(draft: Draft, id: string, conduit: boolean): Draft {
    return { senses: { ...draft.senses, [id]: { ...entryOf(draft, id), conduit } } };
  },

  addFeature(draft: Draft, id: string, text = ""): Draft {
    const entry = entryOf(draft, id);
    const features = entry.features ?? [];
    const nextId = features.reduce((m, f) => Math.max(m, f.id), 0) + 1;
    return {
      senses: {
        ...draft.senses,
        [id]: { ...entry, features: [...features, { id: nextId, text }] },
      },
    };
  },

  setFeatureText(draft: Draft, id: string, featureId: number, text: string): Draft {
    const entry = entryOf(draft, id);
    const features = (entry.features ?? []).map((f) =>
      f.id === featureId ? { ...f, text } : f,
    );
    return { senses: { ...draft.senses, [id]: { ...entry, features } } };
  },

  setVerdict(
    draft: Draft,
    id: string,
    featureId: number,
    verdict: Verdict,
    parentFeatureText: string,
  ): Draft {
    const entry = entryOf(draft, id);
    const rest = (entry.judgements ?? []).filter((j) => j.feature !== featureId);
    const judgement = {
      feature: featureId,
      verdict,
      // pre-fill the editable copy with the parent feature's own text
      modified_text: verdict === "modified" ? parentFeatureText : null,
    };
    return {
      senses: { ...draft.senses, [id]: { ...entry, judgements: [...rest, judgement] } },
    };
  },

  setModifiedText(draft: Draft, id: string, featureId: number, text: string): Draft {
    const entry = entryOf(draft, id);
    const judgements = (entry.judgements ?? []).map((j) =>
      j.feature === featureId ? { ...j, modified_text: text } : j,
    );
    return { senses: { ...draft.senses, [id]: { ...entry, judgements } } };
  },
};
