// Payload shapes of the annotation service API. The UI never derives
// legality beyond mirroring these responses.

export type Label = "prototype" | "metaphor" | "metonymy";
export type Verdict = "kept" | "lost" | "modified";

export interface SenseRow {
  id: string;
  definition: string;
  synonyms?: string[];
  known?: boolean;
  virtual?: boolean;
  split_half?: boolean;
}

export interface FeatureEntry {
  id: number;
  text: string;
}

export interface JudgementEntry {
  feature: number;
  verdict: Verdict | null;
  modified_text?: string | null;
}

export interface DraftEntry {
  label?: Label | null;
  parent?: string | null;
  conduit?: boolean;
  features?: FeatureEntry[];
  judgements?: JudgementEntry[];
}

export interface Draft {
  senses: Record<string, DraftEntry>;
}

export interface Task {
  id: string;
  word: string;
  senses: SenseRow[];
  annotator: string | null;
  status: "pending" | "in_progress" | "submitted";
  version: number;
  word_known: boolean;
  draft: Draft;
}

export interface Violation {
  sense: string | null;
  code: string;
  message: string;
}

export interface CheckResponse {
  complete: Record<string, boolean>;
  violations: Violation[];
  allowed_parents: Record<string, string[]>;
  submit_ok: boolean;
}

export interface GlossSense {
  index: string;
  definition: string;
  synonyms: string[];
}

export interface Gloss {
  lemma: string;
  senses: GlossSense[];
}

export type EditOp =
  | { op: "split"; sense: string; def_a: string; def_b: string }
  | { op: "merge"; sense: string }
  | { op: "add_virtual"; definition: string }
  | { op: "delete_virtual"; id: string }
  | { op: "mark_unknown"; sense: string; known: boolean }
  | { op: "mark_unknown"; word_known: boolean }
  | { op: "save_draft"; draft: Draft };
