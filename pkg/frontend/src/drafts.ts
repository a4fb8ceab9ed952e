import type { Draft } from "./types";

interface StoredDraft {
  version: number;
  draft: Draft;
  savedAt: string;
}

const PREFIX = "sensechain:draft:";

/**
 * Local draft persistence so a refresh or reopen restores in-progress work.
 * Drafts are keyed by word and stamped with the task version they were
 * written against; a stored draft is only usable while the server task is
 * still at that version (the server is authoritative on conflict).
 */
export class DraftStore {
  constructor(private storage: Storage = window.localStorage) {}

  save(word: string, version: number, draft: Draft): void {
    const entry: StoredDraft = {
      version,
      draft,
      savedAt: new Date().toISOString(),
    };
    this.storage.setItem(PREFIX + word, JSON.stringify(entry));
  }

  load(word: string, currentVersion: number): Draft | null {
    const raw = this.storage.getItem(PREFIX + word);
    if (!raw) return null;
    try {
      const entry = JSON.parse(raw) as StoredDraft;
      if (entry.version !== currentVersion) return null;
      return entry.draft;
    } catch {
      return null;
    }
  }

  clear(word: string): void {
    this.storage.removeItem(PREFIX + word);
  }
}
