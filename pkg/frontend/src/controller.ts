import { AnnotationApi, ConflictError, SubmitRejectedError } from "./api";
import { DraftStore } from "./drafts";
import { deriveTableState, TableState } from "./state";
import type { CheckResponse, Draft, EditOp, Task, Violation } from "./types";

export interface ControllerEvents {
  onState(state: TableState): void;
  onConflict(): void;
  onNetworkError(message: string): void;
  onRejected(violations: Violation[]): void;
  onDone(): void;
  onSubmitted(word: string): void;
}

const EMPTY_CHECK: CheckResponse = {
  complete: {},
  violations: [],
  allowed_parents: {},
  submit_ok: false,
};

/**
 * Drives one task at a time: keeps the working draft, persists it locally
 * on every edit, refreshes the server check, and funnels structural edits
 * through the optimistic-versioned edit endpoint. Version conflicts always
 * surface the reload dialog; the draft in local storage is never lost by a
 * failed request.
 */
export class AnnotationController {
  task: Task | null = null;
  draft: Draft = { senses: {} };
  lastCheck: CheckResponse = EMPTY_CHECK;
  private checkTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private api: AnnotationApi,
    private drafts: DraftStore,
    private events: ControllerEvents,
    private debounceMs = 250,
  ) {}

  async start(): Promise<void> {
    let result;
    try {
      result = await this.api.nextTask();
    } catch (error) {
      this.events.onNetworkError(String(error));
      return;
    }
    if (result.done || !result.task) {
      this.events.onDone();
      return;
    }
    await this.adopt(result.task);
  }

  async reload(): Promise<void> {
    if (!this.task) return this.start();
    try {
      const fresh = await this.api.getTask(this.task.word);
      this.drafts.clear(this.task.word);
      await this.adopt(fresh);
    } catch (error) {
      this.events.onNetworkError(String(error));
    }
  }

  private async adopt(task: Task): Promise<void> {
    this.task = task;
    // restore the locally persisted draft when it matches the server
    // version; otherwise the server's stored draft wins
    const local = this.drafts.load(task.word, task.version);
    this.draft = local ?? task.draft ?? { senses: {} };
    await this.refreshCheck();
  }

  /** Apply a draft edit, persist it, and schedule a live server check. */
  applyDraft(edit: (draft: Draft) => Draft): void {
    if (!this.task) return;
    this.draft = edit(this.draft);
    this.drafts.save(this.task.word, this.task.version, this.draft);
    this.scheduleCheck();
  }

  private scheduleCheck(): void {
    if (this.checkTimer !== null) clearTimeout(this.checkTimer);
    if (this.debounceMs === 0) {
      void this.refreshCheck();
      return;
    }
    this.checkTimer = setTimeout(() => void this.refreshCheck(), this.debounceMs);
  }

  async refreshCheck(): Promise<void> {
    if (!this.task) return;
    try {
      this.lastCheck = await this.api.check(this.task.word, this.draft);
    } catch (error) {
      if (error instanceof ConflictError) {
        this.events.onConflict();
        return;
      }
      this.events.onNetworkError(String(error));
      return;
    }
    this.emit();
  }

  private emit(): void {
    if (!this.task) return;
    this.events.onState(deriveTableState(this.task, this.draft, this.lastCheck));
  }

  /** Structural edits (split/merge/virtual/unknown) go through the server. */
  async structuralEdit(op: EditOp): Promise<void> {
    if (!this.task) return;
    try {
      const updated = await this.api.edit(this.task.word, this.task.version, op);
      this.task = updated;
      this.draft = updated.draft ?? this.draft;
      this.drafts.save(updated.word, updated.version, this.draft);
      await this.refreshCheck();
    } catch (error) {
      if (error instanceof ConflictError) {
        this.events.onConflict();
      } else {
        this.events.onNetworkError(String(error));
      }
    }
  }

  async persistDraft(): Promise<void> {
    if (!this.task) return;
    try {
      const updated = await this.api.saveDraft(this.task.word, this.task.version, this.draft);
      this.task = updated;
      this.drafts.save(updated.word, updated.version, this.draft);
      this.emit();
    } catch (error) {
      if (error instanceof ConflictError) {
        this.events.onConflict();
      } else {
        this.events.onNetworkError(String(error));
      }
    }
  }

  async submit(): Promise<void> {
    if (!this.task) return;
    if (!this.lastCheck.submit_ok) return; // the button mirrors this gate
    try {
      await this.api.submit(this.task.word, this.task.version, this.draft);
      this.drafts.clear(this.task.word);
      this.events.onSubmitted(this.task.word);
      this.task = null;
      await this.start();
    } catch (error) {
      if (error instanceof ConflictError) {
        this.events.onConflict();
      } else if (error instanceof SubmitRejectedError) {
        this.events.onRejected(error.violations);
      } else {
        this.events.onNetworkError(String(error));
      }
    }
  }
}
