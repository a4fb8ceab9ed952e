import type { CheckResponse, Draft, EditOp, Gloss, Task, Violation } from "./types";

/** The slice of the service API the UI consumes. */
export interface AnnotationApi {
  nextTask(): Promise<{ done: boolean; task: Task | null }>;
  getTask(word: string): Promise<Task>;
  check(word: string, draft: Draft): Promise<CheckResponse>;
  edit(word: string, expectedVersion: number, op: EditOp): Promise<Task>;
  saveDraft(word: string, expectedVersion: number, draft: Draft): Promise<Task>;
  submit(
    word: string,
    expectedVersion: number,
    draft: Draft,
  ): Promise<{ accepted: boolean; version: number }>;
  gloss(lemma: string): Promise<Gloss | null>;
}

export class ConflictError extends Error {
  constructor(public serverVersion: number | null) {
    super("task version conflict");
    this.name = "ConflictError";
  }
}

export class SubmitRejectedError extends Error {
  constructor(public violations: Violation[]) {
    super("submission rejected");
    this.name = "SubmitRejectedError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin client over the annotation service; all legality logic stays server-side. */
export class ApiClient implements AnnotationApi {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    const headers: Record<string, string> = {
      Authorization: `Bearer ${this.token}`,
      ...(init.body ? { "Content-Type": "application/json" } : {}),
    };
    const response = await this.fetchFn(`${this.baseUrl}${path}`, { ...init, headers });
    if (response.status === 409) {
      const detail = await response.json().catch(() => null);
      throw new ConflictError(detail?.detail?.version ?? null);
    }
    return response;
  }

  private async requireOk<T>(response: Response): Promise<T> {
    if (!response.ok) {
      const body = await response.text().catch(() => "");
      throw new Error(`request failed (${response.status}): ${body}`);
    }
    return (await response.json()) as T;
  }

  async nextTask(): Promise<{ done: boolean; task: Task | null }> {
    return this.requireOk(await this.request("/tasks/next"));
  }

  async getTask(word: string): Promise<Task> {
    return this.requireOk(await this.request(`/tasks/${encodeURIComponent(word)}`));
  }

  async check(word: string, draft: Draft): Promise<CheckResponse> {
    return this.requireOk(
      await this.request(`/tasks/${encodeURIComponent(word)}/check`, {
        method: "POST",
        body: JSON.stringify({ draft }),
      }),
    );
  }

  async edit(word: string, expectedVersion: number, op: EditOp): Promise<Task> {
    return this.requireOk(
      await this.request(`/tasks/${encodeURIComponent(word)}/edit`, {
        method: "POST",
        body: JSON.stringify({ expected_version: expectedVersion, op }),
      }),
    );
  }

  async saveDraft(word: string, expectedVersion: number, draft: Draft): Promise<Task> {
    return this.edit(word, expectedVersion, { op: "save_draft", draft });
  }

  async submit(
    word: string,
    expectedVersion: number,
    draft: Draft,
  ): Promise<{ accepted: boolean; version: number }> {
    const response = await this.request(`/tasks/${encodeURIComponent(word)}/submit`, {
      method: "PUT",
      body: JSON.stringify({ expected_version: expectedVersion, draft }),
    });
    if (response.status === 400) {
      const body = await response.json().catch(() => null);
      throw new SubmitRejectedError(body?.detail?.violations ?? []);
    }
    return this.requireOk(response);
  }

  /** Definition popup lookup; unmatched lemmas yield no popup. */
  async gloss(lemma: string): Promise<Gloss | null> {
    const response = await this.request(`/gloss?lemma=${encodeURIComponent(lemma)}`);
    if (response.status === 404) return null;
    return this.requireOk(response);
  }
}
