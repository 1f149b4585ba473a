/**
 * Typed client for the review service API with an offline retry queue.
 *
 * Decisions that fail on network errors are parked in localStorage and
 * replayed on the next successful round trip, so a flaky connection never
 * loses a reviewer's work. Conflicts (item gone or rejected input) surface
 * to the caller as ApiError.
 */

export type ItemKind = "seed_candidate" | "rewrite_confirm" | "eval_score";
export type ItemStatus = "pending" | "accepted" | "rejected" | "edited";
export type Score = "correct" | "partial" | "wrong";

export interface ReviewItem {
  item_id: string;
  kind: ItemKind;
  payload: Record<string, string>;
  status: ItemStatus;
  edited_payload: Record<string, string> | null;
  promoted: string | null;
  decisions: Record<string, { action: string; score: string | null }>;
}

export interface Decision {
  item_id: string;
  reviewer_id: string;
  action: "accept" | "reject" | "edit";
  edited_payload?: Record<string, string>;
  score?: Score;
}

export interface Stats {
  reviewed: number;
  pending: number;
  decisions: number;
  by_kind: Record<string, Record<string, number>>;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly conflict: boolean,
  ) {
    super(message);
  }
}

const RETRY_KEY = "editforge-retry-queue";

function loadRetryQueue(storage: Storage): Decision[] {
  try {
    return JSON.parse(storage.getItem(RETRY_KEY) ?? "[]") as Decision[];
  } catch {
    return [];
  }
}

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly storage: Storage = globalThis.localStorage,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(body || response.statusText, response.status, response.status === 404);
    }
    return (await response.json()) as T;
  }

  async pending(kind?: ItemKind, limit?: number, reviewer?: string): Promise<ReviewItem[]> {
    const params = new URLSearchParams();
    if (kind) params.set("kind", kind);
    if (limit) params.set("limit", String(limit));
    if (reviewer) params.set("reviewer", reviewer);
    const query = params.toString();
    const body = await this.request<{ items: ReviewItem[] }>(
      `/api/pending${query ? "?" + query : ""}`,
    );
    return body.items;
  }

  async item(itemId: string): Promise<ReviewItem> {
    return this.request<ReviewItem>(`/api/item/${itemId}`);
  }

  async stats(): Promise<Stats> {
    return this.request<Stats>("/api/stats");
  }

  /**
   * Submit a decision and read it back for durability.
   *
   * Network failures park the decision for a later flush and report
   * { durable: false }. API rejections propagate as ApiError.
   */
  async decide(decision: Decision): Promise<{ item: ReviewItem | null; durable: boolean }> {
    try {
      await this.request<ReviewItem>("/api/decision", {
        method: "POST",
        body: JSON.stringify(decision),
      });
    } catch (error) {
      if (error instanceof ApiError) throw error;
      this.park(decision);
      return { item: null, durable: false };
    }
    const item = await this.item(decision.item_id);
    if (!(decision.reviewer_id in item.decisions)) {
      throw new ApiError("decision did not persist", 500, false);
    }
    return { item, durable: true };
  }

  park(decision: Decision): void {
    const queue = loadRetryQueue(this.storage);
    queue.push(decision);
    this.storage.setItem(RETRY_KEY, JSON.stringify(queue));
  }

  parkedCount(): number {
    return loadRetryQueue(this.storage).length;
  }

  /** Replay parked decisions; leaves whatever still fails in the queue. */
  async flushParked(): Promise<number> {
    const queue = loadRetryQueue(this.storage);
    if (queue.length === 0) return 0;
    const stillParked: Decision[] = [];
    let flushed = 0;
    for (const decision of queue) {
      try {
        await this.request<ReviewItem>("/api/decision", {
          method: "POST",
          body: JSON.stringify(decision),
        });
        flushed += 1;
      } catch (error) {
        // API rejections are dropped for cause; only transport failures
        // stay parked, otherwise a bad decision would retry forever.
        if (!(error instanceof ApiError)) {
          stillParked.push(decision);
        }
      }
    }
    this.storage.setItem(RETRY_KEY, JSON.stringify(stillParked));
    return flushed;
  }
}
