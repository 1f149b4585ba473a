/**
 * Queue flow controller: page through pending items, submit decisions, keep
 * progress visible, and survive flaky networks and review conflicts.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Decision, ReviewItem, Score } from "./api.js";
import { renderEmpty, renderItem, renderNotice, renderStatus } from "./view.js";

export class ReviewApp {
  private queue: ReviewItem[] = [];
  private position = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly reviewerId: string,
    private readonly kind?: "seed_candidate" | "rewrite_confirm" | "eval_score",
  ) {}

  current(): ReviewItem | null {
    return this.queue[this.position] ?? null;
  }

  async refresh(): Promise<void> {
    await this.api.flushParked();
    this.queue = await this.api.pending(this.kind, undefined, this.reviewerId);
    this.position = 0;
    await this.render();
  }

  async render(notice?: string): Promise<void> {
    this.root.replaceChildren();
    let stats = { reviewed: 0, pending: this.queue.length };
    try {
      stats = await this.api.stats();
    } catch {
      // status bar degrades silently when the service is unreachable
    }
    this.root.appendChild(renderStatus(stats, this.api.parkedCount()));
    if (notice) this.root.appendChild(renderNotice(notice));
    const item = this.current();
    this.root.appendChild(
      item === null
        ? renderEmpty()
        : renderItem(item, {
            accept: () => void this.submit({ action: "accept" }),
            reject: () => void this.submit({ action: "reject" }),
            edit: (output) =>
              void this.submit({ action: "edit", edited_payload: { output } }),
            score: (level) => void this.submit({ action: "accept", score: level }),
            skip: () => void this.advance(),
          }),
    );
  }

  async submit(
    partial: Pick<Decision, "action"> & Partial<Pick<Decision, "edited_payload" | "score">>,
  ): Promise<void> {
    const item = this.current();
    if (!item) return;
    const decision: Decision = {
      item_id: item.item_id,
      reviewer_id: this.reviewerId,
      ...partial,
    };
    try {
      const result = await this.api.decide(decision);
      this.queue.splice(this.position, 1);
      if (this.position >= this.queue.length) this.position = 0;
      await this.render(result.durable ? undefined : "offline: decision queued for retry");
    } catch (error) {
      if (error instanceof ApiError && error.conflict) {
        // Someone else got there first; drop the stale view and reload.
        await this.refresh();
        await this.render("item was already decided elsewhere — queue refreshed");
        return;
      }
      await this.render(`decision rejected: ${(error as Error).message}`);
    }
  }

  async advance(): Promise<void> {
    if (this.queue.length === 0) return;
    this.position = (this.position + 1) % this.queue.length;
    await this.render();
  }

  handleKey(key: string): void {
    const item = this.current();
    if (!item) return;
    if (item.kind === "eval_score") {
      const levels: Score[] = ["correct", "partial", "wrong"];
      const index = Number.parseInt(key, 10) - 1;
      if (index >= 0 && index < levels.length) {
        void this.submit({ action: "accept", score: levels[index] });
      }
    } else {
      if (key === "a") void this.submit({ action: "accept" });
      if (key === "r") void this.submit({ action: "reject" });
    }
    if (key === "s") void this.advance();
  }
}

export async function boot(
  root: HTMLElement,
  base = "",
  reviewerId?: string,
): Promise<ReviewApp> {
  const stored = globalThis.localStorage?.getItem("editforge-reviewer") ?? "";
  const reviewer = reviewerId ?? (stored || `reviewer-${Math.random().toString(36).slice(2, 8)}`);
  globalThis.localStorage?.setItem("editforge-reviewer", reviewer);
  const params = new URLSearchParams(globalThis.location?.search ?? "");
  const kindParam = params.get("kind") as
    | "seed_candidate"
    | "rewrite_confirm"
    | "eval_score"
    | null;
  const app = new ReviewApp(root, new ApiClient(base), reviewer, kindParam ?? undefined);
  document.addEventListener("keydown", (event) => {
    if ((event.target as HTMLElement | null)?.tagName === "TEXTAREA") return;
    app.handleKey(event.key);
  });
  await app.refresh();
  return app;
}
