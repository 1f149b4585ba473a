/**
 * DOM rendering for one review item: instruction, scenario, side-by-side
 * diff with set-semantics highlighting, badges, and per-kind controls.
 *
 * eval_score views render only the whitelisted payload fields, so no model
 * identity can reach the DOM, and expose exactly the three scoring levels.
 */

import { alignLines, lineSetStats } from "./diff.js";
import type { ReviewItem, Score } from "./api.js";

export const SCORE_LEVELS: Score[] = ["correct", "partial", "wrong"];

export interface ViewActions {
  accept(): void;
  reject(): void;
  edit(editedOutput: string): void;
  score(level: Score): void;
  skip(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderDiff(inputCode: string, outputCode: string): HTMLElement {
  const container = el("div", "diff");
  const stats = lineSetStats(inputCode, outputCode);
  const badges = el("div", "badges");
  badges.appendChild(el("span", "badge", `n_diff ${stats.nDiff}`));
  badges.appendChild(el("span", "badge", `r_diff ${stats.rDiff.toFixed(2)}`));
  container.appendChild(badges);

  const table = el("table", "diff-table");
  for (const row of alignLines(inputCode, outputCode)) {
    const tr = el("tr");
    const left = el("td", row.leftChanged ? "pane changed" : "pane");
    left.textContent = row.left ?? "";
    const right = el("td", row.rightChanged ? "pane changed" : "pane");
    right.textContent = row.right ?? "";
    tr.appendChild(left);
    tr.appendChild(right);
    table.appendChild(tr);
  }
  container.appendChild(table);
  return container;
}

export function renderItem(item: ReviewItem, actions: ViewActions): HTMLElement {
  const root = el("section", `item kind-${item.kind}`);
  root.dataset.itemId = item.item_id;

  const header = el("header");
  header.appendChild(el("span", "kind", item.kind.replace("_", " ")));
  header.appendChild(el("h2", "instruction", item.payload.instruction));
  if (item.payload.scenario) {
    header.appendChild(el("p", "scenario", item.payload.scenario));
  }
  if (item.kind === "rewrite_confirm" && item.payload.original_message) {
    header.appendChild(
      el("p", "original-message", `original commit message: ${item.payload.original_message}`),
    );
  }
  root.appendChild(header);

  const rightPane =
    item.kind === "eval_score" ? item.payload.model_output : item.payload.output;
  root.appendChild(renderDiff(item.payload.input, rightPane));

  root.appendChild(
    item.kind === "eval_score" ? scoreControls(actions) : decisionControls(item, actions),
  );
  return root;
}

function decisionControls(item: ReviewItem, actions: ViewActions): HTMLElement {
  const bar = el("div", "controls");
  const accept = el("button", "accept", "accept [a]");
  accept.addEventListener("click", () => actions.accept());
  const reject = el("button", "reject", "reject [r]");
  reject.addEventListener("click", () => actions.reject());
  const edit = el("button", "edit", "edit [e]");
  const editor = el("textarea", "editor");
  editor.value = item.payload.output;
  editor.hidden = true;
  const submitEdit = el("button", "submit-edit", "submit edit");
  submitEdit.hidden = true;
  edit.addEventListener("click", () => {
    editor.hidden = false;
    submitEdit.hidden = false;
    editor.focus();
  });
  submitEdit.addEventListener("click", () => actions.edit(editor.value));
  const skip = el("button", "skip", "skip [s]");
  skip.addEventListener("click", () => actions.skip());
  for (const node of [accept, reject, edit, skip, editor, submitEdit]) {
    bar.appendChild(node);
  }
  return bar;
}

function scoreControls(actions: ViewActions): HTMLElement {
  const bar = el("div", "controls scoring");
  SCORE_LEVELS.forEach((level, index) => {
    const button = el("button", `score score-${level}`, `${level} [${index + 1}]`);
    button.addEventListener("click", () => actions.score(level));
    bar.appendChild(button);
  });
  const skip = el("button", "skip", "skip [s]");
  skip.addEventListener("click", () => actions.skip());
  bar.appendChild(skip);
  return bar;
}

export function renderStatus(stats: { reviewed: number; pending: number }, parked: number): HTMLElement {
  const bar = el("div", "status");
  bar.appendChild(el("span", "reviewed", `reviewed ${stats.reviewed}`));
  bar.appendChild(el("span", "pending", `pending ${stats.pending}`));
  if (parked > 0) {
    bar.appendChild(el("span", "parked", `${parked} decision(s) queued offline`));
  }
  return bar;
}

export function renderEmpty(): HTMLElement {
  return el("section", "empty", "queue is empty — nothing pending");
}

export function renderNotice(message: string): HTMLElement {
  return el("div", "notice", message);
}
