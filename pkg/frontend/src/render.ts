/**
 * Pure state -> HTML rendering.
 *
 * Returns a markup string so tests can assert on the exact DOM content
 * without a browser. Options render in the exact order the server sent
 * them; nothing here ever sees a model identifier.
 */

import type { SessionState } from "./state.js";
import { canSubmit } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export interface RenderOptions {
  /** Maps an image id to the URL its <img> tag loads from. */
  assetUrl: (imageId: string) => string;
}

export function render(state: SessionState, options: RenderOptions): string {
  switch (state.kind) {
    case "loading":
      return `<p class="status">Loading the next task…</p>`;
    case "error":
      return [
        `<div class="banner banner-error" role="alert">${escapeHtml(state.message)}</div>`,
        `<button type="button" data-action="retry">Retry</button>`,
      ].join("\n");
    case "done":
      return [
        `<div class="complete">`,
        `<h2>All done</h2>`,
        `<p>There are no more images to judge. You rated ${state.votesCast} image${
          state.votesCast === 1 ? "" : "s"
        }. Thank you!</p>`,
        `</div>`,
      ].join("\n");
    case "task":
      return renderTask(state, options);
  }
}

type TaskState = Extract<SessionState, { kind: "task" }>;

function renderTask(state: TaskState, options: RenderOptions): string {
  const parts: string[] = [];
  parts.push(
    `<div class="banner banner-instructions">${escapeHtml(state.task.instructions)}</div>`,
  );
  if (state.notice) {
    parts.push(
      `<div class="banner banner-notice" role="status">${escapeHtml(state.notice)}</div>`,
    );
  }
  if (state.error) {
    parts.push(
      `<div class="banner banner-error" role="alert">${escapeHtml(state.error)}</div>`,
    );
  }
  parts.push(
    `<img class="task-image" src="${escapeHtml(options.assetUrl(state.task.imageId))}" alt="image under evaluation">`,
  );
  parts.push(`<form class="options" data-ballot="${escapeHtml(state.task.ballotId)}">`);
  for (const option of state.task.options) {
    const id = `option-${escapeHtml(option.key)}`;
    const checked = state.selected === option.key ? " checked" : "";
    const disabled = state.inFlight ? " disabled" : "";
    parts.push(`<label class="option-row" for="${id}">`);
    parts.push(
      `<input type="radio" id="${id}" name="choice" value="${escapeHtml(option.key)}"${checked}${disabled}>`,
    );
    parts.push(`<span class="option-text">${escapeHtml(option.text)}</span>`);
    parts.push(`</label>`);
  }
  const submitDisabled = canSubmit(state) ? "" : " disabled";
  parts.push(
    `<button type="submit" data-action="submit"${submitDisabled}>${
      state.inFlight ? "Submitting…" : "Submit vote"
    }</button>`,
  );
  parts.push(`</form>`);
  parts.push(`<p class="progress">Votes cast: ${state.votesCast}</p>`);
  return parts.join("\n");
}
