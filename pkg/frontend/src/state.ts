/**
 * Session state machine for the judging flow.
 *
 * A pure reducer so every transition is unit-testable without a DOM.
 * The state never holds more than the current task plus session info;
 * quotas, shuffling and vote history live on the server.
 */

import type { TaskView } from "./api.js";

export const DUPLICATE_NOTICE =
  "You already voted on this image; moving to the next one.";
export const EXPIRED_NOTICE =
  "That task expired on the server; here is a fresh one.";

export type SessionState =
  | { kind: "loading"; votesCast: number }
  | {
      kind: "task";
      task: TaskView;
      selected: string | null;
      inFlight: boolean;
      notice: string | null;
      error: string | null;
      votesCast: number;
    }
  | { kind: "done"; votesCast: number }
  | { kind: "error"; message: string; votesCast: number };

export type SessionEvent =
  | {
      type: "task-loaded";
      task: TaskView | null;
      notice?: string | null;
      voteCounted?: boolean;
    }
  | { type: "select"; key: string }
  | { type: "submit-started" }
  | { type: "submit-failed"; message: string }
  | { type: "load-failed"; message: string }
  | { type: "retry" };

export const INITIAL_STATE: SessionState = { kind: "loading", votesCast: 0 };

/** True when submitting is allowed: exactly one option picked, no request in flight. */
export function canSubmit(state: SessionState): boolean {
  return state.kind === "task" && state.selected !== null && !state.inFlight;
}

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.type) {
    case "task-loaded": {
      const total = state.votesCast + (event.voteCounted ? 1 : 0);
      if (event.task === null) {
        return { kind: "done", votesCast: total };
      }
      return {
        kind: "task",
        task: event.task,
        selected: null,
        inFlight: false,
        notice: event.notice ?? null,
        error: null,
        votesCast: total,
      };
    }
    case "select": {
      if (state.kind !== "task" || state.inFlight) return state;
      const known = state.task.options.some((o) => o.key === event.key);
      if (!known) return state;
      // Single-choice control: picking an option replaces the previous pick.
      return { ...state, selected: event.key, notice: null };
    }
    case "submit-started": {
      if (!canSubmit(state) || state.kind !== "task") return state;
      return { ...state, inFlight: true, notice: null, error: null };
    }
    case "submit-failed": {
      if (state.kind !== "task") return state;
      // The vote is not marked done: selection stays, submit re-enables,
      // and the banner tells the worker to try again.
      return { ...state, inFlight: false, error: event.message };
    }
    case "load-failed": {
      return { kind: "error", message: event.message, votesCast: state.votesCast };
    }
    case "retry": {
      if (state.kind !== "error") return state;
      return { kind: "loading", votesCast: state.votesCast };
    }
  }
}
