/**
 * Drives the session: sequences API calls and folds outcomes into the
 * state machine. At most one request is in flight at any time; user
 * actions arriving while busy are dropped, never queued, so a vote can
 * never be sent twice without a fresh click.
 */

import { ApiError, NetworkError } from "./api.js";
import type { SessionInfo, StudyClient, VoteOutcome } from "./api.js";
import {
  DUPLICATE_NOTICE,
  EXPIRED_NOTICE,
  INITIAL_STATE,
  canSubmit,
  reduce,
} from "./state.js";
import type { SessionEvent, SessionState } from "./state.js";

export class JudgeController {
  private state: SessionState = INITIAL_STATE;
  private busy = false;

  constructor(
    private readonly api: StudyClient,
    private readonly session: SessionInfo,
    private readonly onChange: (state: SessionState) => void = () => {},
  ) {}

  getState(): SessionState {
    return this.state;
  }

  private apply(event: SessionEvent): void {
    this.state = reduce(this.state, event);
    this.onChange(this.state);
  }

  /** Load the first (or next, after an error) task. */
  async start(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    if (this.state.kind === "error") this.apply({ type: "retry" });
    try {
      const task = await this.api.fetchTask(this.session);
      this.apply({ type: "task-loaded", task });
    } catch (cause) {
      this.apply({ type: "load-failed", message: describe(cause) });
    } finally {
      this.busy = false;
    }
  }

  /** Pick an option; replaces any previous pick. Ignored mid-flight. */
  select(key: string): void {
    if (this.busy) return;
    this.apply({ type: "select", key });
  }

  /**
   * Submit the selected option, then advance to the next task. A 409 or
   * 410 shows its notice and still advances; the vote is never re-sent
   * automatically. On failure the task stays on screen with the
   * selection intact so the worker can retry by hand.
   */
  async submit(): Promise<void> {
    if (this.busy || !canSubmit(this.state) || this.state.kind !== "task") {
      return;
    }
    const { task, selected } = this.state;
    if (selected === null) return;
    this.busy = true;
    this.apply({ type: "submit-started" });
    let outcome: VoteOutcome;
    try {
      outcome = await this.api.submitVote(task.ballotId, selected);
    } catch (cause) {
      this.apply({ type: "submit-failed", message: describe(cause) });
      this.busy = false;
      return;
    }
    const notice =
      outcome === "duplicate"
        ? DUPLICATE_NOTICE
        : outcome === "expired"
          ? EXPIRED_NOTICE
          : null;
    try {
      const next = await this.api.fetchTask(this.session);
      this.apply({
        type: "task-loaded",
        task: next,
        notice,
        voteCounted: outcome === "recorded",
      });
    } catch (cause) {
      this.apply({ type: "load-failed", message: describe(cause) });
    } finally {
      this.busy = false;
    }
  }
}

function describe(cause: unknown): string {
  if (cause instanceof NetworkError) return cause.message;
  if (cause instanceof ApiError) {
    return `the server rejected the request: ${cause.message}`;
  }
  return cause instanceof Error ? cause.message : String(cause);
}
