/**
 * HTTP client for the caption study API.
 *
 * The backend is the single source of truth: it shuffles options, enforces
 * quotas and keeps the model identities. This client only moves blinded
 * payloads; it never sees or stores a model name.
 */

export interface CaptionOption {
  key: string;
  text: string;
}

export interface TaskView {
  ballotId: string;
  imageId: string;
  imageUri: string;
  options: CaptionOption[];
  instructions: string;
}

export interface SessionInfo {
  worker: string;
  workerClass: "generic" | "expert";
}

export type VoteOutcome = "recorded" | "duplicate" | "expired";

/** Instruction banner shown with every task. */
export const INSTRUCTIONS =
  "Choose the caption that accurately describes the image, is grammatically " +
  "correct, contains no incorrect information, is relevant to the image, " +
  "and is human-like.";

/** Server answered with a non-success status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Request never reached the server (or the reply never arrived). */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** What the controller needs from a study backend. */
export interface StudyClient {
  assetUrl(imageId: string): string;
  fetchTask(session: SessionInfo): Promise<TaskView | null>;
  submitVote(ballotId: string, choice: string): Promise<VoteOutcome>;
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") return body.error;
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON body: fall through to the status line
  }
  return `unexpected server response (${response.status})`;
}

export class StudyApi implements StudyClient {
  private readonly base: string;

  constructor(
    baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  /** URL the <img> tag should load; the server resolves paths/redirects. */
  assetUrl(imageId: string): string {
    return `${this.base}/assets/${encodeURIComponent(imageId)}`;
  }

  async health(): Promise<{ status: string; images: number }> {
    const response = await this.request("/api/health");
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.json();
  }

  /**
   * Fetch the next task for the session. Resolves to null when the queue
   * is exhausted (HTTP 204).
   */
  async fetchTask(session: SessionInfo): Promise<TaskView | null> {
    const query = new URLSearchParams({
      worker: session.worker,
      class: session.workerClass,
    });
    const response = await this.request(`/api/task?${query}`);
    if (response.status === 204) return null;
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return parseTask(await response.json());
  }

  /**
   * Submit the chosen option. Duplicate votes (409) and expired ballots
   * (410) are normal outcomes for the UI, not exceptions; anything else
   * non-2xx throws ApiError.
   */
  async submitVote(ballotId: string, choice: string): Promise<VoteOutcome> {
    const response = await this.request("/api/vote", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ballot_id: ballotId, choice }),
    });
    if (response.ok) return "recorded";
    if (response.status === 409) return "duplicate";
    if (response.status === 410) return "expired";
    throw new ApiError(response.status, await errorMessage(response));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    try {
      return await this.fetchFn(`${this.base}${path}`, init);
    } catch (cause) {
      const reason = cause instanceof Error ? cause.message : String(cause);
      throw new NetworkError(`could not reach the study server: ${reason}`);
    }
  }
}

function parseTask(body: unknown): TaskView {
  if (typeof body !== "object" || body === null) {
    throw new ApiError(200, "malformed task payload");
  }
  const record = body as Record<string, unknown>;
  const ballotId = record["ballot_id"];
  const imageId = record["image_id"];
  const imageUri = record["image_uri"];
  const rawOptions = record["options"];
  if (
    typeof ballotId !== "string" ||
    typeof imageId !== "string" ||
    typeof imageUri !== "string" ||
    !Array.isArray(rawOptions) ||
    rawOptions.length === 0
  ) {
    throw new ApiError(200, "malformed task payload");
  }
  const options: CaptionOption[] = rawOptions.map((item) => {
    const option = item as Record<string, unknown>;
    const key = option["option_key"];
    const text = option["text"];
    if (typeof key !== "string" || typeof text !== "string") {
      throw new ApiError(200, "malformed task option");
    }
    return { key, text };
  });
  return { ballotId, imageId, imageUri, options, instructions: INSTRUCTIONS };
}
