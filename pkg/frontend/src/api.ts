import type {
  CreateRequestResponse,
  EscalateResponse,
  HintType,
  MetaResponse,
  NextCaseResponse,
  Rating,
  RequestStatusResponse,
  StudentHintsResponse,
} from "./types";

/** An API error body: `{"error": {"code": ..., "message": ...}}`. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client over the service API. One instance per role token;
 * `fetchImpl` is injectable so tests can stub the transport.
 */
export class HelpLoopClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async call<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      ...(body !== undefined ? { body: JSON.stringify(body) } : {}),
    };
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (response.status === 204) {
      return null as T;
    }
    const payload = await response.json();
    if (!response.ok) {
      const error = payload?.error ?? {};
      throw new ApiError(
        response.status,
        error.code ?? "unknown_error",
        error.message ?? `request failed with status ${response.status}`,
      );
    }
    return payload as T;
  }

  // -- student ------------------------------------------------------------

  giveConsent(): Promise<{ student_id: string; consent_given: boolean }> {
    return this.call("POST", "/api/consent");
  }

  createHintRequest(input: {
    assignment_id: string;
    question_id: string;
    hint_type: HintType;
    student_comment?: string;
    code_snapshot?: string;
  }): Promise<CreateRequestResponse> {
    return this.call("POST", "/api/hint-request", input);
  }

  requestStatus(requestId: string): Promise<RequestStatusResponse> {
    return this.call("GET", `/api/request-status/${encodeURIComponent(requestId)}`);
  }

  rateHint(hintId: string, rating: Rating): Promise<unknown> {
    return this.call("POST", "/api/rating", { hint_id: hintId, rating });
  }

  escalateHint(hintId: string, studentNote?: string): Promise<EscalateResponse> {
    return this.call("POST", "/api/escalation", {
      hint_id: hintId,
      student_note: studentNote ?? null,
    });
  }

  studentHints(questionId: string): Promise<StudentHintsResponse> {
    return this.call(
      "GET",
      `/api/student-hints?question_id=${encodeURIComponent(questionId)}`,
    );
  }

  // -- instructor ----------------------------------------------------------

  /** Claim the oldest unresolved case, or null when the queue is empty. */
  nextCase(): Promise<NextCaseResponse | null> {
    return this.call("GET", "/api/instructor/next");
  }

  submitFeedback(escalationId: string, text: string): Promise<unknown> {
    return this.call("POST", "/api/instructor/feedback", {
      escalation_id: escalationId,
      text,
    });
  }

  releaseCase(escalationId: string): Promise<unknown> {
    return this.call("POST", "/api/instructor/release", {
      escalation_id: escalationId,
    });
  }

  // -- operations ----------------------------------------------------------

  meta(): Promise<MetaResponse> {
    return this.call("GET", "/api/meta");
  }

  health(): Promise<{ status: string; events: number }> {
    return this.call("GET", "/api/health");
  }
}
