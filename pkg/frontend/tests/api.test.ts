import { describe, expect, it } from "vitest";

import { ApiError, HelpLoopClient, type FetchLike } from "../src/api";

interface Recorded {
  url: string;
  init?: RequestInit;
}

function stubFetch(
  responses: Array<{ status: number; body?: unknown }>,
): { fetchImpl: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const queue = [...responses];
  const fetchImpl: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const next = queue.shift() ?? { status: 200, body: {} };
    return new Response(
      next.body === undefined ? null : JSON.stringify(next.body),
      { status: next.status },
    );
  };
  return { fetchImpl, calls };
}

describe("HelpLoopClient", () => {
  it("sends the bearer token and JSON body", async () => {
    const { fetchImpl, calls } = stubFetch([
      { status: 201, body: { request: { request_id: "req-1" }, notice: "wait" } },
    ]);
    const client = new HelpLoopClient("http://api", "tok-abc", fetchImpl);

    const created = await client.createHintRequest({
      assignment_id: "a1",
      question_id: "a1-q1",
      hint_type: "debugging",
      code_snapshot: "print(1)",
    });

    expect(created.request.request_id).toBe("req-1");
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe("http://api/api/hint-request");
    const headers = calls[0]!.init?.headers as Record<string, string>;
    expect(headers["Authorization"]).toBe("Bearer tok-abc");
    expect(headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({
      assignment_id: "a1",
      question_id: "a1-q1",
      hint_type: "debugging",
      code_snapshot: "print(1)",
    });
  });

  it("URL-encodes path and query parameters", async () => {
    const { fetchImpl, calls } = stubFetch([
      { status: 200, body: { request_id: "x", status: "created" } },
      { status: 200, body: { question_id: "q", remaining_quota: {}, threads: [] } },
    ]);
    const client = new HelpLoopClient("", "t", fetchImpl);

    await client.requestStatus("req/../1");
    await client.studentHints("a1 q&2");

    expect(calls[0]!.url).toBe("/api/request-status/req%2F..%2F1");
    expect(calls[1]!.url).toBe("/api/student-hints?question_id=a1%20q%262");
  });

  it("maps error bodies onto ApiError with the service code", async () => {
    const { fetchImpl } = stubFetch([
      {
        status: 429,
        body: { error: { code: "quota_exceeded", message: "no slots left" } },
      },
    ]);
    const client = new HelpLoopClient("", "t", fetchImpl);

    const failure = await client
      .createHintRequest({
        assignment_id: "a1",
        question_id: "a1-q1",
        hint_type: "debugging",
      })
      .then(
        () => null,
        (error: unknown) => error,
      );

    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(429);
    expect((failure as ApiError).code).toBe("quota_exceeded");
    expect((failure as ApiError).message).toBe("no slots left");
  });

  it("treats 204 from the instructor queue as null", async () => {
    const { fetchImpl } = stubFetch([{ status: 204 }]);
    const client = new HelpLoopClient("", "t", fetchImpl);

    expect(await client.nextCase()).toBeNull();
  });

  it("falls back to a generic code when the error body is malformed", async () => {
    const { fetchImpl } = stubFetch([{ status: 500, body: { oops: true } }]);
    const client = new HelpLoopClient("", "t", fetchImpl);

    const failure = await client.health().then(
      () => null,
      (error: unknown) => error as ApiError,
    );

    expect(failure?.code).toBe("unknown_error");
    expect(failure?.status).toBe(500);
  });
});
