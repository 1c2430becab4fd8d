import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, AuthClient, provisionResponses } from "../src/api";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("AuthClient", () => {
  it("enroll posts the fingerprint and provisioned responses", async () => {
    const calls: { url: string; body: any }[] = [];
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string, init: RequestInit) => {
        calls.push({ url: String(url), body: JSON.parse(String(init.body)) });
        return jsonResponse(201, {
          account_id: "a",
          browser_id: "b1",
          registration_codes: [],
          recovery_code: "r",
          challenges_provisioned: 2,
        });
      })
    );
    const client = new AuthClient({ base: "http://x", deadlineMs: 50, provisionCount: 2 });
    const result = await client.enroll("a", "pw");
    expect(result.browser_id).toBe("b1");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://x/api/enroll");
    expect(calls[0].body.account_id).toBe("a");
    expect(Object.keys(calls[0].body.fingerprint).length).toBeGreaterThan(40);
    expect(calls[0].body.challenge_responses).toHaveLength(2);
    for (const item of calls[0].body.challenge_responses) {
      expect(item.seed).toMatch(/^[0-9a-f]+$/);
      expect(item.response_hash).toMatch(/^[0-9a-f]{64}$/);
    }
  });

  it("login fetches a challenge then authenticates with its id", async () => {
    const calls: { url: string; body: any }[] = [];
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string, init: RequestInit) => {
        const body = JSON.parse(String(init.body));
        calls.push({ url: String(url), body });
        if (String(url).endsWith("/api/challenge")) {
          return jsonResponse(200, {
            outcome: "ok",
            browser_id: "b1",
            challenge_id: "c9",
            seed: "feed",
          });
        }
        return jsonResponse(200, { outcome: "accepted", match_count: 43 });
      })
    );
    const client = new AuthClient({ base: "http://x", deadlineMs: 50 });
    const { decision } = await client.login("a", "pw", "b1");
    expect(decision.outcome).toBe("accepted");
    expect(calls.map((c) => c.url)).toEqual([
      "http://x/api/challenge",
      "http://x/api/authenticate",
    ]);
    const auth = calls[1].body;
    expect(auth.challenge_id).toBe("c9");
    expect(auth.response_hash).toMatch(/^[0-9a-f]{64}$/);
    expect(auth.replenish).toHaveLength(1);
  });

  it("login surfaces a rejection body instead of retrying", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (String(url).endsWith("/api/challenge")) {
        return jsonResponse(200, {
          outcome: "ok", browser_id: "b1", challenge_id: "c1", seed: "s",
        });
      }
      return jsonResponse(401, { outcome: "rejected" });
    });
    vi.stubGlobal("fetch", fetchMock);
    const client = new AuthClient({ base: "http://x", deadlineMs: 50 });
    const { decision } = await client.login("a", "pw");
    expect(decision.outcome).toBe("rejected");
    // One challenge fetch and exactly one authenticate attempt: replay
    // hygiene means no silent resubmission of the same challenge.
    expect(fetchMock).toHaveBeenCalledTimes(2);
  });

  it("errors without a decision body raise ApiError", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse(500, {})));
    const client = new AuthClient({ base: "http://x", deadlineMs: 50 });
    await expect(client.requestChallenge("a")).rejects.toBeInstanceOf(ApiError);
  });
});

describe("provisionResponses", () => {
  it("produces unique seeds with well-formed hashes", async () => {
    const responses = await provisionResponses(8);
    const seeds = new Set(responses.map((r) => r.seed));
    expect(seeds.size).toBe(8);
    for (const item of responses) {
      expect(item.response_hash).toMatch(/^[0-9a-f]{64}$/);
    }
  });
});
