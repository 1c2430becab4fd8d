// Client for the authentication service's JSON API.
//
// Challenge submissions are never silently retried: a failed POST surfaces
// to the caller so a consumed or pending challenge is not replayed.

import { collect, CollectionPayload, respondToSeed } from "./collect";
import { randomSeed } from "./hash";

export interface EnrollResult {
  account_id: string;
  browser_id: string;
  registration_codes: string[];
  recovery_code: string;
  challenges_provisioned: number;
}

export interface ChallengeResult {
  outcome: string;
  browser_id?: string;
  challenge_id?: string;
  seed?: string;
}

export interface AuthResult {
  outcome: string;
  matched_browser_id?: string | null;
  match_count?: number;
}

export interface ProvisionedResponse {
  seed: string;
  response_hash: string;
}

export class ApiError extends Error {
  constructor(public status: number, public body: unknown) {
    super(`API error ${status}`);
  }
}

async function post<T>(base: string, path: string, payload: unknown): Promise<T> {
  const response = await fetch(base + path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, body);
  }
  return body as T;
}

// Pre-compute responses to freshly drawn random seeds; the server stores
// the hashes and later challenges us with one seed at a time.
export async function provisionResponses(count: number): Promise<ProvisionedResponse[]> {
  const out: ProvisionedResponse[] = [];
  for (let i = 0; i < count; i++) {
    const seed = randomSeed();
    out.push({ seed, response_hash: await respondToSeed(seed) });
  }
  return out;
}

export interface ClientOptions {
  base?: string;
  deadlineMs?: number;
  provisionCount?: number;
}

export class AuthClient {
  readonly base: string;
  readonly deadlineMs: number;
  readonly provisionCount: number;

  constructor(options: ClientOptions = {}) {
    this.base = options.base ?? "";
    this.deadlineMs = options.deadlineMs ?? 8000;
    this.provisionCount = options.provisionCount ?? 8;
  }

  async enroll(accountId: string, password: string): Promise<EnrollResult> {
    const payload = await collect(this.deadlineMs);
    const responses = await provisionResponses(this.provisionCount);
    return post<EnrollResult>(this.base, "/api/enroll", {
      account_id: accountId,
      password,
      fingerprint: payload.attrs,
      challenge_responses: responses,
    });
  }

  async requestChallenge(accountId: string, browserId?: string): Promise<ChallengeResult> {
    return post<ChallengeResult>(this.base, "/api/challenge", {
      account_id: accountId,
      browser_id: browserId,
    });
  }

  async login(
    accountId: string,
    password: string,
    browserId?: string
  ): Promise<{ decision: AuthResult; payload: CollectionPayload }> {
    const challenge = await this.requestChallenge(accountId, browserId);
    const withChallenge =
      challenge.outcome === "ok" && challenge.challenge_id && challenge.seed
        ? { challengeId: challenge.challenge_id, seed: challenge.seed }
        : undefined;
    const payload = await collect(this.deadlineMs, withChallenge);
    const replenish = withChallenge ? await provisionResponses(1) : [];
    try {
      const decision = await post<AuthResult>(this.base, "/api/authenticate", {
        account_id: accountId,
        password,
        fingerprint: payload.attrs,
        challenge_id: payload.challenge_id,
        response_hash: payload.response_hash,
        replenish,
      });
      return { decision, payload };
    } catch (error) {
      // Rejections and lockouts arrive as 401/423 with a decision body.
      if (error instanceof ApiError && typeof error.body === "object" && error.body) {
        const body = error.body as AuthResult;
        if (body.outcome) {
          return { decision: body, payload };
        }
      }
      throw error;
    }
  }

  async recover(
    accountId: string,
    recoveryCode: string,
    browserId: string
  ): Promise<AuthResult> {
    const payload = await collect(this.deadlineMs);
    const responses = await provisionResponses(this.provisionCount);
    return post<AuthResult>(this.base, "/api/recover", {
      account_id: accountId,
      recovery_code: recoveryCode,
      browser_id: browserId,
      fingerprint: payload.attrs,
      challenge_responses: responses,
    });
  }

  async registerBrowser(accountId: string, code: string): Promise<unknown> {
    const payload = await collect(this.deadlineMs);
    const responses = await provisionResponses(this.provisionCount);
    return post(this.base, "/api/browser/register", {
      account_id: accountId,
      code,
      fingerprint: payload.attrs,
      challenge_responses: responses,
    });
  }
}
