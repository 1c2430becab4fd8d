import { describe, expect, it } from "vitest";

import { FLAG_CODES, isFlag } from "../src/flags";
import { SCHEMA_ATTRIBUTES, collect, respondToSeed } from "../src/collect";

describe("collect", () => {
  it("is schema-complete under a 1 ms deadline", async () => {
    const payload = await collect(1);
    expect(Object.keys(payload.attrs).sort()).toEqual(
      [...SCHEMA_ATTRIBUTES].sort()
    );
    // Every value is either concrete or one of the four flag codes.
    for (const [name, value] of Object.entries(payload.attrs)) {
      if (isFlag(value)) {
        expect(FLAG_CODES).toContain(value.flag);
      } else {
        expect(["string", "number", "boolean", "object"]).toContain(typeof value);
      }
      expect(SCHEMA_ATTRIBUTES).toContain(name);
    }
  });

  it("honors the deadline within the grace budget", async () => {
    const deadline = 50;
    const start = Date.now();
    const payload = await collect(deadline);
    const wall = Date.now() - start;
    expect(wall).toBeLessThanOrEqual(deadline + 250);
    expect(payload.total_ms).toBeLessThanOrEqual(deadline + 250);
    expect(payload.times_ms._total).toBe(payload.total_ms);
  });

  it("yields identical attribute values across two runs in one environment", async () => {
    const first = await collect(5000);
    const second = await collect(5000);
    expect(second.attrs).toEqual(first.attrs);
  });

  it("set attributes are sorted arrays", async () => {
    const payload = await collect(5000);
    for (const name of ["videoCodecs", "audioCodecs", "fonts"]) {
      const value = payload.attrs[name];
      if (!isFlag(value)) {
        expect(Array.isArray(value)).toBe(true);
        expect(value).toEqual([...(value as string[])].sort());
      }
    }
  });

  it("attaches challenge id and response when a challenge is supplied", async () => {
    const payload = await collect(5000, { challengeId: "ch-1", seed: "feed" });
    expect(payload.challenge_id).toBe("ch-1");
    expect(payload.response_hash).toMatch(/^[0-9a-f]{64}$/);
  });

  it("challenge id and response travel together or not at all", async () => {
    // Under a zero deadline the response may or may not beat the timer
    // (the degraded fallback is timerless); the payload must stay paired
    // and schema-complete either way.
    const payload = await collect(0, { challengeId: "ch-1", seed: "feed" });
    expect(payload.challenge_id === undefined).toBe(
      payload.response_hash === undefined
    );
    expect(Object.keys(payload.attrs).sort()).toEqual(
      [...SCHEMA_ATTRIBUTES].sort()
    );
  });
});

describe("respondToSeed", () => {
  it("is deterministic within an environment", async () => {
    expect(await respondToSeed("seed-a")).toBe(await respondToSeed("seed-a"));
  });

  it("distinct seeds produce distinct responses", async () => {
    const hashes = await Promise.all(
      Array.from({ length: 16 }, (_, i) => respondToSeed(`seed-${i}`))
    );
    expect(new Set(hashes).size).toBe(16);
  });
});
