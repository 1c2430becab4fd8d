import { describe, expect, it } from "vitest";

import { fold, instructionsFromSeed } from "../src/seed";

describe("seed-to-instructions mapping", () => {
  it("is deterministic", () => {
    const a = instructionsFromSeed("abcdef0123");
    const b = instructionsFromSeed("abcdef0123");
    expect(a).toEqual(b);
  });

  it("distinct seeds spread over distinct instructions", () => {
    const seen = new Set<string>();
    for (let i = 0; i < 256; i++) {
      const inst = instructionsFromSeed(`seed-${i}`);
      seen.add(
        `${inst.suffix}|${inst.gradientFrom}|${inst.gradientTo}|${inst.rotationDeg}`
      );
    }
    // 16 suffixes x 12 colors x 16 rotations: 256 draws should hit many cells.
    expect(seen.size).toBeGreaterThan(150);
  });

  it("never uses the same color for both gradient stops", () => {
    for (let i = 0; i < 500; i++) {
      const inst = instructionsFromSeed(`g${i}`);
      expect(inst.gradientFrom).not.toBe(inst.gradientTo);
    }
  });

  it("embeds the suffix into the rendered text", () => {
    const inst = instructionsFromSeed("whatever");
    expect(inst.text.endsWith(inst.suffix)).toBe(true);
    expect(inst.text).toMatch(/[åäöÅÄÖ]/);
  });

  it("fold is a stable 32-bit hash", () => {
    expect(fold("")).toBe(0x811c9dc5);
    expect(fold("a")).toBe(fold("a"));
    expect(fold("a")).not.toBe(fold("b"));
  });
});
