// Challenge seed -> canvas instruction mapping.
//
// A seed deterministically selects the rendered text suffix, the two
// gradient stops, and the rotation angle from fixed tables, so the server
// can pre-provision expected responses and the challenge space stays
// auditable.

export interface CanvasInstructions {
  text: string;
  suffix: string;
  gradientFrom: string;
  gradientTo: string;
  rotationDeg: number;
}

const BASE_TEXT = "Hur mår du idag? Åsa & Örjan äter smörgås";

const SUFFIXES = [
  "0042", "1789", "2718", "3141", "4669", "5772", "6626", "7297",
  "8854", "9806", "af03", "be19", "c4d7", "d00d", "e5e5", "f00f",
];

const PALETTE = [
  "#ff6600", "#2266ff", "#22cc88", "#cc2266", "#ffee22", "#8822cc",
  "#00ccee", "#ee4400", "#6688aa", "#114488", "#99dd11", "#dd1199",
];

const ROTATIONS = [0, 3, 7, 11, 17, 23, 31, 45, 59, 73, 97, 113, 151, 197, 251, 313];

// FNV-1a; stable across platforms, good enough to spread table indices.
export function fold(seed: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < seed.length; i++) {
    h ^= seed.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

export function instructionsFromSeed(seed: string): CanvasInstructions {
  const h = fold(seed);
  const suffix = SUFFIXES[h % SUFFIXES.length];
  const from = PALETTE[(h >>> 4) % PALETTE.length];
  let toIndex = (h >>> 8) % PALETTE.length;
  if (PALETTE[toIndex] === from) {
    toIndex = (toIndex + 1) % PALETTE.length;
  }
  return {
    text: `${BASE_TEXT} ${suffix}`,
    suffix,
    gradientFrom: from,
    gradientTo: PALETTE[toIndex],
    rotationDeg: ROTATIONS[(h >>> 12) % ROTATIONS.length],
  };
}

// Instructions used for the static fingerprint attributes: fixed, so the
// stored canvas values stay comparable across visits. Challenges use
// per-seed instructions instead.
export const DEFAULT_SEED = "static-fingerprint-v1";
