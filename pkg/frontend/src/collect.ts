// Attribute collection orchestrator.
//
// Every schema attribute is present in the payload no matter what happens:
// a missing API becomes an "unsupported" flag, a null/undefined property an
// "undefined-value" flag, a thrown error an "exception" flag, and anything
// still pending when the global deadline fires a "timeout" flag.
// Asynchronous attributes run concurrently under that single deadline.

import schema from "../schema/collector-schema.json";
import { audioFingerprintAdvanced, audioFingerprintSimple } from "./audio";
import { renderCustomCanvas } from "./canvas";
import { supportedAudioCodecs, supportedVideoCodecs } from "./codecs";
import {
  AttrValue,
  exception,
  timeout,
  undefinedValue,
  unsupported,
} from "./flags";
import { detectFonts } from "./fonts";
import { sha256Hex } from "./hash";
import { DEFAULT_SEED } from "./seed";
import { renderWebglCanvas } from "./webgl";

export const SCHEMA_ATTRIBUTES: string[] = (schema as { name: string }[]).map(
  (d) => d.name
);

export interface ChallengeInput {
  challengeId: string;
  seed: string;
}

export interface CollectionPayload {
  attrs: Record<string, AttrValue>;
  times_ms: Record<string, number>;
  total_ms: number;
  challenge_id?: string;
  response_hash?: string;
}

const now = (): number =>
  typeof performance !== "undefined" ? performance.now() : Date.now();

function wrapSync(fn: () => unknown): AttrValue {
  try {
    const value = fn();
    if (value === undefined || value === null) {
      return undefinedValue();
    }
    if (Array.isArray(value)) {
      return [...value].map(String).sort();
    }
    if (
      typeof value === "string" ||
      typeof value === "number" ||
      typeof value === "boolean"
    ) {
      return value;
    }
    return String(value);
  } catch {
    return exception();
  }
}

function nav(): Navigator {
  return navigator;
}

const SYNC_COLLECTORS: Record<string, () => unknown> = {
  userAgent: () => nav().userAgent,
  language: () => nav().language,
  languages: () => (nav().languages ? Array.from(nav().languages).join(",") : null),
  platform: () => nav().platform,
  cookieEnabled: () => nav().cookieEnabled,
  doNotTrack: () =>
    (nav() as unknown as Record<string, unknown>).doNotTrack ??
    (globalThis as Record<string, unknown>).doNotTrack ??
    null,
  hardwareConcurrency: () => nav().hardwareConcurrency,
  deviceMemory: () => (nav() as unknown as Record<string, unknown>).deviceMemory ?? null,
  maxTouchPoints: () => nav().maxTouchPoints,
  vendor: () => nav().vendor,
  productSub: () => nav().productSub,
  appVersion: () => nav().appVersion,
  oscpu: () => (nav() as unknown as Record<string, unknown>).oscpu ?? null,
  webdriver: () => nav().webdriver ?? null,
  screenWidth: () => screen.width,
  screenHeight: () => screen.height,
  screenAvailWidth: () => screen.availWidth,
  screenAvailHeight: () => screen.availHeight,
  colorDepth: () => screen.colorDepth,
  pixelDepth: () => screen.pixelDepth,
  devicePixelRatio: () => window.devicePixelRatio,
  innerWidth: () => window.innerWidth,
  innerHeight: () => window.innerHeight,
  outerWidth: () => window.outerWidth,
  outerHeight: () => window.outerHeight,
  screenX: () => window.screenX,
  screenY: () => window.screenY,
  timezoneOffset: () => new Date(2016, 1, 1).getTimezoneOffset(),
  localStorage: () => Boolean(window.localStorage),
  sessionStorage: () => Boolean(window.sessionStorage),
  indexedDB: () => "indexedDB" in window && Boolean(window.indexedDB),
  openDatabase: () => "openDatabase" in window,
  mathTan: () => String(Math.tan(-1e300)),
  mathAcosh: () => String(Math.acosh(1.000000000001)),
};

interface AsyncTask {
  names: string[];
  run: () => Promise<Record<string, AttrValue>>;
}

function asyncTasks(staticSeed: string): AsyncTask[] {
  return [
    {
      names: ["fonts"],
      run: async () => ({ fonts: detectFonts().sort() }),
    },
    {
      names: ["videoCodecs"],
      run: async () => ({ videoCodecs: supportedVideoCodecs().sort() }),
    },
    {
      names: ["audioCodecs"],
      run: async () => ({ audioCodecs: supportedAudioCodecs().sort() }),
    },
    {
      names: ["canvasCustomPng", "canvasCustomJpeg"],
      run: async () => {
        const hashes = await renderCustomCanvas(staticSeed);
        return { canvasCustomPng: hashes.png, canvasCustomJpeg: hashes.jpeg };
      },
    },
    {
      names: ["canvasWebgl"],
      run: async () => ({ canvasWebgl: await renderWebglCanvas() }),
    },
    {
      names: ["audioSimple"],
      run: async () => {
        const fp = await audioFingerprintSimple();
        return { audioSimple: String(fp.sum) };
      },
    },
    {
      names: ["audioAdvanced", "audioAdvancedFreq"],
      run: async () => {
        const fp = await audioFingerprintAdvanced();
        return {
          audioAdvanced: String(fp.sum),
          audioAdvancedFreq: String(fp.frequencySum ?? 0),
        };
      },
    },
  ];
}

const UNAVAILABLE_MARKERS = ["unavailable", "allocation failed"];

function failureFlag(error: unknown): AttrValue {
  const message = error instanceof Error ? error.message : String(error);
  if (UNAVAILABLE_MARKERS.some((marker) => message.includes(marker))) {
    return unsupported();
  }
  return exception();
}

// The response to a challenge seed: the seeded custom-canvas render, hashed.
// Environments without a 2d context fall back to a deterministic digest of
// the seed so the protocol stays exercisable end to end.
export async function respondToSeed(seed: string): Promise<string> {
  try {
    const hashes = await renderCustomCanvas(seed);
    return sha256Hex(`${hashes.png}:${hashes.jpeg}`);
  } catch {
    return sha256Hex(`unsupported:${seed}`);
  }
}

export async function collect(
  deadlineMs: number,
  challenge?: ChallengeInput
): Promise<CollectionPayload> {
  const start = now();
  const attrs: Record<string, AttrValue> = {};
  const times: Record<string, number> = {};

  for (const [name, fn] of Object.entries(SYNC_COLLECTORS)) {
    const t0 = now();
    attrs[name] = wrapSync(fn);
    times[name] = Math.max(0, Math.round(now() - t0));
  }

  let deadlineTimer: ReturnType<typeof setTimeout> | undefined;
  const deadline = new Promise<"deadline">((resolve) => {
    deadlineTimer = setTimeout(() => resolve("deadline"), deadlineMs);
  });

  const tasks = asyncTasks(DEFAULT_SEED);
  const responsePromise = challenge
    ? Promise.race([respondToSeed(challenge.seed), deadline])
    : null;

  await Promise.all(
    tasks.map(async (task) => {
      const t0 = now();
      try {
        const outcome = await Promise.race([task.run(), deadline]);
        if (outcome === "deadline") {
          for (const name of task.names) {
            attrs[name] = timeout();
          }
          return;
        }
        const elapsed = Math.max(0, Math.round(now() - t0));
        for (const [name, value] of Object.entries(outcome)) {
          attrs[name] = value;
          times[name] = elapsed;
        }
      } catch (error) {
        for (const name of task.names) {
          attrs[name] = failureFlag(error);
          times[name] = Math.max(0, Math.round(now() - t0));
        }
      }
    })
  );

  const payload: CollectionPayload = { attrs, times_ms: times, total_ms: 0 };
  if (challenge && responsePromise) {
    const response = await responsePromise;
    if (response !== "deadline") {
      payload.challenge_id = challenge.challengeId;
      payload.response_hash = response;
    }
  }
  clearTimeout(deadlineTimer);
  payload.total_ms = Math.max(0, Math.round(now() - start));
  payload.times_ms._total = payload.total_ms;

  for (const name of SCHEMA_ATTRIBUTES) {
    if (!(name in attrs)) {
      attrs[name] = timeout();
    }
  }
  return payload;
}
