// Web Audio fingerprints rendered offline.
//
// Simple network: three oscillators into one dynamics compressor into the
// destination; the triangle starts at t=0, the square at t=0.10s, the
// triangle stops and the sine starts at t=0.20s, the square stops at t=0.25s.
//
// Advanced network: four oscillators through two biquad filters and two
// panners into a compressor, with an analyser tap; the triangle and the
// 280Hz sine start at t=0, the square at t=0.05s, the triangle stops at
// t=0.10s, the 170Hz sine stops at t=0.15s, the square stops at t=0.20s.

export interface AudioFingerprint {
  sum: number;
  frequencySum?: number;
}

type OfflineCtor = typeof OfflineAudioContext;

function offlineContextClass(): OfflineCtor | null {
  const w = globalThis as Record<string, unknown>;
  return (
    (w.OfflineAudioContext as OfflineCtor | undefined) ||
    (w.webkitOfflineAudioContext as OfflineCtor | undefined) ||
    null
  );
}

function absoluteSum(buffer: AudioBuffer): number {
  const data = buffer.getChannelData(0);
  let sum = 0;
  for (let i = 0; i < data.length; i++) {
    sum += Math.abs(data[i]);
  }
  return sum;
}

export async function audioFingerprintSimple(): Promise<AudioFingerprint> {
  const Offline = offlineContextClass();
  if (!Offline) {
    throw new Error("OfflineAudioContext unavailable");
  }
  const ctx = new Offline(1, 44100 * 0.3, 44100);
  const compressor = ctx.createDynamicsCompressor();
  compressor.connect(ctx.destination);

  const triangle = ctx.createOscillator();
  triangle.type = "triangle";
  triangle.frequency.value = 10000;
  const square = ctx.createOscillator();
  square.type = "square";
  square.frequency.value = 7000;
  const sine = ctx.createOscillator();
  sine.type = "sine";
  sine.frequency.value = 4000;
  for (const node of [triangle, square, sine]) {
    node.connect(compressor);
  }
  triangle.start(0);
  square.start(0.1);
  triangle.stop(0.2);
  sine.start(0.2);
  square.stop(0.25);
  sine.stop(0.3);

  const rendered = await ctx.startRendering();
  return { sum: absoluteSum(rendered) };
}

export async function audioFingerprintAdvanced(): Promise<AudioFingerprint> {
  const Offline = offlineContextClass();
  if (!Offline) {
    throw new Error("OfflineAudioContext unavailable");
  }
  const ctx = new Offline(1, 44100 * 0.25, 44100);
  const compressor = ctx.createDynamicsCompressor();
  const analyser = ctx.createAnalyser();
  compressor.connect(analyser);
  analyser.connect(ctx.destination);

  const lowpass = ctx.createBiquadFilter();
  lowpass.type = "lowpass";
  lowpass.frequency.value = 8000;
  const highpass = ctx.createBiquadFilter();
  highpass.type = "highpass";
  highpass.frequency.value = 150;
  const panLeft = ctx.createPanner();
  const panRight = ctx.createPanner();
  panLeft.setPosition(-1, 0, 0);
  panRight.setPosition(1, 0, 0);
  lowpass.connect(panLeft);
  highpass.connect(panRight);
  panLeft.connect(compressor);
  panRight.connect(compressor);

  const triangle = ctx.createOscillator();
  triangle.type = "triangle";
  triangle.frequency.value = 6500;
  const sine280 = ctx.createOscillator();
  sine280.type = "sine";
  sine280.frequency.value = 280;
  const square = ctx.createOscillator();
  square.type = "square";
  square.frequency.value = 5500;
  const sine170 = ctx.createOscillator();
  sine170.type = "sine";
  sine170.frequency.value = 170;
  triangle.connect(lowpass);
  square.connect(lowpass);
  sine280.connect(highpass);
  sine170.connect(highpass);

  triangle.start(0);
  sine280.start(0);
  sine170.start(0);
  square.start(0.05);
  triangle.stop(0.1);
  sine170.stop(0.15);
  square.stop(0.2);
  sine280.stop(0.25);

  const rendered = await ctx.startRendering();
  const frequencies = new Float32Array(analyser.frequencyBinCount);
  analyser.getFloatFrequencyData(frequencies);
  let frequencySum = 0;
  for (const value of frequencies) {
    if (Number.isFinite(value)) {
      frequencySum += value;
    }
  }
  return { sum: absoluteSum(rendered), frequencySum };
}
