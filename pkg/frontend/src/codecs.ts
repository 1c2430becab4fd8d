// Media codec support probed through canPlayType on detached elements.

export const VIDEO_CODECS = [
  'video/mp2t; codecs="avc1.42E01E,mp4a.40.2"',
  'video/mp4; codecs="avc1.42c00d"',
  'video/mp4; codecs="avc1.4D401E"',
  'video/mp4; codecs="mp4v.20.8"',
  'video/mp4; codecs="avc1.42E01E"',
  'video/mp4; codecs="avc1.42E01E, mp4a.40.2"',
  'video/mp4; codecs="hvc1.1.L0.0"',
  'video/mp4; codecs="hev1.1.L0.0"',
  'video/ogg; codecs="theora"',
  'video/ogg; codecs="vorbis"',
  'video/webm; codecs="vp8"',
  'video/webm; codecs="vp9"',
  "application/dash+xml",
  "application/vnd.apple.mpegURL",
  "audio/mpegurl",
];

export const AUDIO_CODECS = [
  'audio/wav; codecs="1"',
  "audio/mpeg",
  'audio/mp4; codecs="mp4a.40.2"',
  'audio/mp4; codecs="ac-3"',
  'audio/mp4; codecs="ec-3"',
  'audio/ogg; codecs="vorbis"',
  'audio/ogg; codecs="opus"',
  'audio/webm; codecs="vorbis"',
  'audio/webm; codecs="opus"',
];

function probe(element: HTMLMediaElement, candidates: string[]): string[] {
  if (typeof element.canPlayType !== "function") {
    throw new Error("canPlayType unavailable");
  }
  return candidates.filter((type) => element.canPlayType(type) !== "");
}

export function supportedVideoCodecs(): string[] {
  return probe(document.createElement("video"), VIDEO_CODECS);
}

export function supportedAudioCodecs(): string[] {
  return probe(document.createElement("audio"), AUDIO_CODECS);
}
