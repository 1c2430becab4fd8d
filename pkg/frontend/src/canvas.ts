// Custom HTML5 canvas rendering: emojis, two strings with Swedish letters,
// overlapping ellipses, a gradient background, and a rotation, parameterized
// by the challenge seed. Exported in PNG and in JPEG at quality 0.1 and
// hashed client-side.

import { sha256Hex } from "./hash";
import { CanvasInstructions, instructionsFromSeed } from "./seed";

export interface CanvasHashes {
  png: string;
  jpeg: string;
}

const EMOJIS = "\u{1F600}\u{1F680}\u{1F409}\u{1F4A9}";
const SECOND_LINE = "Björnbär på smörgåsbordet \u{263A}";

function drawEllipse(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  rx: number,
  ry: number,
  color: string
): void {
  ctx.beginPath();
  if (typeof ctx.ellipse === "function") {
    ctx.ellipse(x, y, rx, ry, 0, 0, 2 * Math.PI);
  } else {
    ctx.arc(x, y, (rx + ry) / 2, 0, 2 * Math.PI);
  }
  ctx.fillStyle = color;
  ctx.globalAlpha = 0.55;
  ctx.fill();
  ctx.globalAlpha = 1.0;
}

export function paintCustomCanvas(
  canvas: HTMLCanvasElement,
  instructions: CanvasInstructions
): CanvasRenderingContext2D | null {
  canvas.width = 420;
  canvas.height = 160;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return null;
  }
  const gradient = ctx.createLinearGradient(0, 0, canvas.width, canvas.height);
  gradient.addColorStop(0, instructions.gradientFrom);
  gradient.addColorStop(1, instructions.gradientTo);
  ctx.fillStyle = gradient;
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  ctx.save();
  if (instructions.rotationDeg) {
    ctx.translate(canvas.width / 2, canvas.height / 2);
    ctx.rotate((instructions.rotationDeg * Math.PI) / 180);
    ctx.translate(-canvas.width / 2, -canvas.height / 2);
  }

  drawEllipse(ctx, 90, 70, 70, 35, "#ffffff");
  drawEllipse(ctx, 150, 80, 60, 45, "#112233");
  drawEllipse(ctx, 230, 60, 80, 30, "#ddaa00");
  drawEllipse(ctx, 300, 90, 55, 40, "#22aa66");

  ctx.font = "18px Arial";
  ctx.fillStyle = "#0b1021";
  ctx.fillText(instructions.text, 8, 40);
  ctx.font = "16px 'Times New Roman'";
  ctx.fillStyle = "#f4f4f4";
  ctx.fillText(SECOND_LINE, 14, 100);
  ctx.font = "26px sans-serif";
  ctx.fillText(EMOJIS, 20, 140);
  ctx.restore();
  return ctx;
}

export async function renderCustomCanvas(seed: string): Promise<CanvasHashes> {
  const canvas = document.createElement("canvas");
  const ctx = paintCustomCanvas(canvas, instructionsFromSeed(seed));
  if (!ctx) {
    throw new Error("2d context unavailable");
  }
  const png = canvas.toDataURL("image/png");
  const jpeg = canvas.toDataURL("image/jpeg", 0.1);
  return { png: await sha256Hex(png), jpeg: await sha256Hex(jpeg) };
}
