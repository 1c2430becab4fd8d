// WebGL canvas: sequential triangles sharing a color gradient, exported as
// PNG and hashed.

import { sha256Hex } from "./hash";

const VERTEX_SHADER = `
attribute vec2 position;
attribute vec3 color;
varying vec3 vColor;
void main() {
  vColor = color;
  gl_Position = vec4(position, 0.0, 1.0);
}
`;

const FRAGMENT_SHADER = `
precision mediump float;
varying vec3 vColor;
void main() {
  gl_FragColor = vec4(vColor, 1.0);
}
`;

function getContext(canvas: HTMLCanvasElement): WebGLRenderingContext | null {
  for (const name of ["webgl", "webgl2", "experimental-webgl"]) {
    const ctx = canvas.getContext(name) as WebGLRenderingContext | null;
    if (ctx) {
      return ctx;
    }
  }
  return null;
}

function compile(gl: WebGLRenderingContext, type: number, source: string): WebGLShader {
  const shader = gl.createShader(type);
  if (!shader) {
    throw new Error("shader allocation failed");
  }
  gl.shaderSource(shader, source);
  gl.compileShader(shader);
  return shader;
}

export async function renderWebglCanvas(): Promise<string> {
  const canvas = document.createElement("canvas");
  canvas.width = 256;
  canvas.height = 128;
  const gl = getContext(canvas);
  if (!gl) {
    throw new Error("webgl context unavailable");
  }
  const program = gl.createProgram();
  if (!program) {
    throw new Error("program allocation failed");
  }
  gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERTEX_SHADER));
  gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SHADER));
  gl.linkProgram(program);
  gl.useProgram(program);

  // Ten triangles marching across the viewport, hue shifting per vertex.
  const vertices: number[] = [];
  const triangles = 10;
  for (let i = 0; i < triangles; i++) {
    const x0 = -1 + (2 * i) / triangles;
    const x1 = -1 + (2 * (i + 1)) / triangles;
    const hue = i / triangles;
    vertices.push(
      x0, -0.8, hue, 0.2, 1 - hue,
      x1, -0.8, 1 - hue, 0.4, hue,
      (x0 + x1) / 2, 0.8, hue, 1 - hue, 0.5
    );
  }
  const buffer = gl.createBuffer();
  gl.bindBuffer(gl.ARRAY_BUFFER, buffer);
  gl.bufferData(gl.ARRAY_BUFFER, new Float32Array(vertices), gl.STATIC_DRAW);
  const stride = 5 * 4;
  const position = gl.getAttribLocation(program, "position");
  const color = gl.getAttribLocation(program, "color");
  gl.enableVertexAttribArray(position);
  gl.vertexAttribPointer(position, 2, gl.FLOAT, false, stride, 0);
  gl.enableVertexAttribArray(color);
  gl.vertexAttribPointer(color, 3, gl.FLOAT, false, stride, 2 * 4);

  gl.clearColor(0.05, 0.05, 0.1, 1.0);
  gl.clear(gl.COLOR_BUFFER_BIT);
  gl.drawArrays(gl.TRIANGLES, 0, triangles * 3);

  return sha256Hex(canvas.toDataURL("image/png"));
}
