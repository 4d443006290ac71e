// Panorama rendering. The WebGL path draws a fullscreen quad and, per
// pixel, turns the screen ray into equirectangular texture coordinates with
// the same rotation convention as projection.ts, so markers and pixels
// always agree. Without WebGL (headless tests, ancient browsers) a plain
// <img> pans via CSS as a rough but functional fallback.

import { focalLengthPx, type Viewport } from "./projection.js";
import type { Direction } from "./types.js";

export interface PanoramaRenderer {
  element: HTMLElement;
  setPanorama(url: string, width: number, height: number): Promise<void>;
  setCamera(camera: Direction): void;
  viewport(): Viewport;
  resize(width: number, height: number): void;
}

const VFOV_DEG = 75;

const VERT = `
attribute vec2 a_pos;
varying vec2 v_ndc;
void main() {
  v_ndc = a_pos;
  gl_Position = vec4(a_pos, 0.0, 1.0);
}
`;

// rotX/rotY match projection.ts: screen ray -> world direction, then the
// standard equirect mapping (yaw along u, pitch along v).
const FRAG = `
precision highp float;
varying vec2 v_ndc;
uniform sampler2D u_pano;
uniform float u_yaw;
uniform float u_pitch;
uniform float u_tanHalfVfov;
uniform float u_aspect;
const float PI = 3.141592653589793;

void main() {
  vec3 ray = normalize(vec3(
    v_ndc.x * u_aspect * u_tanHalfVfov,
    v_ndc.y * u_tanHalfVfov,
    -1.0));
  float cp = cos(u_pitch);
  float sp = sin(u_pitch);
  ray = vec3(ray.x, ray.y * cp - ray.z * sp, ray.z * cp + ray.y * sp);
  float cy = cos(u_yaw);
  float sy = sin(u_yaw);
  ray = vec3(ray.x * cy - ray.z * sy, ray.y, ray.z * cy + ray.x * sy);
  float yaw = atan(ray.x, -ray.z);
  float pitch = asin(clamp(ray.y, -1.0, 1.0));
  vec2 uv = vec2(0.5 + yaw / (2.0 * PI), 0.5 - pitch / PI);
  gl_FragColor = texture2D(u_pano, uv);
}
`;

export class WebGLPanorama implements PanoramaRenderer {
  element: HTMLCanvasElement;
  private gl: WebGLRenderingContext;
  private uniforms: {
    yaw: WebGLUniformLocation;
    pitch: WebGLUniformLocation;
    tanHalfVfov: WebGLUniformLocation;
    aspect: WebGLUniformLocation;
  };
  private camera: Direction = { yaw: 0, pitch: 0 };
  private textureReady = false;

  constructor(canvas: HTMLCanvasElement, gl: WebGLRenderingContext) {
    this.element = canvas;
    this.gl = gl;

    const program = gl.createProgram()!;
    for (const [kind, source] of [
      [gl.VERTEX_SHADER, VERT],
      [gl.FRAGMENT_SHADER, FRAG],
    ] as const) {
      const shader = gl.createShader(kind)!;
      gl.shaderSource(shader, source);
      gl.compileShader(shader);
      if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
        throw new Error("shader compile failed: " + gl.getShaderInfoLog(shader));
      }
      gl.attachShader(program, shader);
    }
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error("program link failed: " + gl.getProgramInfoLog(program));
    }
    gl.useProgram(program);

    const quad = gl.createBuffer();
    gl.bindBuffer(gl.ARRAY_BUFFER, quad);
    gl.bufferData(
      gl.ARRAY_BUFFER,
      new Float32Array([-1, -1, 1, -1, -1, 1, 1, 1]),
      gl.STATIC_DRAW,
    );
    const pos = gl.getAttribLocation(program, "a_pos");
    gl.enableVertexAttribArray(pos);
    gl.vertexAttribPointer(pos, 2, gl.FLOAT, false, 0, 0);

    this.uniforms = {
      yaw: gl.getUniformLocation(program, "u_yaw")!,
      pitch: gl.getUniformLocation(program, "u_pitch")!,
      tanHalfVfov: gl.getUniformLocation(program, "u_tanHalfVfov")!,
      aspect: gl.getUniformLocation(program, "u_aspect")!,
    };

    const texture = gl.createTexture();
    gl.bindTexture(gl.TEXTURE_2D, texture);
    // panoramas are rarely power-of-two: clamp + linear, no mips
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_S, gl.CLAMP_TO_EDGE);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_T, gl.CLAMP_TO_EDGE);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.LINEAR);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MAG_FILTER, gl.LINEAR);
  }

  static create(width: number, height: number): WebGLPanorama | null {
    const canvas = document.createElement("canvas");
    canvas.width = width;
    canvas.height = height;
    canvas.className = "pano-canvas";
    const gl = canvas.getContext("webgl");
    if (!gl) return null;
    try {
      return new WebGLPanorama(canvas, gl);
    } catch {
      return null;
    }
  }

  setPanorama(url: string): Promise<void> {
    return new Promise((resolve, reject) => {
      const img = new Image();
      img.crossOrigin = "anonymous";
      img.onload = () => {
        const gl = this.gl;
        gl.pixelStorei(gl.UNPACK_FLIP_Y_WEBGL, false);
        gl.texImage2D(gl.TEXTURE_2D, 0, gl.RGBA, gl.RGBA, gl.UNSIGNED_BYTE, img);
        this.textureReady = true;
        this.draw();
        resolve();
      };
      img.onerror = () => reject(new Error("panorama failed to load: " + url));
      img.src = url;
    });
  }

  setCamera(camera: Direction): void {
    this.camera = camera;
    this.draw();
  }

  viewport(): Viewport {
    return {
      width: this.element.width,
      height: this.element.height,
      vfovDeg: VFOV_DEG,
    };
  }

  resize(width: number, height: number): void {
    this.element.width = width;
    this.element.height = height;
    this.gl.viewport(0, 0, width, height);
    this.draw();
  }

  private draw(): void {
    if (!this.textureReady) return;
    const gl = this.gl;
    const vp = this.viewport();
    const rad = Math.PI / 180;
    gl.uniform1f(this.uniforms.yaw, this.camera.yaw * rad);
    gl.uniform1f(this.uniforms.pitch, this.camera.pitch * rad);
    gl.uniform1f(this.uniforms.tanHalfVfov, Math.tan((vp.vfovDeg / 2) * rad));
    gl.uniform1f(this.uniforms.aspect, vp.width / vp.height);
    gl.drawArrays(gl.TRIANGLE_STRIP, 0, 4);
  }
}

/** CSS-pan fallback: correct at the view center, approximate at the edges. */
export class ImagePanorama implements PanoramaRenderer {
  element: HTMLElement;
  private img: HTMLImageElement;
  private camera: Direction = { yaw: 0, pitch: 0 };
  private width: number;
  private height: number;
  private panoWidth = 1;
  private panoHeight = 1;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.element = document.createElement("div");
    this.element.className = "pano-fallback";
    this.element.style.width = `${width}px`;
    this.element.style.height = `${height}px`;
    this.element.style.overflow = "hidden";
    this.img = document.createElement("img");
    this.img.className = "pano-image";
    this.img.style.position = "absolute";
    this.element.append(this.img);
  }

  setPanorama(url: string, width: number, height: number): Promise<void> {
    this.panoWidth = width;
    this.panoHeight = height;
    this.img.src = url;
    this.pan();
    return Promise.resolve();
  }

  setCamera(camera: Direction): void {
    this.camera = camera;
    this.pan();
  }

  viewport(): Viewport {
    return { width: this.width, height: this.height, vfovDeg: VFOV_DEG };
  }

  resize(width: number, height: number): void {
    this.width = width;
    this.height = height;
    this.element.style.width = `${width}px`;
    this.element.style.height = `${height}px`;
    this.pan();
  }

  private pan(): void {
    // scale so the vertical FOV fills the viewport, then translate the
    // image so the camera direction sits at the viewport center
    const vp = this.viewport();
    const f = focalLengthPx(vp);
    const pxPerDegY = (2 * f * Math.tan((vp.vfovDeg / 2) * Math.PI / 180)) / vp.vfovDeg;
    const scale = (pxPerDegY * 180) / this.panoHeight;
    const w = this.panoWidth * scale;
    const h = this.panoHeight * scale;
    const cx = (this.camera.yaw / 360) * w;
    const cy = ((90 - this.camera.pitch) / 180) * h;
    this.img.style.width = `${w.toFixed(1)}px`;
    this.img.style.height = `${h.toFixed(1)}px`;
    this.img.style.left = `${(vp.width / 2 - cx).toFixed(1)}px`;
    this.img.style.top = `${(vp.height / 2 - cy).toFixed(1)}px`;
  }
}

export function createRenderer(width: number, height: number): PanoramaRenderer {
  return WebGLPanorama.create(width, height) ?? new ImagePanorama(width, height);
}
