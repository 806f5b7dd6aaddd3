/**
 * WebGL mesh renderer with flat + diffuse shading from per-vertex normals.
 *
 * The renderer owns the canvas, the GL buffers, and the orbit camera
 * interaction (drag to rotate, wheel to zoom). It implements the
 * controller's MeshRenderer interface; camera motion only re-renders,
 * it never issues requests.
 */

import { OrbitCamera } from "./camera.js";
import { MeshRenderer } from "./controller.js";
import { WireMesh } from "./wire.js";

const VERTEX_SHADER = `
attribute vec3 position;
attribute vec3 normal;
uniform mat4 viewProjection;
varying vec3 vNormal;
void main() {
  vNormal = normal;
  gl_Position = viewProjection * vec4(position, 1.0);
}
`;

const FRAGMENT_SHADER = `
precision mediump float;
varying vec3 vNormal;
uniform vec3 lightDirection;
void main() {
  vec3 n = normalize(vNormal);
  float diffuse = abs(dot(n, normalize(lightDirection)));
  vec3 base = vec3(0.82, 0.71, 0.55);
  vec3 color = base * (0.25 + 0.75 * diffuse);
  gl_FragColor = vec4(color, 1.0);
}
`;

function compile(gl: WebGLRenderingContext, kind: number, source: string): WebGLShader {
  const shader = gl.createShader(kind);
  if (!shader) {
    throw new Error("could not allocate shader");
  }
  gl.shaderSource(shader, source);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
  }
  return shader;
}

export class WebGLMeshRenderer implements MeshRenderer {
  readonly camera = new OrbitCamera();

  private readonly gl: WebGLRenderingContext;
  private readonly program: WebGLProgram;
  private readonly positionBuffer: WebGLBuffer;
  private readonly normalBuffer: WebGLBuffer;
  private readonly indexBuffer: WebGLBuffer;
  private readonly uViewProjection: WebGLUniformLocation;
  private readonly uLightDirection: WebGLUniformLocation;
  private indexCount = 0;
  private frameRequested = false;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl", { antialias: true });
    if (!gl) {
      throw new Error("WebGL is not available in this browser");
    }
    this.gl = gl;

    const program = gl.createProgram();
    if (!program) {
      throw new Error("could not allocate GL program");
    }
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERTEX_SHADER));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SHADER));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
    }
    this.program = program;

    this.positionBuffer = gl.createBuffer()!;
    this.normalBuffer = gl.createBuffer()!;
    this.indexBuffer = gl.createBuffer()!;
    this.uViewProjection = gl.getUniformLocation(program, "viewProjection")!;
    this.uLightDirection = gl.getUniformLocation(program, "lightDirection")!;

    gl.enable(gl.DEPTH_TEST);
    this.bindInteraction();
    this.requestFrame();
  }

  setMesh(mesh: WireMesh | null): void {
    const gl = this.gl;
    if (!mesh || mesh.triangleCount === 0) {
      this.indexCount = 0;
      this.requestFrame();
      return;
    }
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, mesh.positions, gl.STATIC_DRAW);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.normalBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, mesh.normals, gl.STATIC_DRAW);
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    // 16-bit indices keep WebGL1 compatibility for small meshes
    if (mesh.vertexCount <= 0xffff) {
      gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, new Uint16Array(mesh.indices), gl.STATIC_DRAW);
      this.use16BitIndices = true;
    } else {
      const ext = gl.getExtension("OES_element_index_uint");
      if (!ext) {
        throw new Error("mesh too large for this browser (no 32-bit index support)");
      }
      gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, mesh.indices, gl.STATIC_DRAW);
      this.use16BitIndices = false;
    }
    this.indexCount = mesh.indices.length;
    this.frameMesh(mesh);
    this.requestFrame();
  }

  private use16BitIndices = true;

  private frameMesh(mesh: WireMesh): void {
    const min = [Infinity, Infinity, Infinity];
    const max = [-Infinity, -Infinity, -Infinity];
    const p = mesh.positions;
    for (let i = 0; i < p.length; i += 3) {
      for (let axis = 0; axis < 3; axis++) {
        const v = p[i + axis];
        if (v < min[axis]) min[axis] = v;
        if (v > max[axis]) max[axis] = v;
      }
    }
    this.camera.frame(min, max);
  }

  private bindInteraction(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("pointerdown", (event) => {
      dragging = true;
      lastX = event.clientX;
      lastY = event.clientY;
      this.canvas.setPointerCapture(event.pointerId);
    });
    this.canvas.addEventListener("pointermove", (event) => {
      if (!dragging) {
        return;
      }
      this.camera.rotate((event.clientX - lastX) * 0.008, (event.clientY - lastY) * 0.008);
      lastX = event.clientX;
      lastY = event.clientY;
      this.requestFrame();
    });
    this.canvas.addEventListener("pointerup", () => {
      dragging = false;
    });
    this.canvas.addEventListener("wheel", (event) => {
      event.preventDefault();
      this.camera.zoom(event.deltaY > 0 ? 1.1 : 1 / 1.1);
      this.requestFrame();
    });
  }

  private requestFrame(): void {
    if (this.frameRequested) {
      return;
    }
    this.frameRequested = true;
    requestAnimationFrame(() => {
      this.frameRequested = false;
      this.draw();
    });
  }

  private draw(): void {
    const gl = this.gl;
    const width = this.canvas.clientWidth || this.canvas.width;
    const height = this.canvas.clientHeight || this.canvas.height;
    if (this.canvas.width !== width || this.canvas.height !== height) {
      this.canvas.width = width;
      this.canvas.height = height;
    }
    gl.viewport(0, 0, width, height);
    gl.clearColor(0.09, 0.1, 0.12, 1.0);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (this.indexCount === 0) {
      return;
    }
    gl.useProgram(this.program);

    const positionLoc = gl.getAttribLocation(this.program, "position");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.enableVertexAttribArray(positionLoc);
    gl.vertexAttribPointer(positionLoc, 3, gl.FLOAT, false, 0, 0);

    const normalLoc = gl.getAttribLocation(this.program, "normal");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.normalBuffer);
    gl.enableVertexAttribArray(normalLoc);
    gl.vertexAttribPointer(normalLoc, 3, gl.FLOAT, false, 0, 0);

    gl.uniformMatrix4fv(this.uViewProjection, false, this.camera.viewProjection(width / height));
    const eye = this.camera.eye();
    gl.uniform3f(
      this.uLightDirection,
      eye[0] - this.camera.target[0],
      eye[1] - this.camera.target[1],
      eye[2] - this.camera.target[2],
    );

    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    gl.drawElements(
      gl.TRIANGLES,
      this.indexCount,
      this.use16BitIndices ? gl.UNSIGNED_SHORT : gl.UNSIGNED_INT,
      0,
    );
  }
}
