/**
 * Orbit camera: yaw/pitch/distance around a target point, plus the
 * minimal 4x4 matrix math to feed a WebGL vertex shader. The camera is a
 * pure view transform; it never touches request parameters.
 */

export type Mat4 = Float32Array;

export function perspective(fovYRadians: number, aspect: number, near: number, far: number): Mat4 {
  const f = 1.0 / Math.tan(fovYRadians / 2);
  const out = new Float32Array(16);
  out[0] = f / aspect;
  out[5] = f;
  out[10] = (far + near) / (near - far);
  out[11] = -1;
  out[14] = (2 * far * near) / (near - far);
  return out;
}

export function lookAt(eye: number[], target: number[], up: number[]): Mat4 {
  const zx = eye[0] - target[0];
  const zy = eye[1] - target[1];
  const zz = eye[2] - target[2];
  const zl = Math.hypot(zx, zy, zz) || 1;
  const z = [zx / zl, zy / zl, zz / zl];
  const x = [
    up[1] * z[2] - up[2] * z[1],
    up[2] * z[0] - up[0] * z[2],
    up[0] * z[1] - up[1] * z[0],
  ];
  const xl = Math.hypot(x[0], x[1], x[2]) || 1;
  x[0] /= xl;
  x[1] /= xl;
  x[2] /= xl;
  const y = [
    z[1] * x[2] - z[2] * x[1],
    z[2] * x[0] - z[0] * x[2],
    z[0] * x[1] - z[1] * x[0],
  ];
  const out = new Float32Array(16);
  out[0] = x[0];
  out[1] = y[0];
  out[2] = z[0];
  out[4] = x[1];
  out[5] = y[1];
  out[6] = z[1];
  out[8] = x[2];
  out[9] = y[2];
  out[10] = z[2];
  out[12] = -(x[0] * eye[0] + x[1] * eye[1] + x[2] * eye[2]);
  out[13] = -(y[0] * eye[0] + y[1] * eye[1] + y[2] * eye[2]);
  out[14] = -(z[0] * eye[0] + z[1] * eye[1] + z[2] * eye[2]);
  out[15] = 1;
  return out;
}

export function multiply(a: Mat4, b: Mat4): Mat4 {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) {
        sum += a[k * 4 + row] * b[col * 4 + k];
      }
      out[col * 4 + row] = sum;
    }
  }
  return out;
}

export class OrbitCamera {
  yaw = 0.6;
  pitch = 0.4;
  distance = 150;
  target: [number, number, number] = [0, 0, 0];

  rotate(deltaYaw: number, deltaPitch: number): void {
    this.yaw += deltaYaw;
    const limit = Math.PI / 2 - 0.01;
    this.pitch = Math.min(Math.max(this.pitch + deltaPitch, -limit), limit);
  }

  zoom(factor: number): void {
    this.distance = Math.min(Math.max(this.distance * factor, 1e-3), 1e6);
  }

  /** Frame a bounding box: target its center, back distance off its size. */
  frame(min: number[], max: number[]): void {
    this.target = [
      (min[0] + max[0]) / 2,
      (min[1] + max[1]) / 2,
      (min[2] + max[2]) / 2,
    ];
    const size = Math.hypot(max[0] - min[0], max[1] - min[1], max[2] - min[2]);
    this.distance = Math.max(size * 1.6, 1.0);
  }

  eye(): [number, number, number] {
    const cp = Math.cos(this.pitch);
    return [
      this.target[0] + this.distance * cp * Math.sin(this.yaw),
      this.target[1] + this.distance * Math.sin(this.pitch),
      this.target[2] + this.distance * cp * Math.cos(this.yaw),
    ];
  }

  viewProjection(aspect: number): Mat4 {
    const view = lookAt(this.eye(), this.target, [0, 1, 0]);
    const proj = perspective(Math.PI / 4, aspect, 0.1, this.distance * 20 + 1000);
    return multiply(proj, view);
  }
}
