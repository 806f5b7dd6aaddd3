/**
 * MSH1 binary mesh decoding.
 *
 * Layout (little-endian): 4-byte magic "MSH1", uint32 vertex count,
 * uint32 triangle count, float32 positions (nV*3), float32 normals
 * (nV*3), uint32 triangle indices (nT*3). Mirrors the server encoder
 * byte for byte.
 */

export class BadMagicError extends Error {
  constructor(found: string) {
    super(`not an MSH1 mesh (magic ${JSON.stringify(found)})`);
    this.name = "BadMagicError";
  }
}

export class TruncatedBodyError extends Error {
  constructor(got: number, expected: number) {
    super(`truncated mesh body: ${got} bytes, expected ${expected}`);
    this.name = "TruncatedBodyError";
  }
}

export interface WireMesh {
  vertexCount: number;
  triangleCount: number;
  /** xyz per vertex, millimetres */
  positions: Float32Array;
  /** unit normals, same length as positions */
  normals: Float32Array;
  /** vertex indices, three per triangle */
  indices: Uint32Array;
}

export const WIRE_HEADER_BYTES = 12;

export function decodeWireMesh(buffer: ArrayBuffer): WireMesh {
  if (buffer.byteLength < WIRE_HEADER_BYTES) {
    throw new TruncatedBodyError(buffer.byteLength, WIRE_HEADER_BYTES);
  }
  const view = new DataView(buffer);
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== "MSH1") {
    throw new BadMagicError(magic);
  }
  const vertexCount = view.getUint32(4, true);
  const triangleCount = view.getUint32(8, true);
  const expected = WIRE_HEADER_BYTES + vertexCount * 24 + triangleCount * 12;
  if (buffer.byteLength !== expected) {
    throw new TruncatedBodyError(buffer.byteLength, expected);
  }
  const positionsOffset = WIRE_HEADER_BYTES;
  const normalsOffset = positionsOffset + vertexCount * 12;
  const indicesOffset = normalsOffset + vertexCount * 12;
  return {
    vertexCount,
    triangleCount,
    positions: new Float32Array(buffer, positionsOffset, vertexCount * 3),
    normals: new Float32Array(buffer, normalsOffset, vertexCount * 3),
    indices: new Uint32Array(buffer, indicesOffset, triangleCount * 3),
  };
}
