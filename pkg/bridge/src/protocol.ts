/**
 * Wire protocol codec: length-prefixed frames with a JSON header line.
 *
 * Frame layout (stream sockets):
 *
 *     [4-byte little-endian unsigned length] [header line] [payload]
 *
 * The length covers the header line and payload together. The header is a
 * single-line JSON object terminated by "\n". Payloads are 32-bit IEEE-754
 * little-endian reals, row-major with channels innermost.
 *
 * Numeric contract: compute in 64-bit floats, round to 32-bit exactly once
 * at serialization. Two backends fed identical request bytes must produce
 * identical response bytes.
 */

export const PROTOCOL_VERSION = "1";
export const MAX_FRAME_BYTES = 64 * 1024 * 1024;
const LENGTH_BYTES = 4;

/** Malformed header or payload; the frame boundary is intact. */
export class ProtocolFault extends Error {}

/** Framing failure; the byte stream is unusable past this point. */
export class TransportFault extends Error {}

export interface Header {
  [key: string]: unknown;
}

export interface Frame {
  header: Header;
  payload: Buffer;
}

export function encodeFrame(header: object, payload: Buffer = Buffer.alloc(0)): Buffer {
  const line = Buffer.from(JSON.stringify(header) + "\n", "utf8");
  const prefix = Buffer.alloc(LENGTH_BYTES);
  prefix.writeUInt32LE(line.length + payload.length, 0);
  return Buffer.concat([prefix, line, payload]);
}

/** Split a frame body (without the length prefix) into header and payload. */
export function decodeFrame(body: Buffer): Frame {
  const newline = body.indexOf(0x0a);
  if (newline < 0) {
    throw new ProtocolFault("header: missing terminating newline");
  }
  let header: unknown;
  try {
    header = JSON.parse(body.subarray(0, newline).toString("utf8"));
  } catch (exc) {
    throw new ProtocolFault(`header: not valid JSON (${(exc as Error).message})`);
  }
  if (typeof header !== "object" || header === null || Array.isArray(header)) {
    throw new ProtocolFault("header: not a JSON object");
  }
  return { header: header as Header, payload: body.subarray(newline + 1) };
}

/** Serialize reals as little-endian 32-bit floats (the single rounding). */
export function floatsToBytes(values: Float64Array): Buffer {
  const out = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    out.writeFloatLE(values[i], i * 4);
  }
  return out;
}

/** Deserialize little-endian 32-bit floats into 64-bit values (exact). */
export function bytesToFloats(raw: Buffer, count: number): Float64Array {
  if (raw.length !== count * 4) {
    throw new ProtocolFault(`payload: expected ${count * 4} bytes, got ${raw.length}`);
  }
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = raw.readFloatLE(i * 4);
  }
  return out;
}

/**
 * Incremental frame parser for a socket's data events.
 *
 * push() returns every frame body completed by the chunk; atEnd() validates
 * that the stream did not stop mid-frame.
 */
export class FrameReader {
  private buffer: Buffer = Buffer.alloc(0);

  push(chunk: Buffer): Buffer[] {
    this.buffer = this.buffer.length ? Buffer.concat([this.buffer, chunk]) : chunk;
    const frames: Buffer[] = [];
    while (this.buffer.length >= LENGTH_BYTES) {
      const length = this.buffer.readUInt32LE(0);
      if (length === 0 || length > MAX_FRAME_BYTES) {
        throw new TransportFault(
          `frame length: ${length} outside (0, ${MAX_FRAME_BYTES}]`,
        );
      }
      if (this.buffer.length < LENGTH_BYTES + length) {
        break;
      }
      frames.push(this.buffer.subarray(LENGTH_BYTES, LENGTH_BYTES + length));
      this.buffer = this.buffer.subarray(LENGTH_BYTES + length);
    }
    return frames;
  }

  /** Call when the peer half-closes; rejects a partially received frame. */
  atEnd(): void {
    if (this.buffer.length === 0) {
      return;
    }
    if (this.buffer.length < LENGTH_BYTES) {
      throw new TransportFault("frame length: truncated length prefix");
    }
    const length = this.buffer.readUInt32LE(0);
    throw new TransportFault(
      `frame length: expected ${length} bytes, stream ended early`,
    );
  }
}

export function errorFrame(reason: string): Buffer {
  return encodeFrame({ version: PROTOCOL_VERSION, type: "error", reason });
}

export function resultFrame(h: number, w: number, c: number, features: Float64Array): Buffer {
  // Key order matches the reference implementation byte for byte.
  return encodeFrame(
    { version: PROTOCOL_VERSION, type: "result", h, w, c },
    floatsToBytes(features),
  );
}

export function magnitudeFrame(magnitude: number): Buffer {
  return encodeFrame({ version: PROTOCOL_VERSION, type: "noise_magnitude", magnitude });
}
