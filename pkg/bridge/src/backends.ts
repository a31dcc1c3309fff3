/**
 * Denoiser backends served over the wire protocol.
 *
 * A backend consumes one perspective grid per call and returns a grid of the
 * same shape, computed in 64-bit floats. The protocol layer performs the
 * single rounding to 32-bit at serialization, so a backend that follows the
 * same arithmetic as the reference mocks matches them bit for bit.
 *
 * Real diffusion models mount through the external hook: a module that
 * default-exports a Backend (or a factory returning one) and receives the
 * full request, per-cell directions included.
 */

import { pathToFileURL } from "node:url";

import { Header, ProtocolFault, bytesToFloats } from "./protocol.js";

export interface DenoiseRequest {
  h: number;
  w: number;
  c: number;
  /** h*w*c features, row-major with channels innermost. */
  features: Float64Array;
  /** h*w*3 per-cell unit directions, same layout. */
  directions: Float64Array;
  t: number;
  total: number;
  prompt: string;
  azimuthDeg: number;
  elevationDeg: number;
  seed: number | null;
}

export interface Backend {
  readonly kind: string;
  denoise(req: DenoiseRequest): Float64Array;
  noiseMagnitude(t: number, total: number): number;
}

function gridField(header: Header, key: string): number {
  const value = header[key];
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new ProtocolFault(`header: bad or missing grid field (${key})`);
  }
  return value;
}

/** Build a DenoiseRequest from a decoded denoise frame. */
export function parseRequest(header: Header, payload: Buffer): DenoiseRequest {
  const h = gridField(header, "h");
  const w = gridField(header, "w");
  const c = gridField(header, "c");
  const t = gridField(header, "t");
  const total = gridField(header, "total");
  if (Math.min(h, w, c) < 1) {
    throw new ProtocolFault("header: grid dimensions must be positive");
  }
  if (!(1 <= t && t <= total)) {
    throw new ProtocolFault("header: timestep must satisfy 1 <= t <= total");
  }
  const featureBytes = h * w * c * 4;
  if (payload.length !== featureBytes + h * w * 12) {
    throw new ProtocolFault(
      `payload: expected ${featureBytes + h * w * 12} bytes ` +
        `for a ${h}x${w}x${c} grid, got ${payload.length}`,
    );
  }
  const seed = header["seed"];
  return {
    h,
    w,
    c,
    features: bytesToFloats(payload.subarray(0, featureBytes), h * w * c),
    directions: bytesToFloats(payload.subarray(featureBytes), h * w * 3),
    t,
    total,
    prompt: typeof header["prompt"] === "string" ? header["prompt"] : "",
    azimuthDeg: typeof header["azimuth_deg"] === "number" ? header["azimuth_deg"] : 0,
    elevationDeg:
      typeof header["elevation_deg"] === "number" ? header["elevation_deg"] : 0,
    seed: typeof seed === "number" ? seed : null,
  };
}

/** The stock target g(d): the direction itself, zero-padded to C channels. */
export function defaultTarget(req: DenoiseRequest): Float64Array {
  const { h, w, c, directions } = req;
  const out = new Float64Array(h * w * c);
  const copied = Math.min(3, c);
  for (let cell = 0; cell < h * w; cell++) {
    for (let k = 0; k < copied; k++) {
      out[cell * c + k] = directions[cell * 3 + k];
    }
  }
  return out;
}

/** Returns the request payload unchanged. */
export class EchoBackend implements Backend {
  readonly kind = "echo";

  denoise(req: DenoiseRequest): Float64Array {
    return req.features.slice();
  }

  noiseMagnitude(t: number, total: number): number {
    return t / total;
  }
}

/**
 * Moves a 1/t fraction of the way toward the target each step.
 *
 * out = f + (g - f) / t, the same contraction rule and the same elementwise
 * operation order as the reference scheduler mock; t = 1 lands exactly on g.
 */
export class StubSchedulerBackend implements Backend {
  readonly kind = "stub-scheduler";

  denoise(req: DenoiseRequest): Float64Array {
    const target = defaultTarget(req);
    if (req.t === 1) {
      return target;
    }
    const out = new Float64Array(req.features.length);
    for (let i = 0; i < out.length; i++) {
      out[i] = req.features[i] + (target[i] - req.features[i]) / req.t;
    }
    return out;
  }

  noiseMagnitude(t: number, total: number): number {
    return t / total;
  }
}

function isBackend(value: unknown): value is Backend {
  return (
    typeof value === "object" &&
    value !== null &&
    typeof (value as Backend).denoise === "function" &&
    typeof (value as Backend).noiseMagnitude === "function"
  );
}

/**
 * Build a backend from a spec string.
 *
 * Accepted: "echo" (alias "identity"), "stub-scheduler" (alias "scheduler"),
 * "external:<module path>". The external module default-exports a Backend or
 * a factory returning one.
 */
export async function makeBackend(spec: string): Promise<Backend> {
  const colon = spec.indexOf(":");
  const name = colon < 0 ? spec : spec.slice(0, colon);
  const arg = colon < 0 ? "" : spec.slice(colon + 1);
  if (name === "echo" || name === "identity") {
    return new EchoBackend();
  }
  if (name === "stub-scheduler" || name === "scheduler") {
    return new StubSchedulerBackend();
  }
  if (name === "external") {
    if (!arg) {
      throw new Error("external backend needs a module path: external:<path>");
    }
    const module = await import(pathToFileURL(arg).href);
    const exported = module.default;
    const backend = typeof exported === "function" ? exported() : exported;
    if (!isBackend(backend)) {
      throw new Error(
        `external module ${arg} must default-export a backend ` +
          "(denoise + noiseMagnitude) or a factory returning one",
      );
    }
    return backend;
  }
  throw new Error(`unknown backend kind '${name}'`);
}
