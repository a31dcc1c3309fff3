/**
 * TCP service that answers denoise frames with a pluggable backend.
 *
 * One session per connection; sessions are independent and backend calls
 * within a session run in arrival order. Error handling mirrors the
 * reference loopback service: a malformed frame gets an error response and
 * the connection stays open (the frame boundary is intact); a framing
 * failure or a protocol version mismatch gets an error response and the
 * connection closes.
 */

import * as net from "node:net";

import { Backend, parseRequest } from "./backends.js";
import {
  FrameReader,
  PROTOCOL_VERSION,
  ProtocolFault,
  TransportFault,
  decodeFrame,
  errorFrame,
  magnitudeFrame,
  resultFrame,
} from "./protocol.js";

export interface ServerHandle {
  host: string;
  port: number;
  endpoint: string;
  close(): Promise<void>;
}

function reason(exc: unknown): string {
  return exc instanceof Error ? exc.message : String(exc);
}

function handleFrame(backend: Backend, body: Buffer, socket: net.Socket): void {
  let frame;
  try {
    frame = decodeFrame(body);
  } catch (exc) {
    // Frame boundary is still intact; report and keep serving.
    socket.write(errorFrame(reason(exc)));
    return;
  }
  const { header, payload } = frame;
  if (header["version"] !== PROTOCOL_VERSION) {
    socket.write(
      errorFrame(
        `version: got ${JSON.stringify(header["version"])}, ` +
          `need '${PROTOCOL_VERSION}'`,
      ),
    );
    socket.end(); // version mismatch closes the connection
    return;
  }
  const kind = header["type"];
  try {
    if (kind === "denoise") {
      const req = parseRequest(header, payload);
      const out = backend.denoise(req);
      if (out.length !== req.h * req.w * req.c) {
        throw new ProtocolFault(
          `backend returned ${out.length} values, expected ${req.h * req.w * req.c}`,
        );
      }
      socket.write(resultFrame(req.h, req.w, req.c, out));
    } else if (kind === "noise_query") {
      const t = header["t"];
      const total = header["total"];
      if (typeof t !== "number" || typeof total !== "number") {
        throw new ProtocolFault("header: bad or missing grid field (t, total)");
      }
      socket.write(magnitudeFrame(backend.noiseMagnitude(t, total)));
    } else {
      socket.write(errorFrame(`type: unknown message type ${JSON.stringify(kind)}`));
    }
  } catch (exc) {
    socket.write(errorFrame(reason(exc)));
  }
}

function handleConnection(backend: Backend, socket: net.Socket): void {
  const reader = new FrameReader();
  socket.on("data", (chunk: Buffer) => {
    let bodies: Buffer[];
    try {
      bodies = reader.push(chunk);
    } catch (exc) {
      socket.write(errorFrame(reason(exc)));
      socket.end();
      return;
    }
    for (const body of bodies) {
      handleFrame(backend, body, socket);
    }
  });
  socket.on("end", () => {
    // Peer half-closed; reject a frame cut off mid-stream, then close.
    try {
      reader.atEnd();
    } catch (exc) {
      socket.write(errorFrame(reason(exc)));
    }
    socket.end();
  });
  socket.on("error", () => {
    socket.destroy();
  });
}

/** Bind and serve until close(); resolves once the port is listening. */
export function serve(
  backend: Backend,
  host = "127.0.0.1",
  port = 0,
): Promise<ServerHandle> {
  // allowHalfOpen so an error response can still be written after the peer
  // half-closes its side (truncated-frame reporting depends on it).
  const server = net.createServer({ allowHalfOpen: true }, (socket) =>
    handleConnection(backend, socket),
  );
  const sockets = new Set<net.Socket>();
  server.on("connection", (socket) => {
    sockets.add(socket);
    socket.on("close", () => sockets.delete(socket));
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const address = server.address() as net.AddressInfo;
      resolve({
        host: address.address,
        port: address.port,
        endpoint: `${address.address}:${address.port}`,
        close: () =>
          new Promise<void>((done) => {
            for (const socket of sockets) {
              socket.destroy();
            }
            server.close(() => done());
          }),
      });
    });
  });
}
