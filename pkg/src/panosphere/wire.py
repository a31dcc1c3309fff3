"""Wire protocol for out-of-process denoiser backends, plus a loopback server.

Frame layout (stream sockets):

    [4-byte little-endian unsigned length] [header line] [payload]

The length covers the header line and payload together. The header is a
single-line JSON object terminated by "\\n" with fields:

    version       protocol version, the string "1"
    type          "denoise" | "result" | "error" | "noise_query" | "noise_magnitude"
    h, w, c       grid shape (denoise, result)
    t, total      timestep and step count (denoise, noise_query)
    prompt        prompt text (denoise)
    azimuth_deg, elevation_deg
                  view direction in degrees (denoise)
    seed          integer or null (denoise)
    reason        error description (error)
    magnitude     relative noise level (noise_magnitude)

Payloads are 32-bit IEEE-754 little-endian reals in row-major cell order with
channels innermost. A denoise request carries h*w*c feature values followed by
h*w*3 per-cell unit directions; a result carries h*w*c features only. Error,
noise_query and noise_magnitude frames have no payload.

Numeric contract: both ends compute in 64-bit floats and round to 32-bit
exactly once, at serialization. Two backends fed identical request bytes must
therefore produce identical response bytes.
"""

from __future__ import annotations

import json
import socket
import socketserver
import struct
import threading

import numpy as np

from .denoise import (
    AnalyticDenoiser,
    ConstantDenoiser,
    DenoiseRequest,
    DenoiserHandle,
    IdentityDenoiser,
    SchedulerDenoiser,
)

PROTOCOL_VERSION = "1"
MAX_FRAME_BYTES = 64 * 1024 * 1024
_LENGTH = struct.Struct("<I")


class WireError(Exception):
    """Base class for protocol failures."""


class TransportError(WireError):
    """Connection or framing failure (field: frame length)."""


class VersionError(WireError):
    """Protocol version mismatch (field: version)."""


class ShapeError(WireError):
    """Response grid shape disagrees with the request (fields: h, w, c)."""


class ProtocolError(WireError):
    """Malformed header or unexpected message type."""


class BackendError(WireError):
    """The remote backend answered with an error frame."""


def encode_frame(header: dict, payload: bytes = b"") -> bytes:
    line = json.dumps(header, separators=(",", ":")).encode() + b"\n"
    return _LENGTH.pack(len(line) + len(payload)) + line + payload


def decode_frame(frame: bytes) -> tuple[dict, bytes]:
    """Split a frame body (without the length prefix) into header and payload."""
    newline = frame.find(b"\n")
    if newline < 0:
        raise ProtocolError("header: missing terminating newline")
    try:
        header = json.loads(frame[:newline].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"header: not valid JSON ({exc})") from None
    if not isinstance(header, dict):
        raise ProtocolError("header: not a JSON object")
    return header, frame[newline + 1:]


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise TransportError(f"frame length: expected {n} bytes, stream ended early")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> tuple[dict, bytes] | None:
    """Read one frame; returns None on a clean end of stream."""
    prefix = stream.read(_LENGTH.size)
    if not prefix:
        return None
    if len(prefix) < _LENGTH.size:
        raise TransportError("frame length: truncated length prefix")
    (length,) = _LENGTH.unpack(prefix)
    if length == 0 or length > MAX_FRAME_BYTES:
        raise TransportError(f"frame length: {length} outside (0, {MAX_FRAME_BYTES}]")
    return decode_frame(_read_exact(stream, length))


def floats_to_bytes(values: np.ndarray) -> bytes:
    """Serialize reals as little-endian 32-bit floats (the single rounding)."""
    return np.ascontiguousarray(values, dtype="<f4").tobytes()


def bytes_to_floats(raw: bytes, shape: tuple[int, ...]) -> np.ndarray:
    """Deserialize little-endian 32-bit floats into a 64-bit array."""
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise ProtocolError(f"payload: expected {expected} bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(float)


def request_frame(req: DenoiseRequest) -> bytes:
    h, w, c = req.shape
    header = {
        "version": PROTOCOL_VERSION,
        "type": "denoise",
        "h": h,
        "w": w,
        "c": c,
        "t": req.t,
        "total": req.total,
        "prompt": req.prompt,
        "azimuth_deg": req.azimuth_deg,
        "elevation_deg": req.elevation_deg,
        "seed": req.seed,
    }
    payload = floats_to_bytes(req.features) + floats_to_bytes(req.directions)
    return encode_frame(header, payload)


def parse_request(header: dict, payload: bytes) -> DenoiseRequest:
    """Build a DenoiseRequest from a decoded denoise frame."""
    try:
        h, w, c = int(header["h"]), int(header["w"]), int(header["c"])
        t, total = int(header["t"]), int(header["total"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"header: bad or missing grid field ({exc})") from None
    feature_bytes = h * w * c * 4
    if len(payload) != feature_bytes + h * w * 3 * 4:
        raise ProtocolError(
            f"payload: expected {feature_bytes + h * w * 12} bytes "
            f"for a {h}x{w}x{c} grid, got {len(payload)}"
        )
    features = bytes_to_floats(payload[:feature_bytes], (h, w, c))
    directions = bytes_to_floats(payload[feature_bytes:], (h, w, 3))
    seed = header.get("seed")
    return DenoiseRequest(
        features=features,
        coords=np.zeros((h, w, 2)),
        directions=directions,
        t=t,
        total=total,
        prompt=str(header.get("prompt", "")),
        azimuth_deg=float(header.get("azimuth_deg", 0.0)),
        elevation_deg=float(header.get("elevation_deg", 0.0)),
        seed=None if seed is None else int(seed),
    )


def result_frame(features: np.ndarray) -> bytes:
    h, w, c = features.shape
    header = {"version": PROTOCOL_VERSION, "type": "result", "h": h, "w": w, "c": c}
    return encode_frame(header, floats_to_bytes(features))


def error_frame(reason: str) -> bytes:
    return encode_frame(
        {"version": PROTOCOL_VERSION, "type": "error", "reason": reason}
    )


class RemoteDenoiser:
    """Client handle that forwards each request over one connection."""

    kind = "remote"

    def __init__(self, endpoint: str, timeout: float = 30.0):
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
        self.host = host
        self.port = int(port)
        self.timeout = timeout

    def _round_trip(self, frame: bytes) -> tuple[dict, bytes]:
        try:
            with socket.create_connection((self.host, self.port), self.timeout) as sock:
                stream = sock.makefile("rwb")
                stream.write(frame)
                stream.flush()
                answer = read_frame(stream)
        except OSError as exc:
            raise TransportError(f"endpoint {self.host}:{self.port}: {exc}") from None
        if answer is None:
            raise TransportError("frame length: connection closed before a response")
        header, payload = answer
        if header.get("version") != PROTOCOL_VERSION:
            raise VersionError(
                f"version: got {header.get('version')!r}, need {PROTOCOL_VERSION!r}"
            )
        if header.get("type") == "error":
            raise BackendError(str(header.get("reason", "unspecified error")))
        return header, payload

    def denoise(self, req: DenoiseRequest) -> np.ndarray:
        header, payload = self._round_trip(request_frame(req))
        if header.get("type") != "result":
            raise ProtocolError(f"type: expected result, got {header.get('type')!r}")
        shape = (header.get("h"), header.get("w"), header.get("c"))
        if shape != req.shape:
            raise ShapeError(f"h, w, c: response {shape} does not match request {req.shape}")
        return bytes_to_floats(payload, req.shape)

    def noise_magnitude(self, t: int, total: int) -> float:
        header, _ = self._round_trip(
            encode_frame(
                {
                    "version": PROTOCOL_VERSION,
                    "type": "noise_query",
                    "t": int(t),
                    "total": int(total),
                }
            )
        )
        if header.get("type") != "noise_magnitude":
            raise ProtocolError(
                f"type: expected noise_magnitude, got {header.get('type')!r}"
            )
        try:
            return float(header["magnitude"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"magnitude: {exc}") from None


class _LoopbackHandler(socketserver.StreamRequestHandler):
    def handle(self):
        backend = self.server.backend
        while True:
            try:
                frame = read_frame(self.rfile)
            except TransportError as exc:
                self._respond(error_frame(str(exc)))
                return
            except ProtocolError as exc:
                # Frame boundary is still intact; report and keep serving.
                self._respond(error_frame(str(exc)))
                continue
            if frame is None:
                return
            header, payload = frame
            if header.get("version") != PROTOCOL_VERSION:
                self._respond(
                    error_frame(
                        f"version: got {header.get('version')!r}, "
                        f"need {PROTOCOL_VERSION!r}"
                    )
                )
                return  # version mismatch closes the connection
            kind = header.get("type")
            try:
                if kind == "denoise":
                    req = parse_request(header, payload)
                    out = np.asarray(backend.denoise(req), dtype=float)
                    if out.shape != req.shape:
                        raise ProtocolError(
                            f"backend returned {out.shape}, expected {req.shape}"
                        )
                    self._respond(result_frame(out))
                elif kind == "noise_query":
                    t, total = int(header["t"]), int(header["total"])
                    magnitude = float(backend.noise_magnitude(t, total))
                    self._respond(
                        encode_frame(
                            {
                                "version": PROTOCOL_VERSION,
                                "type": "noise_magnitude",
                                "magnitude": magnitude,
                            }
                        )
                    )
                else:
                    self._respond(error_frame(f"type: unknown message type {kind!r}"))
            except Exception as exc:
                self._respond(error_frame(str(exc)))

    def _respond(self, frame: bytes):
        try:
            self.wfile.write(frame)
            self.wfile.flush()
        except OSError:
            pass


class LoopbackServer(socketserver.ThreadingTCPServer):
    """In-process denoiser service speaking the wire protocol.

    Serves any DenoiserHandle; used by the remote-path tests so the primary
    package needs no external service.
    """

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, backend: DenoiserHandle, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _LoopbackHandler)
        self.backend = backend
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "LoopbackServer":
        if self._thread is None:
            self._thread = threading.Thread(
                target=self.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
            )
            self._thread.start()
        return self

    def close(self):
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def __enter__(self) -> "LoopbackServer":
        return self.start()

    def __exit__(self, *exc_info):
        self.close()


def serve_loopback(backend: DenoiserHandle, host: str = "127.0.0.1",
                   port: int = 0) -> LoopbackServer:
    """Start a loopback server thread; the caller closes it (context manager)."""
    return LoopbackServer(backend, host, port).start()


def make_denoiser(spec: str) -> DenoiserHandle:
    """Build a denoiser handle from a CLI-style spec string.

    Accepted: "identity" (alias "echo"), "constant" or "constant:<value>",
    "analytic", "scheduler", "remote:<host>:<port>".
    """
    name, _, arg = spec.partition(":")
    if name in ("identity", "echo"):
        return IdentityDenoiser()
    if name == "constant":
        return ConstantDenoiser(float(arg) if arg else 0.0)
    if name == "analytic":
        return AnalyticDenoiser()
    if name == "scheduler":
        return SchedulerDenoiser()
    if name == "remote":
        if not arg:
            raise ValueError("remote denoiser needs an endpoint: remote:<host>:<port>")
        return RemoteDenoiser(arg)
    raise ValueError(f"unknown denoiser kind {name!r}")


def main(argv=None) -> int:
    """Run a loopback server from the command line (for manual testing)."""
    import argparse

    parser = argparse.ArgumentParser(
        description="Serve a mock denoiser over the wire protocol."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7431)
    parser.add_argument("--backend", default="echo",
                        help="identity|echo|constant[:v]|analytic|scheduler")
    args = parser.parse_args(argv)
    server = LoopbackServer(make_denoiser(args.backend), args.host, args.port)
    print(f"serving {args.backend} on {server.endpoint}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
