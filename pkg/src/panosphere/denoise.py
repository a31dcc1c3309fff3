"""The denoiser contract and its in-process mock implementations.

A denoiser consumes one perspective grid per call and returns a denoised grid
of the same shape. The engine never embeds a real diffusion model; mocks with
known closed forms stand in for it during tests, and a remote handle (see
`panosphere.wire`) forwards requests to an out-of-process backend over the
wire protocol.

Every handle exposes:
  denoise(req) -> (H, W, C) array
  noise_magnitude(t, total) -> float   # relative noise level at timestep t
The mocks report noise_magnitude = t / total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

TargetFn = Callable[[np.ndarray, str], np.ndarray]


@dataclass
class DenoiseRequest:
    """One grid-in, grid-out denoising call for a single view and timestep."""

    features: np.ndarray        # (H, W, C)
    coords: np.ndarray          # (H, W, 2) projected coordinate per cell
    directions: np.ndarray      # (H, W, 3) source direction per cell
    t: int                      # current timestep, counts down to 1
    total: int                  # total number of steps T
    prompt: str = ""
    azimuth_deg: float = 0.0
    elevation_deg: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 3:
            raise ValueError("features must have shape (H, W, C)")
        h, w, c = self.features.shape
        if min(h, w, c) < 1:
            raise ValueError("grid dimensions must be positive")
        self.coords = np.asarray(self.coords, dtype=float)
        self.directions = np.asarray(self.directions, dtype=float)
        if self.coords.shape != (h, w, 2):
            raise ValueError("coords must have shape (H, W, 2)")
        if self.directions.shape != (h, w, 3):
            raise ValueError("directions must have shape (H, W, 3)")
        if not 1 <= self.t <= self.total:
            raise ValueError("timestep must satisfy 1 <= t <= total")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.features.shape


class DenoiserHandle(Protocol):
    kind: str

    def denoise(self, req: DenoiseRequest) -> np.ndarray: ...

    def noise_magnitude(self, t: int, total: int) -> float: ...


def default_target(directions: np.ndarray, prompt: str, channels: int) -> np.ndarray:
    """The stock analytic target g(d): the direction itself, zero-padded to C.

    Smooth and seam-free on the sphere, so converged outputs make continuous
    panoramas. Ignores the prompt.
    """
    directions = np.asarray(directions, dtype=float)
    out = np.zeros(directions.shape[:-1] + (channels,))
    out[..., : min(3, channels)] = directions[..., : min(3, channels)]
    return out


def _resolve_target(g: TargetFn | None, req: DenoiseRequest) -> np.ndarray:
    if g is None:
        target = default_target(req.directions, req.prompt, req.shape[2])
    else:
        target = np.asarray(g(req.directions, req.prompt), dtype=float)
    if target.shape != req.shape:
        raise ValueError(
            f"target shape {target.shape} does not match grid {req.shape}"
        )
    return target


class IdentityDenoiser:
    """Returns the input grid unchanged."""

    kind = "identity"

    def denoise(self, req: DenoiseRequest) -> np.ndarray:
        return req.features.copy()

    def noise_magnitude(self, t: int, total: int) -> float:
        return t / total


class ConstantDenoiser:
    """Returns the same constant vector in every cell."""

    kind = "constant"

    def __init__(self, value):
        self.value = np.atleast_1d(np.asarray(value, dtype=float))

    def denoise(self, req: DenoiseRequest) -> np.ndarray:
        h, w, c = req.shape
        if self.value.size == 1:
            cell = np.full(c, self.value[0])
        elif self.value.size == c:
            cell = self.value
        else:
            raise ValueError(f"constant has {self.value.size} channels, grid has {c}")
        return np.broadcast_to(cell, (h, w, c)).copy()

    def noise_magnitude(self, t: int, total: int) -> float:
        return t / total


class AnalyticDenoiser:
    """Jumps straight to the target g(direction, prompt) in every cell."""

    kind = "analytic"

    def __init__(self, g: TargetFn | None = None):
        self.g = g

    def denoise(self, req: DenoiseRequest) -> np.ndarray:
        return _resolve_target(self.g, req)

    def noise_magnitude(self, t: int, total: int) -> float:
        return t / total


class SchedulerDenoiser:
    """Moves a 1/t fraction of the way toward the target each step.

    out = f + (g - f) / t, so the distance to g contracts by (1 - 1/t) per
    step and the final t = 1 step lands exactly on g.
    """

    kind = "scheduler"

    def __init__(self, g: TargetFn | None = None):
        self.g = g

    def denoise(self, req: DenoiseRequest) -> np.ndarray:
        target = _resolve_target(self.g, req)
        if req.t == 1:
            return target
        return req.features + (target - req.features) / req.t

    def noise_magnitude(self, t: int, total: int) -> float:
        return t / total


def denoise(handle: DenoiserHandle, req: DenoiseRequest) -> np.ndarray:
    """Run one denoising call and validate the returned shape."""
    out = np.asarray(handle.denoise(req), dtype=float)
    if out.shape != req.shape:
        raise ValueError(
            f"denoiser returned shape {out.shape}, expected {req.shape}"
        )
    return out
