"""
Swapping the in-process denoiser for a remote one
=================================================

The pipeline only sees a handle with denoise() and noise_magnitude()
methods, so a socket client satisfies the same contract as a local mock.
This script serves a scheduler mock over a loopback TCP port, drives the
same request through both paths, and shows the answers agree to the last
bit after the single float32 rounding the protocol performs.

Run with: python3 demos/03_remote_denoiser.py
"""

import numpy as np

from panosphere import (
    CameraModel,
    RemoteDenoiser,
    SchedulerDenoiser,
    denoise,
    dynamic_latent_sampling,
    make_latent_set,
    project_latents,
    serve_loopback,
)
from panosphere.denoise import DenoiseRequest

# Stage 1: build one request the way the pipeline would: project the
# sphere into a camera and arrange the visible latents into a grid.
s = make_latent_set(900, channels=4, seed=21)
cam = CameraModel.from_angles(azimuth_deg=120.0, elevation_deg=-22.5, fov_deg=80.0)
grid = dynamic_latent_sampling(project_latents(s, cam))
directions = np.zeros(grid.features.shape[:2] + (3,))
directions[grid.occupancy] = s.directions[grid.source_index[grid.occupancy]]
request = DenoiseRequest(
    features=grid.features.astype(np.float32).astype(np.float64),
    coords=grid.coords,
    directions=directions.astype(np.float32).astype(np.float64),
    t=6,
    total=10,
    prompt="street",
)
print("stage 1: request")
print(f"  grid {grid.height}x{grid.width}, timestep {request.t} of {request.total}")

# Stage 2: answer it locally.
local = SchedulerDenoiser()
local_out = denoise(local, request)
print("stage 2: local scheduler mock")
print(f"  output mean {local_out.mean():+.6f}")

# Stage 3: serve the same mock on a loopback socket and answer through it.
# The server binds an ephemeral port; the client speaks length-prefixed
# frames with a JSON header and a float32 payload.
with serve_loopback(SchedulerDenoiser()) as server:
    print("stage 3: remote scheduler mock")
    print(f"  endpoint {server.endpoint}")
    remote = RemoteDenoiser(server.endpoint)
    remote_out = denoise(remote, request)
    magnitude = remote.noise_magnitude(request.t, request.total)
print(f"  output mean {remote_out.mean():+.6f}, noise magnitude {magnitude}")

# Stage 4: the wire carries float32, so compare after rounding the local
# answer once. Equality is exact, not approximate.
rounded_local = local_out.astype(np.float32).astype(np.float64)
print("stage 4: agreement")
print(f"  bit-identical after one float32 rounding: "
      f"{bool(np.array_equal(rounded_local, remote_out))}")
