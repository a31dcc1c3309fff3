"""
Uniform sphere lattices and perspective sampling
================================================

Walks the geometry half of the pipeline: build an evenly spread set of
directions on the unit sphere, check how even it actually is, project it
through a pinhole camera, and arrange the visible points into the square
grid a denoiser consumes.

Run with: python3 demos/01_sphere_sampling.py
"""

import numpy as np

from panosphere import (
    CameraModel,
    dynamic_latent_sampling,
    fibonacci_lattice,
    lattice_uniformity_report,
    make_latent_set,
    project_latents,
)

# Stage 1: a lattice of 2600 directions, one golden-angle turn per step.
dirs = fibonacci_lattice(2600)
print("stage 1: lattice")
print(f"  points: {len(dirs)}")
print(f"  all unit length: {bool(np.allclose(np.linalg.norm(dirs, axis=1), 1.0))}")

# Stage 2: score the spread. Count points inside 40-degree caps around a
# standard set of axes; an even layout keeps the counts tight around the
# analytic expectation, an equirectangular grid of the same size does not.
report = lattice_uniformity_report(dirs)
print("stage 2: uniformity")
print(f"  cap counts over {report['axes']} axes: "
      f"mean {report['mean']:.1f} (analytic {report['expected_mean']:.1f}), "
      f"range {report['min']}..{report['max']}")
print(f"  cov: {report['cov']:.5f} (equirectangular grid of the same size: "
      f"{report['erp_cov']:.5f}, {report['cov_ratio']:.1f}x worse)")

# Stage 3: attach feature channels and look through one camera. Latents
# behind the camera or outside the [-1, 1] image square drop out.
s = make_latent_set(2600, channels=4, seed=7)
cam = CameraModel.from_angles(azimuth_deg=48.0, elevation_deg=22.5, fov_deg=80.0)
projected = project_latents(s, cam)
print("stage 3: projection")
print(f"  visible latents: {len(projected)} of {s.size}")
norms = np.hypot(projected.coords[:, 0], projected.coords[:, 1])
print(f"  radial span: {norms.min():.3f} .. {norms.max():.3f}")

# Stage 4: snap the visible latents onto a square grid, closest to the
# optical axis first, ring by ring outward. Each latent lands in at most
# one cell, so no feature is counted twice downstream.
grid = dynamic_latent_sampling(projected)
print("stage 4: dynamic grid")
print(f"  side: {grid.height} (largest even side {len(projected)} visible"
      " latents can fill)")
print(f"  occupied cells: {int(grid.occupancy.sum())} / {grid.height * grid.width}")
used = grid.source_index[grid.occupancy]
print(f"  duplicate sources: {len(used) - len(np.unique(used))}")
kept = np.sort(norms)[: used.size]
chosen = np.sort(norms[np.isin(projected.indices, used)])
print(f"  selected latents are the innermost: {bool(np.allclose(chosen, kept))}")
