"""Distortion-aware weighted fusion of per-view denoising results.

Each denoising step projects the spherical latents into every scheduled view,
arranges them on square grids, denoises each grid once, and blends the
per-view results back onto the sphere as a per-latent weighted average. The
weights decay with distance from each view's image center, so the undistorted
center of one view dominates the stretched periphery of its neighbors.

Determinism contract: contributions to a latent are reduced in a canonical
order derived from the views' content (direction, kernel, prompt slot), never
from their list position, so permuting the view list reproduces results
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig, PromptSet
from .denoise import DenoiseRequest, DenoiserHandle, denoise
from .geometry import CameraModel, angles_to_dirs
from .latents import (
    PerspectiveGrid,
    SphericalLatentSet,
    dynamic_latent_sampling,
    make_latent_set,
    project_latents,
)

PROMPT_ANCHORS = {
    "top": -90.0,
    "upper": -10.0,
    "middle": 0.0,
    "lower": 10.0,
    "bottom": 90.0,
}


@dataclass(frozen=True)
class ExponentialKernel:
    """weight = exp(-||u|| / tau); 1 at the image center, decaying outward."""

    tau: float = 0.5

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError("tau: must be positive")

    def weights(self, norms: np.ndarray) -> np.ndarray:
        return np.exp(-np.asarray(norms, dtype=float) / self.tau)


@dataclass(frozen=True)
class BetaKernel:
    """weight = (1 - x)^(4 e^b) with x = min(||u|| / d_max, 1).

    Flat near the center and zero from d_max outward; used for foreground
    views so their subject stays dominant. d_max = None means "resolve to
    the largest selected ||u|| of the grid being weighted".
    """

    b: float = -3.0
    d_max: float | None = None

    def __post_init__(self):
        if self.d_max is not None and self.d_max <= 0.0:
            raise ValueError("d_max: must be positive")

    @property
    def exponent(self) -> float:
        return 4.0 * math.exp(self.b)

    def weights(self, norms: np.ndarray, d_max: float | None = None) -> np.ndarray:
        scale = self.d_max if self.d_max is not None else d_max
        if scale is None or scale <= 0.0:
            raise ValueError("d_max: must be positive")
        x = np.minimum(np.asarray(norms, dtype=float) / scale, 1.0)
        return (1.0 - x) ** self.exponent


WeightKernel = ExponentialKernel | BetaKernel


def weight_map(kernel: WeightKernel, grid: PerspectiveGrid) -> np.ndarray:
    """Per-cell blend weights evaluated at each cell's projected coordinate."""
    norms = np.linalg.norm(grid.coords, axis=-1)
    if isinstance(kernel, BetaKernel):
        d_max = kernel.d_max
        if d_max is None:
            occupied_norms = norms[grid.occupancy]
            d_max = float(occupied_norms.max()) if occupied_norms.size else 1.0
        weights = kernel.weights(norms, d_max=d_max)
    else:
        weights = kernel.weights(norms)
    return np.where(grid.occupancy, weights, 0.0)


def condition_slot(elevation_deg: float) -> str:
    """The prompt slot whose anchor elevation is nearest; ties prefer the
    smaller-magnitude anchor (the denser prompts near the horizon)."""
    return min(
        PROMPT_ANCHORS,
        key=lambda slot: (
            abs(elevation_deg - PROMPT_ANCHORS[slot]),
            abs(PROMPT_ANCHORS[slot]),
        ),
    )


def condition_map(prompts: PromptSet, view_direction: np.ndarray) -> str:
    """Resolve the prompt slot for a (non-foreground) view direction."""
    d = np.asarray(view_direction, dtype=float).reshape(3)
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, d[1]))))
    return condition_slot(elevation)


@dataclass(frozen=True, eq=False)
class ViewSpec:
    """One scheduled view: a camera, a blend kernel, and a prompt slot."""

    camera: CameraModel
    kernel: WeightKernel
    prompt_slot: str
    is_foreground: bool = False

    def sort_key(self):
        """Canonical ordering key, a function of content only (never of the
        view's position in a schedule list)."""
        if isinstance(self.kernel, BetaKernel):
            kernel_key = ("beta", self.kernel.b, self.kernel.d_max or 0.0)
        else:
            kernel_key = ("exponential", self.kernel.tau, 0.0)
        return (
            self.camera.elevation_deg,
            self.camera.azimuth_deg,
            self.camera.focal,
            self.is_foreground,
            kernel_key,
            self.prompt_slot,
        )


def ring_directions(rings) -> np.ndarray:
    """Unit view directions of a ring schedule, shape (sum(counts), 3)."""
    azimuths, elevations = [], []
    for elevation, count in rings:
        for k in range(int(count)):
            azimuths.append(360.0 * k / count)
            elevations.append(elevation)
    return angles_to_dirs(np.array(azimuths), np.array(elevations))


def generate_view_schedule(cfg: PipelineConfig) -> list[ViewSpec]:
    """Build the view list: the ring schedule, then any foreground views."""
    if not cfg.rings:
        raise ValueError("rings: schedule must name at least one ring")
    kernel = ExponentialKernel(tau=cfg.tau)
    views = []
    for elevation, count in cfg.rings:
        for k in range(int(count)):
            camera = CameraModel.from_angles(360.0 * k / count, elevation, cfg.fov_deg)
            views.append(
                ViewSpec(
                    camera=camera,
                    kernel=kernel,
                    prompt_slot=condition_slot(elevation),
                )
            )
    for index, fg in enumerate(cfg.foreground):
        camera = CameraModel.from_angles(fg.azimuth_deg, fg.elevation_deg, cfg.fov_deg)
        views.append(
            ViewSpec(
                camera=camera,
                kernel=BetaKernel(b=fg.b),
                prompt_slot=f"foreground:{index}",
                is_foreground=True,
            )
        )
    return views


def view_grid(s: SphericalLatentSet, view: ViewSpec) -> PerspectiveGrid:
    """Project the latent set into a view and arrange it dynamically."""
    return dynamic_latent_sampling(project_latents(s, view.camera))


def build_request(s: SphericalLatentSet, view: ViewSpec, grid: PerspectiveGrid,
                  prompts: PromptSet, t: int, total: int,
                  seed: int | None = None) -> DenoiseRequest:
    directions = s.directions[np.clip(grid.source_index, 0, None)]
    directions = np.where(grid.occupancy[..., None], directions, 0.0)
    return DenoiseRequest(
        features=grid.features,
        coords=grid.coords,
        directions=directions,
        t=t,
        total=total,
        prompt=prompts.resolve(view.prompt_slot),
        azimuth_deg=view.camera.azimuth_deg,
        elevation_deg=view.camera.elevation_deg,
        seed=seed,
    )


@dataclass
class StepStats:
    """Coverage bookkeeping for one fusion step."""

    covered: int                 # latents selected by at least one view
    uncovered: int
    contributions: np.ndarray    # (N,) number of views selecting each latent
    weight_sums: np.ndarray      # (N,) accumulated unnormalized weights


def fuse_step(s: SphericalLatentSet, views: list[ViewSpec], prompts: PromptSet,
              handle: DenoiserHandle, t: int, total: int,
              seed: int | None = None,
              return_stats: bool = False):
    """One spherical fusion step: denoise every view, blend per latent.

    Per latent the update is f + sum(w * (x - f)) / sum(w) over the views
    that selected it, which equals the weighted average of the per-view
    outputs x but keeps f bit-exact whenever every x equals f. Latents
    selected by no view are carried unchanged.
    """
    if not views:
        raise ValueError("views: schedule must not be empty")
    if not 1 <= t <= total:
        raise ValueError("timestep must satisfy 1 <= t <= total")

    # Canonical processing order, so the per-latent contribution sequences
    # (and therefore every floating-point sum) ignore the list order.
    ordered = sorted(views, key=ViewSpec.sort_key)

    index_parts, weight_parts, delta_parts = [], [], []
    contributions = np.zeros(s.size, dtype=int)
    for view in ordered:
        grid = view_grid(s, view)
        req = build_request(s, view, grid, prompts, t, total, seed)
        out = denoise(handle, req)
        weights = weight_map(view.kernel, grid)
        mask = grid.occupancy
        idx = grid.source_index[mask]
        index_parts.append(idx)
        weight_parts.append(weights[mask])
        delta_parts.append(out[mask] - s.features[idx])
        contributions[idx] += 1

    idx_all = np.concatenate(index_parts)
    w_all = np.concatenate(weight_parts)
    delta_all = np.concatenate(delta_parts) * w_all[:, None]

    # Stable sort by latent keeps the canonical view order within each group.
    order = np.argsort(idx_all, kind="stable")
    idx_sorted = idx_all[order]
    starts = np.flatnonzero(np.r_[True, idx_sorted[1:] != idx_sorted[:-1]])
    covered = idx_sorted[starts]
    delta_sums = np.add.reduceat(delta_all[order], starts, axis=0)
    weight_sums = np.add.reduceat(w_all[order], starts)

    base = s.features[covered]
    blended = np.where(
        delta_sums == 0.0, base, base + delta_sums / weight_sums[:, None]
    )
    features = s.features.copy()
    features[covered] = blended

    fused = SphericalLatentSet(s.directions, features, rng_seed=s.rng_seed)
    if not return_stats:
        return fused
    totals = np.zeros(s.size)
    totals[covered] = weight_sums
    stats = StepStats(
        covered=int(covered.size),
        uncovered=int(s.size - covered.size),
        contributions=contributions,
        weight_sums=totals,
    )
    return fused, stats


@dataclass
class PipelineResult:
    """Output of a full denoising run."""

    latents: SphericalLatentSet
    views: list[ViewSpec]
    coverage: list[StepStats]


def run_pipeline(cfg: PipelineConfig, prompts: PromptSet,
                 handle: DenoiserHandle) -> PipelineResult:
    """Denoise from seeded Gaussian noise down to S_0 under the schedule."""
    views = generate_view_schedule(cfg)
    s = make_latent_set(cfg.lattice_size, cfg.channels, cfg.seed)
    coverage = []
    for t in range(cfg.total_steps, 0, -1):
        s, stats = fuse_step(
            s, views, prompts, handle, t, cfg.total_steps,
            seed=cfg.seed, return_stats=True,
        )
        coverage.append(stats)
    return PipelineResult(latents=s, views=views, coverage=coverage)


def refine(s: SphericalLatentSet, noise_level: float, handle: DenoiserHandle,
           cfg: PipelineConfig, prompts: PromptSet) -> SphericalLatentSet:
    """Noise-to-denoise refinement: perturb a finished S_0, redo late steps.

    The resume timestep is round(noise_level * T); the perturbation magnitude
    is whatever the denoiser reports for that timestep, so remote backends
    control their own noise scale.
    """
    if not 0.0 < noise_level < 1.0:
        raise ValueError("noise_level: must lie strictly between 0 and 1")
    t_resume = int(round(noise_level * cfg.total_steps))
    if t_resume < 1:
        return SphericalLatentSet(s.directions, s.features.copy(), s.rng_seed)
    magnitude = float(handle.noise_magnitude(t_resume, cfg.total_steps))
    rng = np.random.default_rng(None if cfg.seed is None else (cfg.seed, 1))
    features = s.features + magnitude * rng.standard_normal(s.features.shape)
    noised = SphericalLatentSet(s.directions, features, rng_seed=s.rng_seed)
    views = generate_view_schedule(cfg)
    for t in range(t_resume, 0, -1):
        noised = fuse_step(noised, views, prompts, handle, t, cfg.total_steps,
                           seed=cfg.seed)
    return noised
