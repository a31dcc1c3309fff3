"""Spherical-latent panorama pipeline.

Uniform sphere lattices, spherical-to-perspective projection, dynamic latent
sampling, distortion-aware multi-view fusion behind a pluggable denoiser
contract, equirectangular compositing, and the evaluation kit that scores the
results.
"""

from .config import (
    ForegroundView,
    PipelineConfig,
    PromptSet,
    RING_LAYOUT,
    load_config,
    save_config,
)
from .denoise import (
    AnalyticDenoiser,
    ConstantDenoiser,
    DenoiseRequest,
    IdentityDenoiser,
    SchedulerDenoiser,
    default_target,
    denoise,
)
from .erp import (
    compose_erp,
    erp_to_perspective,
    eval_views,
    load_png,
    load_raster,
    mock_decode,
    save_png,
    save_raster,
)
from .evalkit import (
    band_curvature,
    cap_counts,
    continuity_report,
    degrade_discontinuity,
    degrade_distortion,
    end_continuity_error,
    lattice_uniformity_report,
    stripe_pattern_erp,
)
from .fusion import (
    BetaKernel,
    ExponentialKernel,
    PipelineResult,
    ViewSpec,
    condition_map,
    condition_slot,
    fuse_step,
    generate_view_schedule,
    refine,
    ring_directions,
    run_pipeline,
    weight_map,
)
from .geometry import (
    CameraModel,
    angles_to_dirs,
    dirs_to_angles,
    distortion_ratio,
    erp_pixel_dirs,
    fibonacci_lattice,
    focal_from_fov,
    perspective_to_spherical,
    project_dirs,
    spherical_to_perspective,
)
from .latents import (
    PerspectiveGrid,
    ProjectedLatentSet,
    SphericalLatentSet,
    dynamic_grid_side,
    dynamic_latent_sampling,
    make_latent_set,
    nearest_point_sampling,
    project_latents,
)
from .wire import LoopbackServer, RemoteDenoiser, make_denoiser, serve_loopback

__version__ = "0.1.0"
