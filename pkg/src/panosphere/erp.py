"""Equirectangular compositing and rendering.

An ERP raster is width = 2 * height with row 0 at the upward pole and
column 0 at azimuth 0 (see `panosphere.geometry` for the pixel-center
mapping). Compositing decodes each scheduled view's grid to a small raster,
then blends the per-view rasters into the ERP with the same center-weighted
kernels the fusion step uses. Rendering goes the other way: perspective
views are bilinearly resampled out of an ERP, with azimuthal wrap-around
at the seam and clamping at the poles.
"""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image

from .fusion import BetaKernel, ViewSpec, view_grid, weight_map
from .geometry import CameraModel, erp_pixel_dirs, erp_shape, in_frame, project_dirs
from .latents import PerspectiveGrid, SphericalLatentSet

# The standard evaluation set: four azimuths at three elevations, plus the
# two poles, rendered with a 90 degree field of view.
EVAL_VIEW_ANGLES: tuple[tuple[float, float], ...] = tuple(
    (azimuth, elevation)
    for elevation in (-45.0, 0.0, 45.0)
    for azimuth in (0.0, 90.0, 180.0, 270.0)
) + ((0.0, -90.0), (0.0, 90.0))
EVAL_VIEW_FOV_DEG = 90.0


def bilinear_sample(raster: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Sample a raster at normalized [-1, 1]^2 coordinates, edge-clamped.

    Pixel centers map to u = (col + 0.5) / width * 2 - 1 (and likewise for
    rows), matching the grid-cell layout used by the samplers.
    """
    h, w = raster.shape[:2]
    uv = np.asarray(uv, dtype=float)
    x = np.clip((uv[..., 0] + 1.0) / 2.0 * w - 0.5, 0.0, w - 1.0)
    y = np.clip((uv[..., 1] + 1.0) / 2.0 * h - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    top = raster[y0, x0] * (1.0 - fx) + raster[y0, x1] * fx
    bottom = raster[y1, x0] * (1.0 - fx) + raster[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def _resolved_kernel(view: ViewSpec, grid: PerspectiveGrid):
    """Pin a beta kernel's d_max to the grid it was built from."""
    kernel = view.kernel
    if isinstance(kernel, BetaKernel) and kernel.d_max is None:
        norms = np.linalg.norm(grid.coords, axis=-1)[grid.occupancy]
        d_max = float(norms.max()) if norms.size else 1.0
        return BetaKernel(b=kernel.b, d_max=d_max)
    return kernel


def compose_erp(s: SphericalLatentSet, views: list[ViewSpec], decoder,
                height: int) -> tuple[np.ndarray, int]:
    """Blend per-view decoded rasters into an ERP image.

    decoder maps a PerspectiveGrid to an (h, w, k) raster. Every ERP pixel
    becomes the kernel-weighted average of the views whose frustum contains
    its direction; pixels no view covers are zero-filled and counted.
    Returns (erp, hole_count).
    """
    if not views:
        raise ValueError("views: need at least one view")
    h, w = erp_shape(height)
    dirs = erp_pixel_dirs(height).reshape(-1, 3)

    accum = None
    weight_total = np.zeros(dirs.shape[0])
    for view in views:
        grid = view_grid(s, view)
        raster = np.asarray(decoder(grid), dtype=float)
        if raster.ndim == 2:
            raster = raster[..., None]
        if accum is None:
            accum = np.zeros((dirs.shape[0], raster.shape[2]))
        elif raster.shape[2] != accum.shape[1]:
            raise ValueError("decoded rasters disagree on channel count")
        kernel = _resolved_kernel(view, grid)
        uv, frontal = project_dirs(dirs, view.camera)
        mask = in_frame(uv, frontal)
        uv_in = uv[mask]
        weights = kernel.weights(np.linalg.norm(uv_in, axis=-1))
        accum[mask] += weights[:, None] * bilinear_sample(raster, uv_in)
        weight_total[mask] += weights

    covered = weight_total > 0.0
    erp = np.zeros_like(accum)
    erp[covered] = accum[covered] / weight_total[covered, None]
    holes = int(np.count_nonzero(~covered))
    return erp.reshape(h, w, -1), holes


def erp_to_perspective(img: np.ndarray, cam: CameraModel, height: int,
                       width: int) -> np.ndarray:
    """Render a pinhole view of an ERP image by bilinear resampling.

    Azimuth wraps across the seam; elevation clamps at the pole rows.
    """
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        img = img[..., None]
    erp_h, erp_w = img.shape[:2]
    u = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    v = (np.arange(height) + 0.5) / height * 2.0 - 1.0
    uu, vv = np.meshgrid(u, v)
    rays = np.stack([uu / cam.focal, vv / cam.focal, np.ones_like(uu)], axis=-1)
    rays /= np.linalg.norm(rays, axis=-1, keepdims=True)
    dirs = rays @ cam.rotation

    elevation = np.degrees(np.arcsin(np.clip(dirs[..., 1], -1.0, 1.0)))
    azimuth = np.degrees(np.arctan2(dirs[..., 0], dirs[..., 2])) % 360.0
    col = azimuth / 360.0 * erp_w - 0.5
    row = np.clip((elevation + 90.0) / 180.0 * erp_h - 0.5, 0.0, erp_h - 1.0)

    col0 = np.floor(col).astype(int)
    fx = (col - col0)[..., None]
    col1 = (col0 + 1) % erp_w
    col0 %= erp_w
    row0 = np.floor(row).astype(int)
    row1 = np.minimum(row0 + 1, erp_h - 1)
    fy = (row - row0)[..., None]
    top = img[row0, col0] * (1.0 - fx) + img[row0, col1] * fx
    bottom = img[row1, col0] * (1.0 - fx) + img[row1, col1] * fx
    return top * (1.0 - fy) + bottom * fy


def eval_views(fov_deg: float = EVAL_VIEW_FOV_DEG) -> list[CameraModel]:
    """Cameras for the standard 14-view evaluation set."""
    return [
        CameraModel.from_angles(azimuth, elevation, fov_deg)
        for azimuth, elevation in EVAL_VIEW_ANGLES
    ]


def mock_decode(grid: PerspectiveGrid) -> np.ndarray:
    """Stand-in decoder: first three channels mapped affinely [-1,1] -> [0,1]."""
    if grid.features.shape[2] < 3:
        raise ValueError("mock decoding needs at least 3 channels")
    return (np.clip(grid.features[..., :3], -1.0, 1.0) + 1.0) / 2.0


def mock_encode(raster: np.ndarray) -> np.ndarray:
    """Inverse of mock_decode on its range: [0,1] display -> [-1,1] features."""
    return np.asarray(raster, dtype=float) * 2.0 - 1.0


def quantize(raster: np.ndarray) -> np.ndarray:
    """[0,1] float raster to 8-bit, rounding half up."""
    scaled = np.floor(np.asarray(raster, dtype=float) * 255.0 + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def save_png(path, raster: np.ndarray):
    """Write a [0,1] float raster (H, W, 3) or (H, W) as an 8-bit PNG."""
    data = quantize(raster)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[..., 0]
    Image.fromarray(data).save(path, format="PNG")


def load_png(path) -> np.ndarray:
    """Read a PNG into a [0,1] float raster with a channel axis."""
    with Image.open(path) as img:
        data = np.asarray(img, dtype=float) / 255.0
    if data.ndim == 2:
        data = data[..., None]
    return data


_RASTER_HEADER = struct.Struct("<III")


def save_raster(path, raster: np.ndarray):
    """Write a float raster: three little-endian uint32 dims (h, w, c), then
    h*w*c little-endian 32-bit floats, row-major, channels innermost."""
    raster = np.asarray(raster, dtype=float)
    if raster.ndim == 2:
        raster = raster[..., None]
    if raster.ndim != 3:
        raise ValueError("raster must have shape (H, W) or (H, W, C)")
    h, w, c = raster.shape
    with open(path, "wb") as fh:
        fh.write(_RASTER_HEADER.pack(h, w, c))
        fh.write(np.ascontiguousarray(raster, dtype="<f4").tobytes())


def load_raster(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_RASTER_HEADER.size)
        if len(header) < _RASTER_HEADER.size:
            raise ValueError(f"{path}: truncated raster header")
        h, w, c = _RASTER_HEADER.unpack(header)
        data = fh.read(h * w * c * 4)
    if len(data) < h * w * c * 4:
        raise ValueError(f"{path}: truncated raster payload")
    return np.frombuffer(data, dtype="<f4").reshape(h, w, c).astype(float)
