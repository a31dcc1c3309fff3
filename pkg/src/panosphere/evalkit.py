"""Synthetic degradations and the numeric metrics that score them.

The kit substitutes deterministic numbers for the human and VLM judgments a
full evaluation would use: a seam metric that worsens under vertical-shift
discontinuities, a stripe-curvature metric that worsens under elevation-shift
distortions, and cap-count statistics that quantify how uniformly a point set
covers the sphere.
"""

from __future__ import annotations

import math

import numpy as np

from .config import RING_LAYOUT
from .erp import erp_to_perspective
from .fusion import ring_directions
from .geometry import CameraModel, angles_to_dirs


def degrade_discontinuity(raster: np.ndarray, shift_px: int) -> np.ndarray:
    """Shift the left half of a raster down by shift_px rows, edge-clamped."""
    raster = np.asarray(raster, dtype=float)
    h = raster.shape[0]
    shift = int(shift_px)
    if not 0 <= shift < h:
        raise ValueError("shift_px must satisfy 0 <= shift < image height")
    out = raster.copy()
    half = raster.shape[1] // 2
    rows = np.clip(np.arange(h) - shift, 0, h - 1)
    out[:, :half] = raster[rows, :half]
    return out


def degrade_distortion(erp: np.ndarray, elevation_shift_deg: float,
                       fov_deg: float = 90.0, size: int = 512,
                       azimuth_deg: float = 0.0,
                       base_elevation_deg: float = 0.0) -> np.ndarray:
    """Render a perspective view with the camera tilted toward the upward pole.

    The camera elevation is base - shift (negative elevation looks up), so a
    larger shift drags more high-latitude content into the frame.
    """
    shift = float(elevation_shift_deg)
    if not 0.0 <= shift < 90.0:
        raise ValueError("elevation_shift must lie in [0, 90) degrees")
    cam = CameraModel.from_angles(azimuth_deg, base_elevation_deg - shift, fov_deg)
    return erp_to_perspective(erp, cam, size, size)


def _column_mads(img: np.ndarray) -> np.ndarray:
    """Mean absolute difference between each column and its cyclic successor."""
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        img = img[..., None]
    if img.shape[1] < 2:
        raise ValueError("need at least two columns")
    return np.abs(np.roll(img, -1, axis=1) - img).mean(axis=(0, 2))


def end_continuity_error(img: np.ndarray) -> float:
    """Largest adjacent-column mean absolute difference, taken cyclically.

    The wrap pair (last column, first column) participates like any other
    adjacent pair, which makes the metric exactly invariant under horizontal
    rotation by whole pixels: a seam scores the same wherever it sits.
    """
    return float(_column_mads(img).max())


def continuity_report(img: np.ndarray) -> dict:
    """Seam and pole continuity numbers for one raster.

    border_wrap is the literal first-vs-last column difference (the border
    continuity bound is checked against this); seam_max is the roll-invariant
    cyclic maximum; the pole terms are the standard deviations of the top and
    bottom pixel rows.
    """
    arr = np.asarray(img, dtype=float)
    if arr.ndim == 2:
        arr = arr[..., None]
    mads = _column_mads(arr)
    # Pole rows should be constant along the row; the spread is measured per
    # channel and the worst channel reported.
    return {
        "border_wrap": float(mads[-1]),
        "seam_max": float(mads.max()),
        "pole_top_std": float(arr[0].std(axis=0).max()),
        "pole_bottom_std": float(arr[-1].std(axis=0).max()),
    }


def stripe_pattern_erp(height: int, boundaries_deg) -> np.ndarray:
    """Binary latitude bands: value flips at each boundary elevation.

    Returns an (height, 2*height, 1) raster of 0.0 and 1.0 whose band edges
    are circles of constant elevation.
    """
    boundaries = np.sort(np.asarray(boundaries_deg, dtype=float))
    elevation = -90.0 + 180.0 * (np.arange(height) + 0.5) / height
    band = np.searchsorted(boundaries, elevation)
    column = (band % 2).astype(float)
    return np.tile(column[:, None, None], (1, 2 * height, 1))


def _column_crossings(profile: np.ndarray, threshold: float) -> list[np.ndarray]:
    """Per-column subpixel rows where the profile crosses the threshold."""
    above = profile >= threshold
    out = []
    for c in range(profile.shape[1]):
        col = profile[:, c]
        flips = np.flatnonzero(above[1:, c] != above[:-1, c])
        if flips.size:
            frac = (threshold - col[flips]) / (col[flips + 1] - col[flips])
            out.append(flips + frac)
        else:
            out.append(np.empty(0))
    return out


def band_curvature(raster: np.ndarray, threshold: float = 0.5) -> float:
    """How far stripe edges bend from straight lines, as a fraction of height.

    Per column, the subpixel threshold crossings of the first channel are
    collected; columns with the modal crossing count form rank-aligned edge
    tracks; each track gets a least-squares line; the metric is the mean RMS
    residual over tracks, normalized by the raster height. Zero for perfectly
    straight edges, growing as the projected latitude circles curve.
    """
    arr = np.asarray(raster, dtype=float)
    if arr.ndim == 3:
        arr = arr[..., 0]
    h, w = arr.shape
    crossings = _column_crossings(arr, threshold)
    counts = np.array([len(c) for c in crossings])
    if counts.max(initial=0) == 0:
        return 0.0
    modal = np.bincount(counts[counts > 0]).argmax()
    cols = np.flatnonzero(counts == modal)
    if cols.size < 3:
        return 0.0
    tracks = np.stack([crossings[c] for c in cols], axis=1)  # (modal, len(cols))
    x = cols.astype(float)
    design = np.stack([x, np.ones_like(x)], axis=1)
    residuals = []
    for rows in tracks:
        coef, *_ = np.linalg.lstsq(design, rows, rcond=None)
        fit = design @ coef
        residuals.append(np.sqrt(np.mean((rows - fit) ** 2)))
    return float(np.mean(residuals) / h)


def cap_counts(dirs: np.ndarray, axes: np.ndarray, cap_deg: float) -> np.ndarray:
    """How many directions fall within an angular cap around each axis."""
    dirs = np.asarray(dirs, dtype=float)
    axes = np.asarray(axes, dtype=float)
    threshold = math.cos(math.radians(cap_deg))
    return np.count_nonzero(dirs @ axes.T >= threshold, axis=0)


def erp_grid_directions(n: int) -> np.ndarray:
    """The first n pixel-center directions of the smallest 2:1 angular grid.

    The comparison layout for uniformity statistics: rows of constant
    elevation with cols = 2 * rows, which oversamples the poles the way ERP
    rasters do.
    """
    if n < 1:
        raise ValueError("need at least one direction")
    rows = max(1, math.ceil(math.sqrt(n / 2.0)))
    cols = 2 * rows
    elevation = -90.0 + 180.0 * (np.arange(rows) + 0.5) / rows
    azimuth = 360.0 * (np.arange(cols) + 0.5) / cols
    az, el = np.meshgrid(azimuth, elevation)
    return angles_to_dirs(az.ravel()[:n], el.ravel()[:n])


def lattice_uniformity_report(dirs: np.ndarray, cap_deg: float = 40.0,
                              axes: np.ndarray | None = None) -> dict:
    """Cap-count statistics over the schedule axes, with an ERP-grid baseline.

    cov is the coefficient of variation (population std over mean) of the
    per-axis cap counts; expected_mean is the analytic count for a perfectly
    uniform distribution, n * (1 - cos(cap)) / 2.
    """
    dirs = np.asarray(dirs, dtype=float)
    if axes is None:
        axes = ring_directions(RING_LAYOUT)
    counts = cap_counts(dirs, axes, cap_deg)
    mean = float(counts.mean())
    std = float(counts.std())
    n = dirs.shape[0]
    grid_counts = cap_counts(erp_grid_directions(n), axes, cap_deg)
    grid_mean = float(grid_counts.mean())
    report = {
        "n": n,
        "cap_deg": float(cap_deg),
        "axes": int(axes.shape[0]),
        "counts": counts,
        "mean": mean,
        "std": std,
        "cov": std / mean if mean > 0 else float("nan"),
        "min": int(counts.min()),
        "max": int(counts.max()),
        "expected_mean": n * (1.0 - math.cos(math.radians(cap_deg))) / 2.0,
        "erp_cov": float(grid_counts.std()) / grid_mean if grid_mean > 0 else float("nan"),
    }
    if report["cov"] and not math.isnan(report["erp_cov"]):
        report["cov_ratio"] = report["erp_cov"] / report["cov"]
    return report


def format_report(record: dict) -> str:
    """Render a metric record as documented key-value lines."""
    lines = []
    for key, value in record.items():
        if isinstance(value, np.ndarray):
            continue
        if isinstance(value, float):
            lines.append(f"{key} = {value:.6g}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
