"""Sphere and pinhole-camera geometry.

Coordinate conventions used throughout the package:

  World frame (left-handed, Y down):
    +X right, +Y down, +Z forward.
  Angles:
    azimuth   theta in [0, 360) degrees, measured from +Z toward +X
              (theta=90 looks along +X).
    elevation phi in [-90, +90] degrees, positive looks down (+Y),
              negative looks up.
  A unit direction is
    d = (cos(phi) sin(theta), sin(phi), cos(phi) cos(theta)).

  Camera frame: rows of the rotation matrix are [right; down; forward],
  so camera coordinates are x_c = R @ d. The normalized image plane is
  the square [-1, 1]^2 at focal distance, u right, v down, with
  focal = 1 / tan(fov / 2).

  Equirectangular (ERP) rasters are width = 2 * height; row 0 is the
  upward pole (phi = -90), column 0 is azimuth 0; pixel centers sit at
  phi = -90 + 180 * (r + 0.5) / height, theta = 360 * (c + 0.5) / width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_ANGLE = 2.0 * math.pi * (1.0 - 1.0 / GOLDEN_RATIO)

# Global up is -Y; +Z is the fallback up hint for cameras looking at a pole.
_UP = np.array([0.0, -1.0, 0.0])
_POLE_UP_HINT = np.array([0.0, 0.0, 1.0])
_POLE_DOT_LIMIT = 1.0 - 1e-6


def normalize(vecs: np.ndarray) -> np.ndarray:
    """Return vectors scaled to unit length along the last axis."""
    vecs = np.asarray(vecs, dtype=float)
    norms = np.linalg.norm(vecs, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return vecs / norms


def angles_to_dirs(azimuth_deg, elevation_deg) -> np.ndarray:
    """Convert azimuth/elevation in degrees to unit directions, shape (..., 3)."""
    theta = np.radians(azimuth_deg)
    phi = np.radians(elevation_deg)
    cos_phi = np.cos(phi)
    return np.stack(
        [cos_phi * np.sin(theta), np.sin(phi), cos_phi * np.cos(theta)], axis=-1
    )


def dirs_to_angles(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Convert unit directions to (azimuth in [0, 360), elevation in [-90, 90])."""
    dirs = np.asarray(dirs, dtype=float)
    elevation = np.degrees(np.arcsin(np.clip(dirs[..., 1], -1.0, 1.0)))
    azimuth = np.degrees(np.arctan2(dirs[..., 0], dirs[..., 2])) % 360.0
    return azimuth, elevation


def fibonacci_lattice(n: int) -> np.ndarray:
    """Return n near-uniform unit directions on the sphere, shape (n, 3).

    Point i of n sits at height z_i = 1 - (2i + 1) / n with azimuthal angle
    i * golden_angle in the x-y plane. Deterministic; ordered by descending z.
    """
    if n < 1:
        raise ValueError("lattice size must be at least 1")
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    radius = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    angle = i * GOLDEN_ANGLE
    return np.stack([radius * np.cos(angle), radius * np.sin(angle), z], axis=1)


def focal_from_fov(fov_deg: float) -> float:
    """Focal length for the [-1, 1] image square from a full field of view."""
    if not 0.0 < fov_deg < 180.0:
        raise ValueError("fov must be in (0, 180) degrees")
    return 1.0 / math.tan(math.radians(fov_deg) / 2.0)


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera: orientation plus focal length for the [-1, 1] plane."""

    forward: np.ndarray      # unit view direction, shape (3,)
    up_hint: np.ndarray      # the up vector used to build the basis
    rotation: np.ndarray     # rows [right; down; forward], world -> camera
    focal: float
    azimuth_deg: float
    elevation_deg: float

    @classmethod
    def from_angles(cls, azimuth_deg: float, elevation_deg: float,
                    fov_deg: float = 90.0) -> "CameraModel":
        forward = angles_to_dirs(float(azimuth_deg), float(elevation_deg))
        return cls._build(forward, focal_from_fov(fov_deg),
                          float(azimuth_deg) % 360.0, float(elevation_deg))

    @classmethod
    def from_direction(cls, direction: np.ndarray, fov_deg: float = 90.0) -> "CameraModel":
        forward = normalize(np.asarray(direction, dtype=float).reshape(3))
        azimuth, elevation = dirs_to_angles(forward)
        return cls._build(forward, focal_from_fov(fov_deg),
                          float(azimuth), float(elevation))

    @classmethod
    def _build(cls, forward: np.ndarray, focal: float,
               azimuth_deg: float, elevation_deg: float) -> "CameraModel":
        # Up is -Y except when looking (almost) straight along Y, where the
        # horizontal basis degenerates and +Z takes over as the up hint.
        if abs(forward[1]) > _POLE_DOT_LIMIT:
            up = _POLE_UP_HINT
        else:
            up = _UP
        right = normalize(np.cross(forward, up))
        down = np.cross(forward, right)
        rotation = np.stack([right, down, forward])
        return cls(forward=forward, up_hint=up, rotation=rotation, focal=focal,
                   azimuth_deg=azimuth_deg, elevation_deg=elevation_deg)

    @property
    def fov_deg(self) -> float:
        return math.degrees(2.0 * math.atan(1.0 / self.focal))


def project_dirs(dirs: np.ndarray, cam: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Project directions onto the camera's normalized image plane.

    Returns (uv, frontal): uv has shape (..., 2) and frontal is a boolean
    mask of directions with a strictly positive inner product with the view
    direction. uv is only meaningful where frontal is True.
    """
    dirs = np.asarray(dirs, dtype=float)
    cam_coords = dirs @ cam.rotation.T
    z = cam_coords[..., 2]
    frontal = z > 0.0
    safe_z = np.where(frontal, z, 1.0)
    uv = cam.focal * cam_coords[..., :2] / safe_z[..., None]
    return uv, frontal


def spherical_to_perspective(d: np.ndarray, cam: CameraModel):
    """Project a single direction; returns (u, v) or None if behind the camera."""
    uv, frontal = project_dirs(np.asarray(d, dtype=float).reshape(3), cam)
    if not frontal:
        return None
    return float(uv[0]), float(uv[1])


def perspective_to_spherical(uv: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Map normalized image coordinates back to unit directions, shape (..., 3)."""
    uv = np.asarray(uv, dtype=float)
    rays = np.concatenate(
        [uv / cam.focal, np.ones(uv.shape[:-1] + (1,))], axis=-1
    )
    return normalize(rays) @ cam.rotation


def in_frame(uv: np.ndarray, frontal: np.ndarray) -> np.ndarray:
    """Mask of projected points that land inside [-1, 1]^2 in front of the camera."""
    uv = np.asarray(uv, dtype=float)
    inside = (np.abs(uv[..., 0]) <= 1.0) & (np.abs(uv[..., 1]) <= 1.0)
    return inside & frontal


def distortion_ratio(theta) -> np.ndarray:
    """Tangent-plane stretch tan(theta)/theta for angles in [0, pi/2).

    The ratio between the perspective-plane distance tan(theta) and the
    spherical arc length theta from the view axis; 1 at theta = 0.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0.0) or np.any(theta >= math.pi / 2.0):
        raise ValueError("theta must lie in [0, pi/2)")
    ratio = np.ones_like(theta)
    nonzero = theta > 0.0
    ratio = np.divide(np.tan(theta), theta, out=ratio, where=nonzero)
    if ratio.ndim == 0:
        return float(ratio)
    return ratio


def erp_shape(height: int) -> tuple[int, int]:
    """ERP raster shape (height, width) with the fixed 2:1 aspect."""
    if height < 1:
        raise ValueError("height must be at least 1")
    return height, 2 * height


def erp_pixel_angles(height: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel (azimuth_deg, elevation_deg) grids for an ERP raster."""
    h, w = erp_shape(height)
    elevation = -90.0 + 180.0 * (np.arange(h) + 0.5) / h
    azimuth = 360.0 * (np.arange(w) + 0.5) / w
    return np.broadcast_to(azimuth, (h, w)), np.broadcast_to(elevation[:, None], (h, w))


def erp_pixel_dirs(height: int) -> np.ndarray:
    """Unit direction through each ERP pixel center, shape (height, 2*height, 3)."""
    azimuth, elevation = erp_pixel_angles(height)
    return angles_to_dirs(azimuth, elevation)
