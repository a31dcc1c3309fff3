"""Spherical latent sets and their arrangement onto perspective grids.

A latent set pairs N unit directions with N feature vectors. For one camera,
the latents are projected onto the normalized image plane and cropped to
[-1, 1]^2; the surviving projected set is arranged into a square grid either
by nearest-to-cell-center lookup (the baseline, which may duplicate latents)
or by center-first ring assignment (dynamic sampling, which never does).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import CameraModel, fibonacci_lattice, in_frame, project_dirs


@dataclass
class SphericalLatentSet:
    """N unit directions with an N x C feature matrix."""

    directions: np.ndarray          # (N, 3) unit vectors, pairwise distinct
    features: np.ndarray            # (N, C)
    rng_seed: int | None = None

    def __post_init__(self):
        self.directions = np.asarray(self.directions, dtype=float)
        self.features = np.asarray(self.features, dtype=float)
        if self.directions.ndim != 2 or self.directions.shape[1] != 3:
            raise ValueError("directions must have shape (N, 3)")
        if self.features.ndim != 2:
            raise ValueError("features must have shape (N, C)")
        n = self.directions.shape[0]
        if n < 1 or self.features.shape[1] < 1:
            raise ValueError("need N >= 1 and C >= 1")
        if self.features.shape[0] != n:
            raise ValueError("directions and features disagree on N")
        norms = np.linalg.norm(self.directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("directions must be unit vectors")
        if len(np.unique(self.directions, axis=0)) != n:
            raise ValueError("directions must be pairwise distinct")

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    @property
    def channels(self) -> int:
        return self.features.shape[1]


def make_latent_set(n: int, channels: int, seed: int | None = None) -> SphericalLatentSet:
    """Lattice directions with i.i.d. standard-normal features from the seed."""
    rng = np.random.default_rng(seed if seed is None else (seed, 0))
    features = rng.standard_normal((n, channels))
    return SphericalLatentSet(fibonacci_lattice(n), features, rng_seed=seed)


@dataclass
class ProjectedLatentSet:
    """Latents that survived projection and cropping for one camera."""

    coords: np.ndarray              # (M, 2) in [-1, 1]^2
    features: np.ndarray            # (M, C), carried verbatim
    indices: np.ndarray             # (M,) unique indices into the parent set
    parent_size: int

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        self.features = np.asarray(self.features, dtype=float)
        self.indices = np.asarray(self.indices, dtype=int)
        if len(self.indices) != len(set(self.indices.tolist())):
            raise ValueError("latent indices must be unique")
        if self.coords.size and np.max(np.abs(self.coords)) > 1.0:
            raise ValueError("projected coordinates must lie in [-1, 1]^2")

    def __len__(self) -> int:
        return self.coords.shape[0]


@dataclass
class PerspectiveGrid:
    """Square grid of features sampled from a projected latent set.

    Each occupied cell records the feature vector, the source latent index,
    and the latent's own projected coordinate (used later for weighting).
    """

    features: np.ndarray            # (H, W, C)
    source_index: np.ndarray        # (H, W) int, -1 where unoccupied
    coords: np.ndarray              # (H, W, 2) projected coordinate per cell
    strategy: str                   # "dynamic" or "nearest"
    occupancy: np.ndarray = field(init=False)

    def __post_init__(self):
        self.occupancy = self.source_index >= 0

    @property
    def height(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]


def project_latents(s: SphericalLatentSet, cam: CameraModel) -> ProjectedLatentSet:
    """Project a latent set through a camera, keeping frontal in-frame latents."""
    uv, frontal = project_dirs(s.directions, cam)
    keep = in_frame(uv, frontal)
    indices = np.flatnonzero(keep)
    return ProjectedLatentSet(
        coords=uv[keep],
        features=s.features[keep],
        indices=indices,
        parent_size=s.size,
    )


def _cell_centers(h: int, w: int) -> np.ndarray:
    """Normalized [-1, 1]^2 coordinates of grid cell centers, shape (h, w, 2)."""
    u = (np.arange(w) + 0.5) / w * 2.0 - 1.0
    v = (np.arange(h) + 0.5) / h * 2.0 - 1.0
    uu, vv = np.meshgrid(u, v)
    return np.stack([uu, vv], axis=-1)


def nearest_point_sampling(p: ProjectedLatentSet, h: int, w: int) -> PerspectiveGrid:
    """Fill each cell with the projected latent nearest its center.

    The baseline strategy: the same latent may land in several cells, and
    in-frame latents far from every cell center are silently dropped.
    """
    if len(p) == 0:
        raise ValueError("cannot sample from an empty projected set")
    if h < 1 or w < 1:
        raise ValueError("grid dimensions must be positive")
    centers = _cell_centers(h, w).reshape(-1, 2)
    # (cells, latents) distance matrix; ties resolve to the lowest entry index.
    d2 = ((centers[:, None, :] - p.coords[None, :, :]) ** 2).sum(axis=2)
    pick = np.argmin(d2, axis=1)
    features = p.features[pick].reshape(h, w, -1)
    source = p.indices[pick].reshape(h, w)
    coords = p.coords[pick].reshape(h, w, 2)
    return PerspectiveGrid(features, source, coords, strategy="nearest")


def dynamic_grid_side(m: int) -> int:
    """Grid side for M projected latents: largest even integer <= floor(sqrt(M))."""
    if m < 4:
        raise ValueError("dynamic sampling needs at least 4 latents")
    side = int(np.floor(np.sqrt(m)))
    return side if side % 2 == 0 else side - 1


@lru_cache(maxsize=None)
def _ring_cells(h: int, w: int) -> tuple[np.ndarray, ...]:
    """Flat cell indices of each concentric ring, innermost first.

    Ring i (1-based) covers rows [h/2 - i, h/2 + i - 1] and the matching
    columns, minus the interior; it holds (2i)^2 - (2i - 2)^2 cells. Within
    a ring, cells are ordered by the angle of their center around the grid
    center, ascending from -pi (ties by row-major position).
    """
    centers = _cell_centers(h, w).reshape(-1, 2)
    rows, cols = np.divmod(np.arange(h * w), w)
    # Chebyshev-style ring index off the central 2x2 block.
    ring = np.maximum(
        np.maximum(h // 2 - rows, rows - (h // 2 - 1)),
        np.maximum(w // 2 - cols, cols - (w // 2 - 1)),
    )
    angles = np.arctan2(centers[:, 1], centers[:, 0])
    out = []
    for i in range(1, h // 2 + 1):
        members = np.flatnonzero(ring == i)
        order = np.lexsort((members, angles[members]))
        out.append(members[order])
    return tuple(out)


def dynamic_latent_sampling(p: ProjectedLatentSet) -> PerspectiveGrid:
    """Arrange the M' = H*W centermost latents onto an H x W grid, rings first.

    H = W = the largest even integer not above floor(sqrt(M)). Latents are
    sorted by distance from the image center (ties by ascending index) into a
    queue; ring i pops the next (2i)^2 - (2i-2)^2 of them. Within a ring,
    latents and cells are matched in order of angle around the center. Each
    latent is used at most once; the M - H*W outermost are ignored.
    """
    m = len(p)
    side = dynamic_grid_side(m)
    norms = np.linalg.norm(p.coords, axis=1)
    queue = np.argsort(norms, kind="stable")

    c = p.features.shape[1]
    features = np.zeros((side, side, c))
    source = np.full((side, side), -1, dtype=int)
    coords = np.zeros((side, side, 2))
    flat_features = features.reshape(-1, c)
    flat_source = source.reshape(-1)
    flat_coords = coords.reshape(-1, 2)

    taken = 0
    for cells in _ring_cells(side, side):
        batch = queue[taken:taken + len(cells)]
        taken += len(cells)
        angles = np.arctan2(p.coords[batch, 1], p.coords[batch, 0])
        order = np.lexsort((batch, angles))
        batch = batch[order]
        flat_features[cells] = p.features[batch]
        flat_source[cells] = p.indices[batch]
        flat_coords[cells] = p.coords[batch]
    return PerspectiveGrid(features, source, coords, strategy="dynamic")
