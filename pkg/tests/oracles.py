"""Independent reference implementations used to cross-check the package.

Everything here is plain Python over lists and math, sharing no helpers with
the package under test.
"""

import math


def oracle_dynamic_grid(coords, indices):
    """Reference ring placement for dynamic latent sampling.

    Takes projected coordinates and latent indices as plain lists, returns
    (side, {cell: latent_index}) built with explicit loops and sorts.
    """
    m = len(indices)
    side = int(math.floor(math.sqrt(m)))
    if side % 2:
        side -= 1
    entries = sorted(range(m), key=lambda i: (math.hypot(*coords[i]), indices[i]))
    chosen = entries[: side * side]
    placement = {}
    taken = 0
    for ring in range(1, side // 2 + 1):
        lo, hi = side // 2 - ring, side // 2 + ring - 1
        cells = []
        for r in range(lo, hi + 1):
            for c in range(lo, hi + 1):
                if r in (lo, hi) or c in (lo, hi):
                    u = (c + 0.5) / side * 2 - 1
                    v = (r + 0.5) / side * 2 - 1
                    cells.append((math.atan2(v, u), r * side + c))
        cells.sort()
        count = len(cells)
        batch = chosen[taken : taken + count]
        taken += count
        batch = sorted(batch, key=lambda i: (math.atan2(coords[i][1], coords[i][0]), i))
        for (_, cell), i in zip(cells, batch):
            placement[cell] = indices[i]
    return side, placement


def oracle_nearest_grid(coords, indices, height, width):
    """Reference nearest-point placement: per-cell argmin over all points."""
    placement = {}
    for r in range(height):
        for c in range(width):
            cu = (c + 0.5) / width * 2 - 1
            cv = (r + 0.5) / height * 2 - 1
            best, best_d = None, None
            for i in range(len(indices)):
                d = math.hypot(coords[i][0] - cu, coords[i][1] - cv)
                if best_d is None or d < best_d:
                    best, best_d = indices[i], d
            placement[r * width + c] = best
    return placement
