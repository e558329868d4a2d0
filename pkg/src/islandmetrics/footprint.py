"""Occupancy-grid footprint measurement.

The labeled landmass cloud is flattened to the XY plane and quantized into
square cells of adaptive side ``s = max(2 * dist_avg, 0.05)`` meters, where
``dist_avg`` is the mean nearest-neighbor spacing of the 2D points.  Area is
the occupied-cell count times the cell area; perimeter is the 4-connected
boundary edge count times the cell side, i.e. a taxicab boundary length.
Cell indices are anchored at the data minimum, so both measurements are
translation invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCloudError,
    EmptyInputError,
    LengthMismatchError,
    NonPositiveCellSizeError,
    NonPositiveGroundTruthError,
    TooFewPointsError,
    ValidationError,
)
from .geometry import PointCloud

MIN_CELL_SIZE = 0.05
NN_SUBSAMPLE_THRESHOLD = 50_000


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Occupied integer cells of side ``cell_size`` anchored at ``origin``.

    ``cells`` is an (M, 2) array of unique (ix, iy) indices in lexicographic
    order; ``cell_max_z`` holds the per-cell maximum sample height, aligned
    with ``cells``.
    """

    cell_size: float
    origin: np.ndarray
    cells: np.ndarray
    cell_max_z: np.ndarray

    def __post_init__(self):
        if not self.cell_size > 0.0:
            raise NonPositiveCellSizeError(f"cell size must be positive, got {self.cell_size}")
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        if len(cells) == 0:
            raise EmptyInputError("occupancy grid must hold at least one cell")
        maxz = np.asarray(self.cell_max_z, dtype=np.float64).reshape(-1)
        if len(maxz) != len(cells):
            raise LengthMismatchError(f"{len(maxz)} heights for {len(cells)} cells")
        object.__setattr__(self, "cell_size", float(self.cell_size))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(2))
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "cell_max_z", maxz)

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def occupied_set(self) -> set:
        """Occupied cells as a set of (ix, iy) tuples (convenience for tests)."""
        return {(int(ix), int(iy)) for ix, iy in self.cells}


@dataclass(frozen=True)
class MeasurementReport:
    area_m2: float
    perimeter_m: float
    cell_size_m: float
    cell_count: int
    dist_avg_m: float
    bounds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "area_m2": self.area_m2,
            "perimeter_m": self.perimeter_m,
            "cell_size_m": self.cell_size_m,
            "cell_count": self.cell_count,
            "dist_avg_m": self.dist_avg_m,
            "bounds": dict(self.bounds),
        }


@dataclass(frozen=True, eq=False)
class GeoreferencedImage:
    """Raster plus the world position of its minimum corner and cell size."""

    pixels: np.ndarray
    origin: np.ndarray
    cell_size: float


def drop_to_2d(cloud: PointCloud):
    """Discard Z: returns ((N, 2) XY positions, (N,) retained heights)."""
    if len(cloud) == 0:
        raise EmptyCloudError("cannot flatten an empty cloud")
    return cloud.positions[:, :2].copy(), cloud.positions[:, 2].copy()


def _nn_distances(points: np.ndarray, query_idx: np.ndarray) -> np.ndarray:
    """Exact nearest-other-point distance for each query, via a uniform grid.

    Scans growing square blocks of cells around each query; a best candidate
    at distance <= radius * cell is provably the true nearest neighbor,
    because every unscanned cell lies at least that far away.  Only the
    points inside the scanned cells are ever gathered and sorted, so large
    clouds with few queries stay cheap.
    """
    n = len(points)
    mins = points.min(axis=0)
    extent = float(np.max(points.max(axis=0) - mins))
    if extent == 0.0:  # all points coincide
        return np.zeros(len(query_idx))

    cell = extent / max(math.sqrt(n), 1.0)
    ci = np.floor((points - mins) / cell).astype(np.int64)
    ncols = int(ci[:, 1].max()) + 3
    keys = (ci[:, 0] + 1) * ncols + (ci[:, 1] + 1)
    domain = (int(ci[:, 0].max()) + 3) * ncols
    dense_ok = domain <= max(2 * n, 1 << 22)

    best = np.full(len(query_idx), np.inf)
    open_q = np.arange(len(query_idx))
    radius = 1
    while open_q.size:
        side = 2 * radius + 1
        d = np.arange(-radius, radius + 1, dtype=np.int64)
        offsets = (d[:, None] * ncols + d[None, :]).ravel()

        # chunk the open queries so the candidate tables stay bounded
        chunk = max(1, 8_000_000 // (side * side))
        for lo in range(0, open_q.size, chunk):
            sub = open_q[lo : lo + chunk]
            q = query_idx[sub]
            cand_keys = (keys[q][:, None] + offsets).ravel()  # query-major

            # restrict the index to points inside the scanned cells
            needed = np.unique(cand_keys)
            if dense_ok:
                mask = np.zeros(domain, dtype=bool)
                inside = needed[(needed >= 0) & (needed < domain)]
                mask[inside] = True
                pool = np.flatnonzero(mask[keys])
            else:
                slot = np.searchsorted(needed, keys)
                slot_c = np.minimum(slot, len(needed) - 1)
                pool = np.flatnonzero(needed[slot_c] == keys)
            pool = pool[np.argsort(keys[pool], kind="stable")]
            pkeys = keys[pool]
            first = np.empty(len(pkeys), dtype=bool)
            first[0] = True
            np.not_equal(pkeys[1:], pkeys[:-1], out=first[1:])
            ustarts = np.flatnonzero(first)
            ukeys = pkeys[ustarts]
            ucounts = np.diff(np.append(ustarts, len(pkeys)))

            pos = np.searchsorted(ukeys, cand_keys)
            pos_c = np.minimum(pos, len(ukeys) - 1)
            found = (pos < len(ukeys)) & (ukeys[pos_c] == cand_keys)
            owner = np.repeat(np.arange(len(q)), side * side)[found]
            starts = ustarts[pos_c[found]]
            counts = ucounts[pos_c[found]]
            total = int(counts.sum())
            step = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            cand = pool[np.repeat(starts, counts) + step]
            qq = np.repeat(owner, counts)
            dx = points[q[qq], 0] - points[cand, 0]
            dy = points[q[qq], 1] - points[cand, 1]
            d2 = dx * dx + dy * dy
            d2[cand == q[qq]] = np.inf  # a point is not its own neighbor
            local = np.full(len(q), np.inf)
            np.minimum.at(local, qq, d2)
            best[sub] = np.sqrt(local)

        resolved = best[open_q] <= radius * cell
        open_q = open_q[~resolved]
        radius *= 2
    return best


def avg_nn_distance(points2d) -> float:
    """Mean distance from each point to its nearest other point.

    Exact for up to 50,000 points; beyond that the mean is taken over a
    deterministic stride subsample (every ceil(N/50,000)-th point) whose
    neighbors are still searched over the full set.
    """
    pts = np.asarray(points2d, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise TooFewPointsError(f"nearest-neighbor spacing needs >= 2 points, got {n}")
    stride = math.ceil(n / NN_SUBSAMPLE_THRESHOLD) if n > NN_SUBSAMPLE_THRESHOLD else 1
    query_idx = np.arange(0, n, stride)
    return float(_nn_distances(pts, query_idx).mean())


def grid_size(dist_avg: float) -> float:
    """Adaptive cell side: ``max(2 * dist_avg, 0.05)`` meters."""
    d = float(dist_avg)
    if d < 0.0 or not math.isfinite(d):
        raise ValidationError(f"dist_avg must be finite and non-negative, got {d}")
    return max(2.0 * d, MIN_CELL_SIZE)


def rasterize(points2d, heights, cell_size: float) -> OccupancyGrid:
    """Quantize 2D points into occupied cells, keeping the max height per cell.

    Indices are ``floor((p - min) / s)`` so they are non-negative and images
    are compact; the result is independent of point order.
    """
    if not cell_size > 0.0:
        raise NonPositiveCellSizeError(f"cell size must be positive, got {cell_size}")
    pts = np.asarray(points2d, dtype=np.float64).reshape(-1, 2)
    hts = np.asarray(heights, dtype=np.float64).reshape(-1)
    if len(pts) == 0:
        raise EmptyInputError("cannot rasterize zero points")
    if len(hts) != len(pts):
        raise LengthMismatchError(f"{len(hts)} heights for {len(pts)} points")

    origin = pts.min(axis=0)
    idx = np.floor((pts - origin) / cell_size).astype(np.int64)
    span = int(idx[:, 1].max()) + 1
    keys = idx[:, 0] * span + idx[:, 1]
    domain = (int(idx[:, 0].max()) + 1) * span
    if domain <= max(2 * len(keys), 1 << 22):
        # dense occupancy plus compact cell ids: no sort, and order
        # independent because max is commutative
        occupied_mask = np.zeros(domain, dtype=bool)
        occupied_mask[keys] = True
        compact = np.cumsum(occupied_mask, dtype=np.int64)
        ukeys = np.flatnonzero(occupied_mask)
        maxz = np.full(len(ukeys), -np.inf)
        np.maximum.at(maxz, compact[keys] - 1, hts)
    else:
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        first = np.empty(len(sorted_keys), dtype=bool)
        first[0] = True
        np.not_equal(sorted_keys[1:], sorted_keys[:-1], out=first[1:])
        starts = np.flatnonzero(first)
        ukeys = sorted_keys[starts]
        maxz = np.maximum.reduceat(hts[order], starts)
    ix = ukeys // span
    cells = np.empty((len(ukeys), 2), dtype=np.int64)
    cells[:, 0] = ix
    cells[:, 1] = ukeys - ix * span
    return OccupancyGrid(float(cell_size), origin, cells, maxz)


def area(grid: OccupancyGrid) -> float:
    """Total footprint area: occupied cell count times cell area."""
    return grid.cell_count * (grid.cell_size * grid.cell_size)


def perimeter(grid: OccupancyGrid) -> float:
    """Boundary length of the occupied region under 4-connectivity.

    Counts cell edges whose opposite cell is unoccupied.  This taxicab
    measure overestimates smooth curves by up to 4/pi; it is exact for
    axis-aligned shapes.
    """
    cells = grid.cells
    span = int(cells[:, 1].max()) + 3
    keys = (cells[:, 0] + 1) * span + (cells[:, 1] + 1)  # already sorted
    domain = (int(cells[:, 0].max()) + 3) * span
    dense = None
    if domain <= max(2 * len(keys), 1 << 22):
        dense = np.zeros(domain, dtype=bool)
        dense[keys] = True
    exposed = 0
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nk = keys + dx * span + dy
        if dense is not None:
            occupied = dense[nk]  # the +1 border keeps every neighbor in range
        else:
            pos = np.searchsorted(keys, nk)
            pos_c = np.minimum(pos, len(keys) - 1)
            occupied = (pos < len(keys)) & (keys[pos_c] == nk)
        exposed += int(np.count_nonzero(~occupied))
    return exposed * grid.cell_size


def footprint_image(grid: OccupancyGrid) -> GeoreferencedImage:
    """Top-down binary image: occupied cells white, empties black.

    The +y cell axis maps to image rows top-to-bottom after a vertical flip,
    so the image reads north-up like a map.
    """
    w = int(grid.cells[:, 0].max()) + 1
    h = int(grid.cells[:, 1].max()) + 1
    img = np.zeros((h, w), dtype=np.uint8)
    img[grid.cells[:, 1], grid.cells[:, 0]] = 255
    return GeoreferencedImage(img[::-1].copy(), grid.origin, grid.cell_size)


def height_map(grid: OccupancyGrid) -> np.ndarray:
    """8-bit height image over the grid: brighter means higher.

    Per occupied cell, intensity = floor(255 * (z - z_min) / (z_max - z_min))
    using the per-cell maximum height; empty cells are 0.  A flat region
    (z_max == z_min) renders as 255 on every occupied cell.
    """
    w = int(grid.cells[:, 0].max()) + 1
    h = int(grid.cells[:, 1].max()) + 1
    z = grid.cell_max_z
    zmin, zmax = float(z.min()), float(z.max())
    if zmax == zmin:
        levels = np.full(len(z), 255, dtype=np.uint8)
    else:
        levels = np.clip(np.floor(255.0 * (z - zmin) / (zmax - zmin)), 0, 255).astype(np.uint8)
    img = np.zeros((h, w), dtype=np.uint8)
    img[grid.cells[:, 1], grid.cells[:, 0]] = levels
    return img[::-1].copy()


def relative_error(estimate: float, ground_truth: float) -> float:
    """Signed relative error in percent: 100 * (estimate - truth) / truth."""
    truth = float(ground_truth)
    if not truth > 0.0:
        raise NonPositiveGroundTruthError(f"ground truth must be positive, got {truth}")
    return 100.0 * (float(estimate) - truth) / truth


def measure_footprint(points2d, heights, cell_size: float | None = None):
    """Full measurement pass: returns (MeasurementReport, OccupancyGrid).

    ``cell_size`` overrides the adaptive :func:`grid_size` when given.
    """
    pts = np.asarray(points2d, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyInputError("cannot measure zero points")
    dist_avg = avg_nn_distance(pts) if len(pts) >= 2 else 0.0
    s = float(cell_size) if cell_size is not None else grid_size(dist_avg)
    grid = rasterize(pts, heights, s)
    report = MeasurementReport(
        area_m2=area(grid),
        perimeter_m=perimeter(grid),
        cell_size_m=s,
        cell_count=grid.cell_count,
        dist_avg_m=dist_avg,
        bounds={
            "min_x": float(pts[:, 0].min()),
            "min_y": float(pts[:, 1].min()),
            "max_x": float(pts[:, 0].max()),
            "max_y": float(pts[:, 1].max()),
        },
    )
    return report, grid
