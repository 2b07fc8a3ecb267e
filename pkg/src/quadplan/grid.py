"""Axis-aligned 3D occupancy grids.

Coordinate transforms, exact segment/voxel collision queries, obstacle
inflation, seeded random map generation and binary persistence.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

GRID_MAGIC = b"MNRGRID1"

# Dims are u32 on the wire; unpacked signed so corrupt negative values are
# rejected as malformed rather than misread as huge counts.
_GRID_HEADER = struct.Struct("<8s3id3d")


class MapFileError(Exception):
    """Malformed header, truncated payload or wrong magic in a grid file."""


class PlacementError(Exception):
    """Obstacle placement failed within the retry budget (over-dense spec)."""


@dataclass(frozen=True)
class GoalRegion:
    """Spherical goal set: reached when ||x - center|| < radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.shape != (3,) or not np.all(np.isfinite(center)):
            raise ValueError("goal center must be a finite 3-vector")
        if not self.radius > 0:
            raise ValueError("goal radius must be positive")
        object.__setattr__(self, "center", center)

    def contains(self, p) -> bool:
        c = self.center
        dx = float(p[0]) - c[0]
        dy = float(p[1]) - c[1]
        dz = float(p[2]) - c[2]
        return dx * dx + dy * dy + dz * dz < self.radius * self.radius


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Dense boolean voxel grid. True = obstacle. Immutable after construction.

    World/index convention: voxel (i,j,k) covers the half-open box
    [origin + idx*resolution, origin + (idx+1)*resolution); a point exactly on
    a voxel's upper face belongs to the next voxel (floor convention).
    """

    occupancy: np.ndarray
    resolution: float
    origin: np.ndarray = (0.0, 0.0, 0.0)

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupancy, dtype=bool)
        if occ.ndim != 3 or min(occ.shape) < 1:
            raise ValueError("occupancy must be a 3D array with all dims >= 1")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        origin = np.asarray(self.origin, dtype=float)
        if origin.shape != (3,) or not np.all(np.isfinite(origin)):
            raise ValueError("origin must be a finite 3-vector")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "_has_obstacles", bool(occ.any()))
        # Plain-float origin for scalar hot paths (planner inner loop).
        object.__setattr__(self, "_lo", tuple(float(v) for v in origin))

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.occupancy.shape == other.occupancy.shape
            and self.resolution == other.resolution
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.occupancy, other.occupancy)
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    @property
    def lower(self) -> np.ndarray:
        return self.origin

    @property
    def upper(self) -> np.ndarray:
        return self.origin + np.asarray(self.dims) * self.resolution

    def world_to_index(self, p) -> tuple[int, int, int] | None:
        """Voxel index containing world point p, or None when out of bounds."""
        p = np.asarray(p, dtype=float)
        idx = np.floor((p - self.origin) / self.resolution).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.dims):
            return None
        return (int(idx[0]), int(idx[1]), int(idx[2]))

    def index_to_world(self, idx) -> np.ndarray:
        """World coordinates of the voxel center."""
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def _point_in_bounds(self, p) -> bool:
        """Scalar-math bounds check, consistent with world_to_index's floor
        convention (hot path; avoids small-array numpy overhead)."""
        lo = self._lo
        res = self.resolution
        dims = self.occupancy.shape
        for ax in range(3):
            i = math.floor((float(p[ax]) - lo[ax]) / res)
            if i < 0 or i >= dims[ax]:
                return False
        return True

    def in_bounds_index(self, idx) -> bool:
        idx = np.asarray(idx)
        return bool(np.all(idx >= 0) and np.all(idx < self.dims))

    def is_free_world(self, p) -> bool:
        """Point query; out of bounds counts as occupied."""
        idx = self.world_to_index(p)
        if idx is None:
            return False
        return not self.occupancy[idx]

    def free_voxel_count(self) -> int:
        return int(self.occupancy.size - np.count_nonzero(self.occupancy))

    def free_measure(self) -> float:
        """Lebesgue measure of free space, estimated voxel-wise (m^3)."""
        return self.free_voxel_count() * self.resolution**3


def segment_voxels(grid: OccupancyGrid, a, b) -> np.ndarray:
    """Exact set of voxel indices traversed by segment a->b, as an (K,3) int
    array. Indices may fall outside the grid; callers decide how to treat
    them. Computed from the sorted face-crossing parameters of the segment,
    evaluating the containing voxel at each inter-crossing midpoint, which is
    equivalent to an exact 3D grid walk (no step-size dependence).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    ts = [np.array([0.0, 1.0])]
    for ax in range(3):
        if d[ax] != 0.0:
            lo = (min(a[ax], b[ax]) - grid.origin[ax]) / grid.resolution
            hi = (max(a[ax], b[ax]) - grid.origin[ax]) / grid.resolution
            ks = np.arange(np.floor(lo) + 1.0, np.floor(hi) + 1.0)
            if ks.size:
                ts.append((grid.origin[ax] + ks * grid.resolution - a[ax]) / d[ax])
    t = np.unique(np.concatenate(ts))
    t = t[(t >= 0.0) & (t <= 1.0)]
    if t.size < 2:
        t = np.array([0.0, 1.0])
    mids = 0.5 * (t[:-1] + t[1:])
    pts = a[None, :] + mids[:, None] * d[None, :]
    idx = np.floor((pts - grid.origin) / grid.resolution).astype(int)
    return np.unique(idx, axis=0)


def _segment_free_walk(grid: OccupancyGrid, a, b) -> bool:
    """Amanatides-Woo style grid walk in scalar math (hot path). Same floor
    convention as segment_voxels; returns False on the first occupied or
    out-of-bounds voxel."""
    occ = grid.occupancy
    nx, ny, nz = occ.shape
    lo = grid._lo
    inv = 1.0 / grid.resolution
    # Voxel-space coordinates.
    u0 = [(float(a[i]) - lo[i]) * inv for i in range(3)]
    u1 = [(float(b[i]) - lo[i]) * inv for i in range(3)]
    ix, iy, iz = (math.floor(c) for c in u0)
    ex, ey, ez = (math.floor(c) for c in u1)
    if not (0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz):
        return False
    if occ[ix, iy, iz]:
        return False
    step = [0, 0, 0]
    t_max = [math.inf, math.inf, math.inf]
    t_delta = [math.inf, math.inf, math.inf]
    cur = [ix, iy, iz]
    for i in range(3):
        d = u1[i] - u0[i]
        if d > 0.0:
            step[i] = 1
            t_delta[i] = 1.0 / d
            t_max[i] = (cur[i] + 1.0 - u0[i]) / d
        elif d < 0.0:
            step[i] = -1
            t_delta[i] = -1.0 / d
            t_max[i] = (cur[i] - u0[i]) / d
    end = (ex, ey, ez)
    # Bounded walk: the number of crossings is at most the L1 index distance.
    for _ in range(abs(ex - ix) + abs(ey - iy) + abs(ez - iz) + 3):
        if cur[0] == end[0] and cur[1] == end[1] and cur[2] == end[2]:
            return True
        ax = 0 if t_max[0] <= t_max[1] and t_max[0] <= t_max[2] else (
            1 if t_max[1] <= t_max[2] else 2
        )
        if t_max[ax] > 1.0:
            return True
        cur[ax] += step[ax]
        t_max[ax] += t_delta[ax]
        if not 0 <= cur[0] < nx or not 0 <= cur[1] < ny or not 0 <= cur[2] < nz:
            return False
        if occ[cur[0], cur[1], cur[2]]:
            return False
    return True


def segment_collision_free(grid: OccupancyGrid, a, b) -> bool:
    """True iff every voxel traversed by segment a->b is in-bounds and free."""
    if not grid._has_obstacles:
        # Grid box is convex: with no obstacles the segment is free iff both
        # endpoints lie inside.
        return grid._point_in_bounds(a) and grid._point_in_bounds(b)
    return _segment_free_walk(grid, a, b)


def inflate(grid: OccupancyGrid, radius_voxels: int) -> OccupancyGrid:
    """Chebyshev (cube) dilation of the occupied set by radius_voxels."""
    if radius_voxels < 0:
        raise ValueError("radius_voxels must be nonnegative")
    if radius_voxels == 0 or not grid._has_obstacles:
        return grid
    size = 2 * radius_voxels + 1
    occ = ndimage.binary_dilation(grid.occupancy, structure=np.ones((size,) * 3, dtype=bool))
    return OccupancyGrid(occ, grid.resolution, grid.origin)


@dataclass(frozen=True)
class ObstacleSpec:
    """Cuboid obstacle population for random map generation (voxel units)."""

    count: tuple[int, int]
    size_min: tuple[int, int, int]
    size_max: tuple[int, int, int]
    max_retries: int = 100

    def __post_init__(self):
        if isinstance(self.count, int):
            object.__setattr__(self, "count", (self.count, self.count))
        lo, hi = self.count
        if not (0 <= lo <= hi):
            raise ValueError("bad obstacle count range")
        smin = np.asarray(self.size_min, dtype=int)
        smax = np.asarray(self.size_max, dtype=int)
        if np.any(smin < 1) or np.any(smax < smin):
            raise ValueError("bad cuboid size range")


def random_cluttered_map(
    dims,
    resolution: float,
    spec: ObstacleSpec,
    seed: int,
    origin=(0.0, 0.0, 0.0),
    keep_free=(),
) -> OccupancyGrid:
    """Seeded random map of axis-aligned cuboid obstacles.

    Voxels listed in keep_free (index triples) are guaranteed unoccupied:
    an obstacle overlapping one is re-rolled, up to spec.max_retries times
    before PlacementError. Identical seeds give bit-identical maps.
    """
    dims = np.asarray(dims, dtype=int)
    occ = np.zeros(tuple(dims), dtype=bool)
    keep = [tuple(int(c) for c in v) for v in keep_free]
    rng = np.random.default_rng(seed)
    lo, hi = spec.count
    n = lo if lo == hi else int(rng.integers(lo, hi + 1))
    smin = np.asarray(spec.size_min, dtype=int)
    smax = np.asarray(spec.size_max, dtype=int)
    for _ in range(n):
        for _attempt in range(spec.max_retries):
            size = rng.integers(smin, smax + 1)
            size = np.minimum(size, dims)
            corner = rng.integers(0, dims - size + 1)
            sl = tuple(slice(int(c), int(c + s)) for c, s in zip(corner, size))
            if any(
                all(sl[ax].start <= v[ax] < sl[ax].stop for ax in range(3)) for v in keep
            ):
                continue
            occ[sl] = True
            break
        else:
            raise PlacementError(
                f"could not place obstacle after {spec.max_retries} retries"
            )
    return OccupancyGrid(occ, resolution, origin)


def save_grid(grid: OccupancyGrid, path) -> None:
    """Binary format: magic, u32 dims, f64 resolution, f64 origin, then the
    occupancy bits x-fastest, LSB-first (see load_grid for validation)."""
    nx, ny, nz = grid.dims
    header = _GRID_HEADER.pack(GRID_MAGIC, nx, ny, nz, grid.resolution, *grid.origin)
    bits = np.packbits(grid.occupancy.ravel(order="F"), bitorder="little")
    with open(path, "wb") as f:
        f.write(header)
        f.write(bits.tobytes())


def load_grid(path) -> OccupancyGrid:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _GRID_HEADER.size:
        raise MapFileError("truncated grid header")
    magic, nx, ny, nz, res, ox, oy, oz = _GRID_HEADER.unpack_from(raw)
    if magic != GRID_MAGIC:
        raise MapFileError(f"bad magic {magic!r}; expected {GRID_MAGIC!r}")
    if min(nx, ny, nz) < 1 or not res > 0:
        raise MapFileError("malformed header: nonpositive dims or resolution")
    ncells = nx * ny * nz
    payload = raw[_GRID_HEADER.size :]
    nbytes = (ncells + 7) // 8
    if len(payload) < nbytes:
        raise MapFileError("truncated occupancy payload")
    bits = np.unpackbits(
        np.frombuffer(payload[:nbytes], dtype=np.uint8), bitorder="little"
    )[:ncells]
    occ = bits.astype(bool).reshape((nx, ny, nz), order="F")
    return OccupancyGrid(occ, res, (ox, oy, oz))
