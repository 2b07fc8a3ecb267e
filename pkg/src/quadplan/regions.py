"""Heuristic promising regions over occupancy grids.

The region oracle (A* shortest grid path dilated into 3x3x3 cubes) stands in
for an externally trained predictor; predicted regions can also be loaded
from the binary region file format. Includes region filtering, the
connectivity/safety penalty metrics, and value-weighted sampling.
"""

from __future__ import annotations

import heapq
import itertools
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .grid import OccupancyGrid

REGION_MAGIC = b"MNRHEUR1"

_REGION_HEADER = struct.Struct("<8s3i")

# 26-connected neighborhood: offsets and Euclidean step costs (1, sqrt2, sqrt3).
_OFFSETS = np.array(
    [o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)], dtype=int
)
_STEP_COSTS = np.linalg.norm(_OFFSETS, axis=1)

_CUBE = np.ones((3, 3, 3), dtype=bool)


class NoPathError(Exception):
    """Start and goal lie in different free components."""


class EmptyRegionError(Exception):
    """Region has no support (empty after filtering, or all-zero sampling mass)."""


class RegionFileError(Exception):
    """Malformed header, truncated payload or invalid values in a region file."""


@dataclass(frozen=True, eq=False)
class HeuristicRegion:
    """Per-voxel probability field in [0, 1] aligned to a companion grid.

    Mask-style regions (the oracle's output) use exactly 0 or 1.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float32)
        if vals.ndim != 3:
            raise ValueError("region values must be a 3D array")
        if np.any(vals < 0.0) or np.any(vals > 1.0) or not np.all(np.isfinite(vals)):
            raise ValueError("region values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        if not isinstance(other, HeuristicRegion):
            return NotImplemented
        return self.values.shape == other.values.shape and np.array_equal(
            self.values, other.values
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def mask(self) -> np.ndarray:
        return self.values > 0.0

    def member_indices(self) -> np.ndarray:
        return np.argwhere(self.values > 0.0)


def state_map(dims, start_voxel, goal_voxel) -> np.ndarray:
    """Binary map with 3x3x3 cubes of ones centered on start and goal,
    clipped at the bounds."""
    dims = tuple(int(d) for d in dims)
    out = np.zeros(dims, dtype=np.float32)
    for v in (start_voxel, goal_voxel):
        v = np.asarray(v, dtype=int)
        lo = np.maximum(v - 1, 0)
        hi = np.minimum(v + 2, dims)
        out[lo[0] : hi[0], lo[1] : hi[1], lo[2] : hi[2]] = 1.0
    return out


def astar_path(grid: OccupancyGrid, start, goal) -> np.ndarray:
    """Cost-minimal 26-connected grid path from start to goal voxel under
    Euclidean step costs, as an (L,3) int array of voxel indices.

    Admissible heuristic: straight-line Euclidean distance in voxel units.
    Ties break on lower heuristic value, then lexicographic voxel index, so
    the returned path is deterministic.
    """
    start = tuple(int(c) for c in np.asarray(start))
    goal = tuple(int(c) for c in np.asarray(goal))
    for name, v in (("start", start), ("goal", goal)):
        if not grid.in_bounds_index(v):
            raise ValueError(f"{name} voxel {v} out of bounds")
        if grid.occupancy[v]:
            raise ValueError(f"{name} voxel {v} is occupied")
    if start == goal:
        return np.array([start], dtype=int)

    dims = np.asarray(grid.dims)
    occ = grid.occupancy
    goal_arr = np.asarray(goal, dtype=float)

    g = {start: 0.0}
    parent = {}
    h0 = float(np.linalg.norm(np.asarray(start, dtype=float) - goal_arr))
    open_heap = [(h0, h0, start)]
    closed = set()
    while open_heap:
        _f, _h, cur = heapq.heappop(open_heap)
        if cur in closed:
            continue
        if cur == goal:
            path = [cur]
            while cur in parent:
                cur = parent[cur]
                path.append(cur)
            return np.array(path[::-1], dtype=int)
        closed.add(cur)
        gc = g[cur]
        nbrs = np.asarray(cur) + _OFFSETS
        ok = np.all(nbrs >= 0, axis=1) & np.all(nbrs < dims, axis=1)
        for nbr, cost, valid in zip(nbrs, _STEP_COSTS, ok):
            if not valid:
                continue
            nt = (int(nbr[0]), int(nbr[1]), int(nbr[2]))
            if occ[nt] or nt in closed:
                continue
            ng = gc + cost
            if ng < g.get(nt, np.inf) - 1e-12:
                g[nt] = ng
                parent[nt] = cur
                h = float(np.linalg.norm(nbr - goal_arr))
                heapq.heappush(open_heap, (ng + h, h, nt))
    raise NoPathError(f"no free 26-connected path from {start} to {goal}")


def dilate_path(path, dims) -> HeuristicRegion:
    """Binary region: 1 iff within Chebyshev distance 1 of a path voxel."""
    path = np.asarray(path, dtype=int)
    if path.size == 0:
        raise ValueError("path must be nonempty")
    mask = np.zeros(tuple(int(d) for d in dims), dtype=bool)
    mask[path[:, 0], path[:, 1], path[:, 2]] = True
    mask = ndimage.binary_dilation(mask, structure=_CUBE)
    return HeuristicRegion(mask.astype(np.float32))


def oracle_region(grid: OccupancyGrid, start, goal) -> HeuristicRegion:
    """Ground-truth heuristic: dilated A* path with obstacle voxels zeroed.

    Connected by construction (the undilated path survives zeroing) and safe
    because no emitted voxel overlaps an obstacle.
    """
    path = astar_path(grid, start, goal)
    region = dilate_path(path, grid.dims)
    vals = np.where(grid.occupancy, np.float32(0.0), region.values)
    return HeuristicRegion(vals)


def filter_region(
    region: HeuristicRegion,
    grid: OccupancyGrid,
    start,
    goal,
    threshold: float = 0.5,
) -> HeuristicRegion:
    """Turn a raw (possibly probabilistic) region into a usable sampling
    support: binarize at threshold, zero occupied voxels, keep only the
    26-connected component(s) containing start and/or goal, and force-include
    the start and goal voxels."""
    if region.dims != grid.dims:
        raise ValueError(f"region dims {region.dims} != grid dims {grid.dims}")
    start = tuple(int(c) for c in np.asarray(start))
    goal = tuple(int(c) for c in np.asarray(goal))
    mask = (region.values >= threshold) & ~grid.occupancy
    labels, n = ndimage.label(mask, structure=_CUBE)
    keep = {labels[start], labels[goal]} - {0}
    if not keep:
        raise EmptyRegionError(
            "filtering removed everything except the forced start/goal voxels"
        )
    mask = np.isin(labels, list(keep))
    mask[start] = True
    mask[goal] = True
    return HeuristicRegion(mask.astype(np.float32))


def connectivity_penalty(region: HeuristicRegion, delta: float) -> float:
    """Fragmentation penalty: sum over ordered member pairs (i, j in
    Neighbours(i)) of max(0, |p_i - p_j| - delta), distances in voxel units.

    Neighbours(i) is the 26-neighborhood restricted to region members; a
    member with no such neighbor falls back to its nearest region point, so
    isolated fragments are penalized rather than ignored.
    """
    pts = region.member_indices().astype(float)
    if len(pts) <= 1:
        return 0.0
    tree = cKDTree(pts)
    total = 0.0
    # All pairs within sqrt(3): candidate 26-neighbors (distance can't exceed
    # sqrt(3) for Chebyshev distance 1, and any pair within sqrt(3) is one).
    pairs = tree.query_pairs(np.sqrt(3.0) + 1e-9, output_type="ndarray")
    has_neighbor = np.zeros(len(pts), dtype=bool)
    if len(pairs):
        d = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
        cheb = np.max(np.abs(pts[pairs[:, 0]] - pts[pairs[:, 1]]), axis=1)
        adj = cheb <= 1.0 + 1e-9
        total += 2.0 * float(np.sum(np.maximum(0.0, d[adj] - delta)))
        has_neighbor[pairs[adj, 0]] = True
        has_neighbor[pairs[adj, 1]] = True
    isolated = np.flatnonzero(~has_neighbor)
    if len(isolated):
        d, _ = tree.query(pts[isolated], k=2)
        total += float(np.sum(np.maximum(0.0, d[:, 1] - delta)))
    return total


def safety_penalty(region: HeuristicRegion, grid: OccupancyGrid) -> float:
    """Sum over region members of sigmoid(p_i * e_i), e_i the occupancy bit."""
    if region.dims != grid.dims:
        raise ValueError("region/grid dims mismatch")
    members = region.values > 0.0
    x = region.values[members] * grid.occupancy[members]
    return float(np.sum(1.0 / (1.0 + np.exp(-x))))


def is_connected(region: HeuristicRegion, start, goal) -> bool:
    """True iff a 26-connected path of region voxels joins start to goal."""
    start = tuple(int(c) for c in np.asarray(start))
    goal = tuple(int(c) for c in np.asarray(goal))
    mask = region.mask
    if not (mask[start] and mask[goal]):
        return False
    labels, _ = ndimage.label(mask, structure=_CUBE)
    return labels[start] == labels[goal]


def is_safe(region: HeuristicRegion, grid: OccupancyGrid) -> bool:
    """True iff at most one voxel is both a region member and occupied."""
    if region.dims != grid.dims:
        raise ValueError("region/grid dims mismatch")
    return int(np.count_nonzero(region.mask & grid.occupancy)) <= 1


def sample_region(
    region: HeuristicRegion,
    rng: np.random.Generator,
    origin=(0.0, 0.0, 0.0),
    resolution: float = 1.0,
) -> np.ndarray:
    """Draw a world point: a member voxel with probability proportional to
    its value, then uniform within that voxel."""
    idx = region.member_indices()
    if len(idx) == 0:
        raise EmptyRegionError("cannot sample from an empty region")
    w = region.values[idx[:, 0], idx[:, 1], idx[:, 2]].astype(float)
    choice = rng.choice(len(idx), p=w / w.sum())
    return np.asarray(origin, dtype=float) + (idx[choice] + rng.random(3)) * resolution


def save_region(region: HeuristicRegion, path) -> None:
    nx, ny, nz = region.dims
    with open(path, "wb") as f:
        f.write(_REGION_HEADER.pack(REGION_MAGIC, nx, ny, nz))
        f.write(np.asfortranarray(region.values).tobytes(order="F"))


def load_region(path) -> HeuristicRegion:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _REGION_HEADER.size:
        raise RegionFileError("truncated region header")
    magic, nx, ny, nz = _REGION_HEADER.unpack_from(raw)
    if magic != REGION_MAGIC:
        raise RegionFileError(f"bad magic {magic!r}; expected {REGION_MAGIC!r}")
    if min(nx, ny, nz) < 1:
        raise RegionFileError("malformed header: nonpositive dims")
    ncells = nx * ny * nz
    payload = raw[_REGION_HEADER.size :]
    if len(payload) < 4 * ncells:
        raise RegionFileError("truncated value payload")
    vals = np.frombuffer(payload[: 4 * ncells], dtype="<f4").reshape(
        (nx, ny, nz), order="F"
    )
    try:
        return HeuristicRegion(vals)
    except ValueError as e:
        raise RegionFileError(str(e)) from e
