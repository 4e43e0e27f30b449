"""Occupancy grids: rasterization from point clouds and obstacle queries.

Cell (r, c) covers the square with corner (x0 + c*res, y0 + r*res); its
center is offset by half a cell.  Grids are immutable after construction and
all queries are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class OccupancyGrid:
    x0: float
    y0: float
    resolution: float
    cells: np.ndarray  # [height, width] bool, row-major

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.cells.size == 0 or not self.cells.any()

    def bounds(self) -> tuple[float, float, float, float]:
        return (
            self.x0,
            self.y0,
            self.x0 + self.width * self.resolution,
            self.y0 + self.height * self.resolution,
        )

    def cell_center(self, r: int, c: int) -> tuple[float, float]:
        return (
            self.x0 + (c + 0.5) * self.resolution,
            self.y0 + (r + 0.5) * self.resolution,
        )


def empty_grid() -> OccupancyGrid:
    return OccupancyGrid(0.0, 0.0, 1.0, np.zeros((0, 0), dtype=bool))


def rasterize(
    cloud,
    resolution: float = 0.2,
    z_band: tuple[float, float] = (0.2, 2.0),
    count_threshold: int = 3,
) -> OccupancyGrid:
    """Bin a point cloud into an occupancy grid.

    A cell is occupied iff at least ``count_threshold`` points whose z lies
    within ``z_band`` fall inside it; points outside the band (ground
    returns, canopy) are ignored.  An empty cloud yields a 0x0 grid.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    z_min, z_max = z_band
    if not z_min < z_max:
        raise ValueError("z_band must satisfy z_min < z_max")
    if count_threshold < 1:
        raise ValueError("count_threshold must be >= 1")

    pts = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        return empty_grid()
    if not np.isfinite(pts).all():
        raise ValueError("point cloud contains non-finite coordinates")

    keep = (pts[:, 2] >= z_min) & (pts[:, 2] <= z_max)
    pts = pts[keep]
    if pts.shape[0] == 0:
        return empty_grid()

    x0 = float(np.floor(pts[:, 0].min() / resolution) * resolution)
    y0 = float(np.floor(pts[:, 1].min() / resolution) * resolution)
    cols = np.floor((pts[:, 0] - x0) / resolution).astype(int)
    rows = np.floor((pts[:, 1] - y0) / resolution).astype(int)
    width = int(cols.max()) + 1
    height = int(rows.max()) + 1
    counts = np.zeros((height, width), dtype=np.int64)
    np.add.at(counts, (rows, cols), 1)
    return OccupancyGrid(x0, y0, resolution, counts >= count_threshold)


def occupied_points(grid: OccupancyGrid) -> np.ndarray:
    """Centers of all occupied cells, row-major order, shape [k, 2]."""
    if grid.cells.size == 0:
        return np.zeros((0, 2), dtype=np.float64)
    rr, cc = np.nonzero(grid.cells)
    xs = grid.x0 + (cc + 0.5) * grid.resolution
    ys = grid.y0 + (rr + 0.5) * grid.resolution
    return np.column_stack([xs, ys])


def min_distance(point, trajset) -> float:
    """Minimum Euclidean distance from ``point`` to a nonempty point set."""
    pts = np.asarray(trajset, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("trajset must be nonempty")
    p = np.asarray(point, dtype=np.float64)
    return float(np.min(np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])))


def obstacles_near(grid: OccupancyGrid, predicted_points, od: float) -> np.ndarray:
    """Occupied cell centers strictly closer than ``od`` to any predicted point."""
    if od <= 0:
        raise ValueError("od must be positive")
    occ = occupied_points(grid)
    traj = np.asarray(predicted_points, dtype=np.float64).reshape(-1, 2)
    if occ.shape[0] == 0 or traj.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.float64)
    d2 = ((occ[:, None, :] - traj[None, :, :]) ** 2).sum(axis=2)
    near = np.sqrt(d2.min(axis=1)) < od
    return occ[near]


def thin_obstacles(points, fd: float) -> np.ndarray:
    """Greedy spatial thinning: scan points in lexicographic (x, y) order and
    keep one iff no already-kept point lies within ``fd``."""
    if fd < 0:
        raise ValueError("fd must be nonnegative")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if fd == 0 or pts.shape[0] == 0:
        return pts.copy()
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    kept: list[np.ndarray] = []
    for i in order:
        p = pts[i]
        if all(np.hypot(*(p - q)) > fd for q in kept):
            kept.append(p)
    return np.asarray(kept)


GRID_MAGIC = "ogrid v1"


def save_grid(grid: OccupancyGrid, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{GRID_MAGIC} {grid.width} {grid.height} {grid.x0!r} {grid.y0!r} {grid.resolution!r}"]
    for r in range(grid.height):
        lines.append("".join("#" if grid.cells[r, c] else "." for c in range(grid.width)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_grid(path: str | Path) -> OccupancyGrid:
    path = Path(path)
    if not path.exists():
        raise DataError(f"grid file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(GRID_MAGIC):
        raise DataError(f"{path}: not an '{GRID_MAGIC}' file")
    parts = lines[0].split()
    if len(parts) != 7:
        raise DataError(f"{path}: malformed grid header")
    width, height = int(parts[2]), int(parts[3])
    x0, y0, res = float(parts[4]), float(parts[5]), float(parts[6])
    rows = lines[1 : 1 + height]
    if len(rows) != height or any(len(r) != width for r in rows):
        raise DataError(f"{path}: grid body does not match header dimensions")
    cells = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
    cells = cells.reshape(height, width)
    return OccupancyGrid(x0, y0, res, cells)


def load_point_cloud(path: str | Path) -> np.ndarray:
    """Read a whitespace-separated ``x y z`` text file into an [n, 3] array."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"point cloud file not found: {path}")
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 'x y z', got {line!r}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric coordinate in {line!r}") from None
    return np.asarray(rows, dtype=np.float64).reshape(-1, 3)
