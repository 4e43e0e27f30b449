"""A small reproducible benchmark world: crossing crowds, sensor shadows and
solid obstacles, plus the matching occupancy grid.

Walkers cross a 12 m arena and steer around a central block and a side wall;
two occluder strips hide them for a few frames on the way.  The grid is
rasterized from a synthetic point cloud sampled on the solid boxes, exactly
like a map built from real scans would be.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import SynthSpec, generate_synthetic
from .gridmap import OccupancyGrid, rasterize
from .scene import Scene

ARENA = (12.0, 12.0)
# Solid geometry sits off-center so walkers do pass near the origin: a padded
# (0, 0) must stay distinguishable from a real pedestrian standing there,
# which is exactly the ambiguity the observation codes resolve.
SOLID_BOXES = (
    (0.8, 0.8, 3.2, 3.2),      # block in the upper-right quadrant
    (-4.8, -3.6, -2.6, -2.4),  # low wall lower-left
)
OCCLUDERS = (
    (-3.8, -1.2, -1.6, 1.4),   # shadow across the left corridor
    (1.6, -3.6, 3.6, -1.2),    # shadow across the lower-right corridor
    (-1.2, 2.0, 1.2, 4.2),     # shadow above the origin
)


def box_point_cloud(boxes, spacing: float = 0.1, heights=(0.5, 1.0, 1.5)) -> np.ndarray:
    """Sample box perimeters at several heights, the way walls return scans."""
    pts = []
    for (x0, y0, x1, y1) in boxes:
        nx = max(int(np.ceil((x1 - x0) / spacing)), 2)
        ny = max(int(np.ceil((y1 - y0) / spacing)), 2)
        xs = np.linspace(x0, x1, nx)
        ys = np.linspace(y0, y1, ny)
        for z in heights:
            for x in xs:
                pts.append((x, y0, z))
                pts.append((x, y1, z))
            for y in ys:
                pts.append((x0, y, z))
                pts.append((x1, y, z))
    return np.asarray(pts, dtype=np.float64)


@dataclass
class Benchmark:
    train_scenes: list[Scene]
    test_scenes: list[Scene]
    grid: OccupancyGrid
    cloud: np.ndarray
    grids: dict[str, OccupancyGrid] = field(default_factory=dict)

    def grid_map(self) -> dict[str, OccupancyGrid]:
        out = {s.scene_id: self.grid for s in self.train_scenes}
        out.update({s.scene_id: self.grid for s in self.test_scenes})
        return out


def make_benchmark(
    n_train_scenes: int = 8,
    n_test_scenes: int = 4,
    n_pedestrians: int = 5,
    n_frames: int = 26,
    seed: int = 0,
    resolution: float = 0.2,
    with_occlusion: bool = True,
) -> Benchmark:
    occluders = OCCLUDERS if with_occlusion else ()

    def scene(idx, tag):
        return generate_synthetic(SynthSpec(
            n_pedestrians=n_pedestrians,
            n_frames=n_frames,
            walker_model="crossing",
            occluders=occluders,
            speed_range=(0.25, 0.45),
            seed=seed * 1000 + idx,
            solid_boxes=SOLID_BOXES,
            arena=ARENA,
            scene_id=f"{tag}{idx}",
        ))

    train_scenes = [scene(i, "train") for i in range(n_train_scenes)]
    test_scenes = [scene(1000 + i, "test") for i in range(n_test_scenes)]
    cloud = box_point_cloud(SOLID_BOXES)
    grid = rasterize(cloud, resolution=resolution, z_band=(0.2, 2.0), count_threshold=3)
    bench = Benchmark(train_scenes, test_scenes, grid, cloud)
    bench.grids = bench.grid_map()
    return bench
