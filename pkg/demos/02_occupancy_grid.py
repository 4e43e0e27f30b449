#!/usr/bin/env python3
"""From a raw point cloud to an occupancy grid and obstacle queries.

The rasterizer keeps points inside a z band (drops ground returns and
overhead structure) and marks a cell occupied once enough points land in it.
Obstacle lookup then asks: which occupied cells lie strictly closer than
``od`` to a predicted trajectory?
"""
import numpy as np

from gaptraj import min_distance, obstacles_near, occupied_points, rasterize, thin_obstacles
from gaptraj.benchmark import SOLID_BOXES, box_point_cloud

cloud = box_point_cloud(SOLID_BOXES, spacing=0.1)
# salt the cloud with ground returns and sensor noise that the z band rejects
rng = np.random.default_rng(0)
ground = np.column_stack([rng.uniform(-6, 6, 400), rng.uniform(-6, 6, 400), np.full(400, 0.03)])
noise = np.column_stack([rng.uniform(-6, 6, 30), rng.uniform(-6, 6, 30), rng.uniform(0.4, 1.6, 30)])
cloud = np.vstack([cloud, ground, noise])

grid = rasterize(cloud, resolution=0.2, z_band=(0.2, 2.0), count_threshold=3)
print(f"cloud: {cloud.shape[0]} points -> grid {grid.width}x{grid.height} "
      f"at {grid.resolution} m/cell, {int(grid.cells.sum())} occupied cells")

# a straight walking line passing the central block
trajectory = np.column_stack([np.linspace(-3.0, 3.0, 13), np.full(13, 1.9)])
d = min(min_distance(p, occupied_points(grid)) for p in trajectory)
print(f"closest approach of the trajectory to any occupied cell: {d:.2f} m")

near = obstacles_near(grid, trajectory, od=0.8)
thinned = thin_obstacles(near, fd=1.0)
print(f"occupied cells within od=0.8 of the trajectory: {near.shape[0]}")
print(f"after greedy thinning at fd=1.0 (the graph gets these as nodes): {thinned.shape[0]}")
for x, y in thinned:
    print(f"  obstacle node candidate at ({x:+.2f}, {y:+.2f})")
