"""Static visualizations of histories, labels and predicted candidates."""
from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .gridmap import OccupancyGrid, occupied_points
from .scene import Scene, Window, slice_windows

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def render_window(window: Window, predictions: dict[str, np.ndarray] | None = None,
                  grid: OccupancyGrid | None = None, ax=None):
    """Draw one window: obstacle cells, per-pedestrian history (solid),
    future labels (dashed) and predicted candidates (dotted)."""
    if ax is None:
        _, ax = plt.subplots(figsize=(6, 6))
    if grid is not None and not grid.is_empty:
        occ = occupied_points(grid)
        half = grid.resolution / 2
        for x, y in occ:
            ax.add_patch(plt.Rectangle((x - half, y - half), grid.resolution,
                                       grid.resolution, color="0.55", zorder=1))
    for i, pid in enumerate(window.pedestrian_ids):
        color = _COLORS[i % len(_COLORS)]
        hist = window.hist_xy[i][window.hist_obs[i]]
        if len(hist):
            line, = ax.plot(hist[:, 0], hist[:, 1], "-o", color=color, ms=3,
                            lw=1.5, zorder=3, label=f"{pid} history")
            line.set_gid("history")
        fut = window.fut_xy[i][window.fut_obs[i]]
        if len(fut):
            line, = ax.plot(fut[:, 0], fut[:, 1], "--", color=color, lw=1.2, zorder=2)
            line.set_gid("label")
        if predictions and pid in predictions:
            cands = predictions[pid]  # [k, t_pred, 2]
            for k in range(cands.shape[0]):
                line, = ax.plot(cands[k, :, 0], cands[k, :, 1], ":",
                                color=color, lw=1.0, alpha=0.8, zorder=4)
                line.set_gid("prediction")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{window.scene_id} @ t0={window.t0}")
    return ax


def plot_predictions(
    records: list[dict],
    scenes: list[Scene],
    grid: OccupancyGrid | None,
    out_dir: str | Path,
    t_obs: int = 8,
    t_pred: int = 12,
    config: dict | None = None,
) -> list[Path]:
    """One image per predicted window; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_window: dict[tuple, dict[str, dict[int, dict[int, tuple]]]] = defaultdict(
        lambda: defaultdict(lambda: defaultdict(dict)))
    for rec in records:
        by_window[(rec["scene_id"], rec["t0"])][rec["pedestrian_id"]][rec["candidate"]][rec["t"]] = (
            rec["x"], rec["y"])

    windows = {}
    for scene in scenes:
        for win in slice_windows(scene, t_obs, t_pred, 1):
            windows[(scene.scene_id, win.t0)] = win

    written = []
    for key, per_ped in sorted(by_window.items()):
        win = windows.get(key)
        if win is None:
            continue
        predictions = {}
        for pid, cand_map in per_ped.items():
            ks = sorted(cand_map)
            arr = np.zeros((len(ks), t_pred, 2))
            for ki, k in enumerate(ks):
                for t, xy in cand_map[k].items():
                    arr[ki, t - 1] = xy
            predictions[pid] = arr
        ax = render_window(win, predictions, grid)
        path = out_dir / f"{key[0]}_t{key[1]}.png"
        ax.figure.savefig(path, dpi=110)
        plt.close(ax.figure)
        written.append(path)
    if config is not None:
        (out_dir / "plot_meta.json").write_text(json.dumps({"_config": config}, indent=2))
    return written
