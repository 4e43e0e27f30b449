"""Two-pass prediction: predict, look up nearby obstacles, predict again.

The first pass runs on the pedestrian-only graph; occupied grid cells
strictly closer than ``od`` to the predicted points become obstacle nodes
(after greedy thinning with radius ``fd``), and the augmented graph is
re-predicted with the same parameters.  Obstacle-node outputs are discarded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import NodeKind, STGraph, build_graph, inject_obstacles
from .gridmap import OccupancyGrid, obstacles_near, thin_obstacles
from .network import Hyper, forward
from .scene import Mode, Track, Window, is_eligible, materialize_mode


@dataclass
class PredictionResult:
    pedestrian_ids: tuple[str, ...]
    candidates: np.ndarray          # [k, t_pred, m, 2]
    chosen: np.ndarray              # [m] candidate index (first candidate by default)
    pass1_trajectories: np.ndarray  # [t_pred, m, 2]
    obstacles_used: np.ndarray      # [j, 2]
    eligibility: dict[str, bool]    # per input pedestrian
    single_pass: bool = False       # true when no grid / no_obs ablation
    scene_id: str = ""
    t0: int = 0

    @property
    def m(self) -> int:
        return len(self.pedestrian_ids)


def _pedestrian_rows(graph: STGraph, cands: np.ndarray, m: int) -> np.ndarray:
    """Reorder network output rows back to window pedestrian order."""
    out = np.zeros((cands.shape[0], cands.shape[1], m, 2))
    for slot, kind in enumerate(graph.kinds):
        if kind is NodeKind.PEDESTRIAN:
            out[:, :, graph.order[slot]] = cands[:, :, slot]
    return out


def align_labels(window: Window, graph: STGraph) -> tuple[np.ndarray, np.ndarray]:
    """Ground truth and label mask in graph slot order; obstacle slots are
    fully masked out so they never contribute to losses or metrics."""
    t_pred = window.t_pred
    gt = np.zeros((t_pred, graph.n, 2))
    mask = np.zeros((t_pred, graph.n), dtype=bool)
    for slot, kind in enumerate(graph.kinds):
        if kind is NodeKind.PEDESTRIAN:
            ent = graph.order[slot]
            gt[:, slot] = window.fut_xy[ent]
            mask[:, slot] = window.fut_obs[ent]
    return gt, mask


# A grid may map only part of a scene; beyond this gap it is almost certainly
# expressed in a different coordinate frame.
FRAME_MISMATCH_MARGIN_M = 10.0


def _check_grid_frame(window: Window, grid: OccupancyGrid) -> None:
    if grid.cells.size == 0:
        return
    obs = window.hist_obs
    if not obs.any():
        return
    pts = window.hist_xy[obs]
    x0, y0, x1, y1 = grid.bounds()
    gap_x = max(0.0, x0 - pts[:, 0].max(), pts[:, 0].min() - x1)
    gap_y = max(0.0, y0 - pts[:, 1].max(), pts[:, 1].min() - y1)
    gap = float(np.hypot(gap_x, gap_y))
    if gap > FRAME_MISMATCH_MARGIN_M:
        raise DataError(
            f"grid and scene appear to live in different coordinate frames: "
            f"observed positions are {gap:.1f} m outside the grid bounds"
        )


def lookup_obstacles(grid: OccupancyGrid, pass1_points: np.ndarray, od: float, fd: float) -> np.ndarray:
    return thin_obstacles(obstacles_near(grid, pass1_points, od), fd)


def second_pass_graph(
    graph1: STGraph,
    pass1_cands: np.ndarray,
    grid: OccupancyGrid,
    od: float,
    fd: float,
    ad: float,
    min_pts: int = 1,
    reorder: bool = True,
    all_candidates: bool = False,
) -> tuple[STGraph, np.ndarray]:
    """Obstacle lookup (first candidate per pedestrian unless ``all_candidates``)
    and graph augmentation; returns (augmented graph, obstacles used)."""
    ped = [s for s, k in enumerate(graph1.kinds) if k is NodeKind.PEDESTRIAN]
    traj = pass1_cands[:, :, ped, :] if all_candidates else pass1_cands[:1, :, ped, :]
    obstacles = lookup_obstacles(grid, traj.reshape(-1, 2), od, fd)
    if obstacles.shape[0] == 0:
        return graph1, obstacles
    return inject_obstacles(graph1, obstacles, eps=ad, min_pts=min_pts, reorder=reorder), obstacles


def predict_two_pass(
    window: Window,
    grid: OccupancyGrid | None,
    params: dict,
    hp: Hyper,
    *,
    mode: Mode = Mode.PAD,
    od: float = 0.8,
    ad: float = 1.0,
    fd: float = 1.0,
    min_pts: int = 1,
    no_obs: bool = False,
    no_clu: bool = False,
    all_candidates: bool = False,
) -> PredictionResult:
    """Predict every eligible pedestrian in a window.

    If the window has not been materialized yet it is materialized with
    ``mode`` here; dropped pedestrians appear in ``eligibility`` as False.
    Without a grid (or under the no_obs ablation) only the first pass runs.
    """
    if window.mode is None:
        mat = materialize_mode(window, mode)
        eligibility = {pid: pid in mat.pedestrian_ids for pid in window.pedestrian_ids}
    else:
        mat = window
        eligibility = {pid: True for pid in window.pedestrian_ids}

    if mat.m == 0:
        t_pred = window.t_pred
        return PredictionResult(
            pedestrian_ids=(),
            candidates=np.zeros((hp.k_candidates, t_pred, 0, 2)),
            chosen=np.zeros(0, dtype=int),
            pass1_trajectories=np.zeros((t_pred, 0, 2)),
            obstacles_used=np.zeros((0, 2)),
            eligibility=eligibility,
            single_pass=True,
            scene_id=window.scene_id,
            t0=window.t0,
        )

    graph1 = build_graph(mat, eps=ad, min_pts=min_pts, reorder=not no_clu)
    cands1, _ = forward(params, hp, graph1)
    pass1 = _pedestrian_rows(graph1, cands1, mat.m)

    if grid is None or no_obs:
        return PredictionResult(
            pedestrian_ids=mat.pedestrian_ids,
            candidates=pass1,
            chosen=np.zeros(mat.m, dtype=int),
            pass1_trajectories=pass1[0],
            obstacles_used=np.zeros((0, 2)),
            eligibility=eligibility,
            single_pass=True,
            scene_id=window.scene_id,
            t0=window.t0,
        )

    _check_grid_frame(mat, grid)
    graph2, obstacles = second_pass_graph(
        graph1, cands1, grid, od, fd, ad, min_pts=min_pts,
        reorder=not no_clu, all_candidates=all_candidates,
    )
    if obstacles.shape[0] == 0:
        final = pass1  # empty obstacle set: the second pass is the first pass
    else:
        cands2, _ = forward(params, hp, graph2)
        final = _pedestrian_rows(graph2, cands2, mat.m)

    return PredictionResult(
        pedestrian_ids=mat.pedestrian_ids,
        candidates=final,
        chosen=np.zeros(mat.m, dtype=int),
        pass1_trajectories=pass1[0],
        obstacles_used=obstacles,
        eligibility=eligibility,
        single_pass=False,
        scene_id=window.scene_id,
        t0=window.t0,
    )


def response_latency(track: Track, t_obs: int = 8, frame_rate_hz: float = 2.5) -> float | None:
    """Seconds of observation after which the pedestrian first becomes
    predictable, counting the first observed frame's own period; None if the
    eligibility rule is never satisfied."""
    observed = track.observed_frames()
    if not observed:
        return None
    first = observed[0]
    for f in range(first, track.last_frame + 1):
        row = [track.at(fr).is_observed for fr in range(f - t_obs + 1, f + 1)]
        if is_eligible(row):
            return (f - first + 1) / frame_rate_hz
    return None


def write_predictions(results, path: str | Path, config: dict | None = None) -> None:
    """Line-delimited prediction records
    {scene_id, t0, pedestrian_id, candidate, t, x, y} with t = 1..t_pred."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        if config is not None:
            fh.write(json.dumps({"_config": config}) + "\n")
        for res in results:
            k, t_pred, m, _ = res.candidates.shape
            for i, pid in enumerate(res.pedestrian_ids):
                for cand in range(k):
                    for t in range(t_pred):
                        fh.write(json.dumps({
                            "scene_id": res.scene_id,
                            "t0": res.t0,
                            "pedestrian_id": pid,
                            "candidate": cand,
                            "t": t + 1,
                            "x": float(res.candidates[cand, t, i, 0]),
                            "y": float(res.candidates[cand, t, i, 1]),
                        }) + "\n")


def read_predictions(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"prediction file not found: {path}")
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith('{"_config"'):
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: bad prediction record ({exc.msg})") from None
    return records
