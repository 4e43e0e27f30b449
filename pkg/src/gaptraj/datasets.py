"""Scene file I/O, dataset corruption and synthetic crowd generation.

Canonical scene format: UTF-8 line-delimited JSON records
``{"scene_id", "frame", "pedestrian_id", "x", "y"}`` where ``x`` and ``y``
are jointly null for UNOBSERVED entries.  A file may hold several scenes;
records are frame-ascending per (scene, pedestrian).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .scene import ObservedPosition, Scene, Track

_REQUIRED_KEYS = ("scene_id", "frame", "pedestrian_id", "x", "y")


def _parse_record(line: str, lineno: int) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {lineno}: not valid JSON ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise DataError(f"line {lineno}: record must be a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in rec]
    if missing:
        raise DataError(f"line {lineno}: missing keys {missing}")
    x, y = rec["x"], rec["y"]
    if (x is None) != (y is None):
        raise DataError(f"line {lineno}: x and y must be jointly null, got x={x!r} y={y!r}")
    if x is not None and not (math.isfinite(float(x)) and math.isfinite(float(y))):
        raise DataError(f"line {lineno}: non-finite coordinates")
    if not isinstance(rec["frame"], int):
        raise DataError(f"line {lineno}: frame must be an integer, got {rec['frame']!r}")
    return rec


def load_scenes(path: str | Path, frame_rate_hz: float = 2.5) -> list[Scene]:
    """Load scenes from a canonical scene file, partitioning records by scene_id.

    Lines holding a ``{"_config": ...}`` object (CLI provenance headers) are
    skipped.  Malformed records and non-monotonic frames raise
    :class:`DataError` naming the offending line.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"scene file not found: {path}")

    # scene -> pedestrian -> list[(frame, x|None, y|None)]
    per_track: dict[str, dict[str, list[tuple[int, float | None, float | None]]]] = {}
    scene_order: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith('{"_config"'):
                continue
            rec = _parse_record(line, lineno)
            sid = str(rec["scene_id"])
            pid = str(rec["pedestrian_id"])
            if sid not in per_track:
                per_track[sid] = {}
                scene_order.append(sid)
            rows = per_track[sid].setdefault(pid, [])
            frame = rec["frame"]
            if rows and frame <= rows[-1][0]:
                raise DataError(
                    f"line {lineno}: non-monotonic frame {frame} for pedestrian "
                    f"{pid!r} in scene {sid!r} (previous frame {rows[-1][0]})"
                )
            rows.append((frame, rec["x"], rec["y"]))

    scenes = []
    for sid in scene_order:
        tracks: dict[str, Track] = {}
        for pid, rows in per_track[sid].items():
            first = rows[0][0]
            span = rows[-1][0] - first + 1
            positions = [ObservedPosition.unobserved()] * span
            for frame, x, y in rows:
                if x is not None:
                    positions[frame - first] = ObservedPosition.observed(float(x), float(y))
            tracks[pid] = Track(pedestrian_id=pid, first_frame=first, positions=tuple(positions))
        scenes.append(Scene(scene_id=sid, tracks=tracks, frame_rate_hz=frame_rate_hz))
    return scenes


def save_scenes(scenes, path: str | Path) -> None:
    """Write scenes to one canonical file; round-trips through load_scenes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for scene in scenes:
            frames = range(scene.first_frame, scene.last_frame + 1) if scene.tracks else ()
            for frame in frames:
                for pid, track in scene.tracks.items():
                    if frame < track.first_frame or frame > track.last_frame:
                        continue
                    p = track.at(frame)
                    rec = {
                        "scene_id": scene.scene_id,
                        "frame": frame,
                        "pedestrian_id": pid,
                        "x": p.x,
                        "y": p.y,
                    }
                    fh.write(json.dumps(rec) + "\n")


@dataclass(frozen=True)
class CorruptionSpec:
    """Randomly hide observed entries to mimic extra occlusion."""

    drop_fraction: float = 0.10
    seed: int = 0
    scope: str = "observations_only"

    def __post_init__(self):
        if not 0.0 <= self.drop_fraction <= 1.0:
            raise ValueError("drop_fraction must lie in [0, 1]")
        if self.scope != "observations_only":
            raise ValueError(f"unsupported corruption scope: {self.scope!r}")


def corrupt(scenes, spec: CorruptionSpec) -> list[Scene]:
    """Return an observation view with round(drop_fraction * N) OBSERVED
    entries flipped to UNOBSERVED, exact count, deterministic by seed.

    The input scenes are untouched and serve as the label view; labels must
    always be read from them.
    """
    entries = []  # (scene index, pedestrian id, frame)
    for si, scene in enumerate(scenes):
        for pid, track in scene.tracks.items():
            for frame in track.observed_frames():
                entries.append((si, pid, frame))
    n_drop = int(round(spec.drop_fraction * len(entries)))
    rng = np.random.default_rng(spec.seed)
    drop_idx = rng.choice(len(entries), size=n_drop, replace=False) if n_drop else []
    dropped: set[tuple[int, str, int]] = {entries[i] for i in drop_idx}

    out = []
    for si, scene in enumerate(scenes):
        tracks = {}
        for pid, track in scene.tracks.items():
            positions = [
                ObservedPosition.unobserved()
                if (si, pid, track.first_frame + k) in dropped
                else p
                for k, p in enumerate(track.positions)
            ]
            tracks[pid] = Track(pid, track.first_frame, tuple(positions))
        out.append(Scene(scene.scene_id, tracks, scene.frame_rate_hz, scene.grid_ref))
    return out


Box = tuple[float, float, float, float]  # (xmin, ymin, xmax, ymax)


def _in_box(x: float, y: float, box: Box) -> bool:
    return box[0] <= x <= box[2] and box[1] <= y <= box[3]


def _in_any(x: float, y: float, boxes) -> bool:
    return any(_in_box(x, y, b) for b in boxes)


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic crowd scene: walkers, sensor-shadow occluders, solid obstacles.

    Occluder boxes hide a walker (UNOBSERVED) exactly while it is inside one;
    solid boxes are impassable — walkers steer around them — and double as
    the geometry from which benchmark occupancy grids are rasterized.
    """

    n_pedestrians: int = 3
    n_frames: int = 30
    walker_model: str = "waypoint"          # waypoint | crossing | standing
    occluders: tuple[Box, ...] = ()
    speed_range: tuple[float, float] = (0.3, 0.5)   # meters per frame
    seed: int = 0
    solid_boxes: tuple[Box, ...] = ()
    arena: tuple[float, float] = (12.0, 12.0)       # width, height centered on origin
    scene_id: str = "synthetic"

    def __post_init__(self):
        if self.walker_model not in ("waypoint", "crossing", "standing"):
            raise ValueError(f"unknown walker model: {self.walker_model!r}")
        if self.n_pedestrians < 1 or self.n_frames < 1:
            raise ValueError("need at least one pedestrian and one frame")
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise ValueError("speed_range must satisfy 0 <= lo <= hi")


def _arena_bounds(spec: SynthSpec) -> Box:
    w, h = spec.arena
    return (-w / 2, -h / 2, w / 2, h / 2)


def _sample_free_point(rng, spec: SynthSpec) -> np.ndarray:
    xmin, ymin, xmax, ymax = _arena_bounds(spec)
    for _ in range(1000):
        p = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])
        if not _in_any(p[0], p[1], spec.solid_boxes):
            return p
    raise DataError("could not place a walker outside the solid boxes")


PERSONAL_RADIUS_M = 0.45


def _steer(pos: np.ndarray, goal: np.ndarray, speed: float, blocked) -> np.ndarray:
    """One bounded step toward goal, rotating away from blocked space if needed."""
    d = goal - pos
    dist = float(np.hypot(*d))
    if dist < 1e-9:
        return pos.copy()
    step = min(speed, dist)
    heading = math.atan2(d[1], d[0])
    # Try the direct heading first, then symmetric detours.
    for delta_deg in (0, 25, -25, 50, -50, 80, -80, 115, -115, 150, -150):
        a = heading + math.radians(delta_deg)
        cand = pos + step * np.array([math.cos(a), math.sin(a)])
        if not blocked(cand):
            return cand
    return pos.copy()  # boxed in: stand still this frame


def generate_synthetic(spec: SynthSpec) -> Scene:
    """Generate one scene; deterministic by seed.

    Walkers steer around solid boxes and keep a personal radius from each
    other, so neighbor positions genuinely shape trajectories.  Raises
    :class:`DataError` if an occluder covers the whole arena (or the
    occluders leave no observable data at all).
    """
    arena = _arena_bounds(spec)
    for occ in spec.occluders:
        if occ[0] <= arena[0] and occ[1] <= arena[1] and occ[2] >= arena[2] and occ[3] >= arena[3]:
            raise DataError("occluder covers the entire arena; no observable data")

    rng = np.random.default_rng(spec.seed)
    xmin, ymin, xmax, ymax = arena
    n = spec.n_pedestrians

    pos = np.zeros((n, 2))
    goals = np.zeros((n, 2))
    speeds = np.zeros(n)

    def clear_of_others(p, k):
        return all(np.hypot(*(p - pos[j])) >= PERSONAL_RADIUS_M for j in range(k))

    for k in range(n):
        speeds[k] = rng.uniform(*spec.speed_range)
        for _ in range(50):
            if spec.walker_model == "standing":
                pos[k] = _sample_free_point(rng, spec)
                goals[k] = pos[k]
            elif spec.walker_model == "crossing":
                # Alternate left->right and bottom->top crossings.
                if k % 2 == 0:
                    y0 = rng.uniform(ymin * 0.6, ymax * 0.6)
                    pos[k] = (xmin + 0.5, y0)
                    goals[k] = (xmax - 0.5, y0 + rng.uniform(-1.0, 1.0))
                else:
                    x0 = rng.uniform(xmin * 0.6, xmax * 0.6)
                    pos[k] = (x0, ymin + 0.5)
                    goals[k] = (x0 + rng.uniform(-1.0, 1.0), ymax - 0.5)
                if _in_any(pos[k, 0], pos[k, 1], spec.solid_boxes):
                    pos[k] = _sample_free_point(rng, spec)
            else:
                pos[k] = _sample_free_point(rng, spec)
                goals[k] = _sample_free_point(rng, spec)
            if clear_of_others(pos[k], k):
                break

    paths = np.empty((n, spec.n_frames, 2))
    paths[:, 0] = pos
    for t in range(1, spec.n_frames):
        for k in range(n):
            if spec.walker_model == "standing":
                paths[k, t] = pos[k]
                continue
            if float(np.hypot(*(goals[k] - pos[k]))) < speeds[k] and spec.walker_model == "waypoint":
                goals[k] = _sample_free_point(rng, spec)
                # crossing walkers stand once they arrive

            def blocked(p, k=k):
                if _in_any(p[0], p[1], spec.solid_boxes):
                    return True
                for j in range(n):
                    if j != k and np.hypot(*(p - pos[j])) < PERSONAL_RADIUS_M:
                        return True
                return False

            pos[k] = _steer(pos[k], goals[k], speeds[k], blocked)
            paths[k, t] = pos[k]

    tracks: dict[str, Track] = {}
    any_observed = False
    for k in range(n):
        positions = []
        for t in range(spec.n_frames):
            x, y = float(paths[k, t, 0]), float(paths[k, t, 1])
            if _in_any(x, y, spec.occluders):
                positions.append(ObservedPosition.unobserved())
            else:
                positions.append(ObservedPosition.observed(x, y))
                any_observed = True
        pid = f"p{k}"
        tracks[pid] = Track(pid, 0, tuple(positions))

    if not any_observed:
        raise DataError("occluders hide every generated position; no observable data")
    return Scene(scene_id=spec.scene_id, tracks=tracks)
