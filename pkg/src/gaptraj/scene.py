"""Scenes, tracks and prediction windows with explicit observation gaps.

A pedestrian that is occluded (or absent) at a frame is UNOBSERVED there;
positions only exist for OBSERVED frames.  Windows slice a scene into one
history block of ``t_obs`` frames and one future block of ``t_pred`` frames
per anchor frame ``t0``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

DEFAULT_FRAME_RATE_HZ = 2.5
DEFAULT_T_OBS = 8
DEFAULT_T_PRED = 12


class ObsState(Enum):
    OBSERVED = "observed"
    UNOBSERVED = "unobserved"


class Mode(Enum):
    """How incomplete histories are handled when a window is materialized."""

    FILTRATION = "filtration"   # keep only fully observed histories
    PAD = "pad"                 # keep eligible pedestrians, gaps become (0,0) downstream


@dataclass(frozen=True)
class ObservedPosition:
    state: ObsState
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        if self.state is ObsState.OBSERVED:
            if self.x is None or self.y is None:
                raise ValueError("OBSERVED position requires coordinates")
            if not (math.isfinite(self.x) and math.isfinite(self.y)):
                raise ValueError("OBSERVED position requires finite coordinates")
        else:
            if self.x is not None or self.y is not None:
                raise ValueError("UNOBSERVED position carries no coordinates")

    @classmethod
    def observed(cls, x: float, y: float) -> "ObservedPosition":
        return cls(ObsState.OBSERVED, float(x), float(y))

    @classmethod
    def unobserved(cls) -> "ObservedPosition":
        return cls(ObsState.UNOBSERVED)

    @property
    def is_observed(self) -> bool:
        return self.state is ObsState.OBSERVED


_UNOBSERVED = ObservedPosition.unobserved()


@dataclass(frozen=True)
class Track:
    """Positions of one pedestrian over a contiguous span of frames."""

    pedestrian_id: str
    first_frame: int
    positions: tuple[ObservedPosition, ...]

    @property
    def last_frame(self) -> int:
        return self.first_frame + len(self.positions) - 1

    def at(self, frame: int) -> ObservedPosition:
        """Position at an absolute frame; UNOBSERVED outside the track's lifetime."""
        if frame < self.first_frame or frame > self.last_frame:
            return _UNOBSERVED
        return self.positions[frame - self.first_frame]

    def observed_frames(self) -> list[int]:
        return [self.first_frame + i for i, p in enumerate(self.positions) if p.is_observed]


@dataclass
class Scene:
    """A set of tracks sharing one frame clock."""

    scene_id: str
    tracks: dict[str, Track] = field(default_factory=dict)
    frame_rate_hz: float = DEFAULT_FRAME_RATE_HZ
    grid_ref: str | None = None

    def __post_init__(self):
        if self.frame_rate_hz <= 0:
            raise ValueError("frame_rate_hz must be positive")

    @property
    def first_frame(self) -> int:
        return min(t.first_frame for t in self.tracks.values())

    @property
    def last_frame(self) -> int:
        return max(t.last_frame for t in self.tracks.values())

    @property
    def n_frames(self) -> int:
        if not self.tracks:
            return 0
        return self.last_frame - self.first_frame + 1


@dataclass
class Window:
    """One prediction sample: history over frames t0-t_obs+1..t0, future over t0+1..t0+t_pred.

    Coordinate arrays are junk wherever the observation mask is False; the
    masks are the single source of truth for observability.
    """

    scene_id: str
    t0: int
    pedestrian_ids: tuple[str, ...]
    hist_xy: np.ndarray    # [m, t_obs, 2]
    hist_obs: np.ndarray   # [m, t_obs] bool
    fut_xy: np.ndarray     # [m, t_pred, 2]
    fut_obs: np.ndarray    # [m, t_pred] bool
    mode: Mode | None = None

    @property
    def m(self) -> int:
        return len(self.pedestrian_ids)

    @property
    def t_obs(self) -> int:
        return self.hist_xy.shape[1]

    @property
    def t_pred(self) -> int:
        return self.fut_xy.shape[1]

    def select(self, keep: np.ndarray, mode: Mode | None = None) -> "Window":
        """New window restricted to the pedestrians flagged in ``keep``."""
        idx = np.flatnonzero(keep)
        return Window(
            scene_id=self.scene_id,
            t0=self.t0,
            pedestrian_ids=tuple(self.pedestrian_ids[i] for i in idx),
            hist_xy=self.hist_xy[idx].copy(),
            hist_obs=self.hist_obs[idx].copy(),
            fut_xy=self.fut_xy[idx].copy(),
            fut_obs=self.fut_obs[idx].copy(),
            mode=mode if mode is not None else self.mode,
        )

    def to_payload(self) -> str:
        """Deterministic JSON serialization (used by byte-equality tests)."""
        def grid(xy, obs):
            rows = []
            for i in range(xy.shape[0]):
                row = []
                for t in range(xy.shape[1]):
                    if obs[i, t]:
                        row.append([float(xy[i, t, 0]), float(xy[i, t, 1])])
                    else:
                        row.append(None)
                rows.append(row)
            return rows

        return json.dumps(
            {
                "scene_id": self.scene_id,
                "t0": self.t0,
                "pedestrian_ids": list(self.pedestrian_ids),
                "mode": self.mode.value if self.mode else None,
                "history": grid(self.hist_xy, self.hist_obs),
                "future": grid(self.fut_xy, self.fut_obs),
            },
            sort_keys=True,
        )


def slice_windows(
    scene: Scene,
    t_obs: int = DEFAULT_T_OBS,
    t_pred: int = DEFAULT_T_PRED,
    stride: int = 1,
) -> list[Window]:
    """Cut a scene into prediction windows.

    A pedestrian is included in a window iff it has at least one OBSERVED
    frame in the window's history span; frames where it is absent from the
    scene are encoded UNOBSERVED.  Scenes shorter than t_obs + t_pred frames
    yield no windows.
    """
    if t_obs < 1 or t_pred < 1 or stride < 1:
        raise ValueError("t_obs, t_pred and stride must be >= 1")
    if not scene.tracks or scene.n_frames < t_obs + t_pred:
        return []

    ids = list(scene.tracks)
    first, last = scene.first_frame, scene.last_frame
    windows = []
    for t0 in range(first + t_obs - 1, last - t_pred + 1, stride):
        hist_frames = range(t0 - t_obs + 1, t0 + 1)
        fut_frames = range(t0 + 1, t0 + t_pred + 1)
        kept_ids, hxy, hobs, fxy, fobs = [], [], [], [], []
        for pid in ids:
            track = scene.tracks[pid]
            h = [track.at(f) for f in hist_frames]
            if not any(p.is_observed for p in h):
                continue
            f = [track.at(fr) for fr in fut_frames]
            kept_ids.append(pid)
            hxy.append([[p.x, p.y] if p.is_observed else [0.0, 0.0] for p in h])
            hobs.append([p.is_observed for p in h])
            fxy.append([[p.x, p.y] if p.is_observed else [0.0, 0.0] for p in f])
            fobs.append([p.is_observed for p in f])
        if not kept_ids:
            continue
        windows.append(
            Window(
                scene_id=scene.scene_id,
                t0=t0,
                pedestrian_ids=tuple(kept_ids),
                hist_xy=np.asarray(hxy, dtype=np.float64),
                hist_obs=np.asarray(hobs, dtype=bool),
                fut_xy=np.asarray(fxy, dtype=np.float64),
                fut_obs=np.asarray(fobs, dtype=bool),
            )
        )
    return windows


def is_eligible(hist_obs_row) -> bool:
    """Prediction eligibility: observed at the latest frame and at more than
    2 frames of the history overall (i.e. >= 3 including the latest)."""
    row = np.asarray(hist_obs_row, dtype=bool)
    return bool(row[-1]) and int(row.sum()) > 2


def materialize_mode(window: Window, mode: Mode) -> Window:
    """Apply a prediction mode to a window.

    FILTRATION keeps only pedestrians whose history is fully observed; PAD
    keeps eligible pedestrians (gap frames stay UNOBSERVED here — the zero
    substitution happens at graph construction so the observation state can
    still be encoded).  A window with no eligible pedestrian comes back with
    m == 0, which callers use as the skip flag.
    """
    if mode is Mode.FILTRATION:
        keep = window.hist_obs.all(axis=1)
    elif mode is Mode.PAD:
        keep = np.array([is_eligible(r) for r in window.hist_obs], dtype=bool)
    else:
        raise ValueError(f"unknown mode: {mode!r}")
    return window.select(keep, mode=mode)
