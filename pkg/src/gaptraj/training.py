"""Masked winner-takes-all training and the mode-matrix evaluation harness.

The loss is the batch mean of the per-window minimum (over candidates) of
the masked average displacement error; gradients flow through the winning
candidate only.  Training is plain Adam at a fixed step, deterministic given
the seed and batch order.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TrainingDiverged
from .graph import build_graph
from .gridmap import OccupancyGrid
from .metrics import ade, fde, min_k
from .network import Hyper, backward, forward, init_params, save_params
from .predictor import align_labels, predict_two_pass, second_pass_graph
from .scene import Mode, Scene, Window, materialize_mode, slice_windows


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 16
    epochs: int = 200
    mode: Mode = Mode.PAD
    no_obs: bool = False
    no_code: bool = False
    no_clu: bool = False
    seed: int = 0
    od: float = 0.8
    ad: float = 1.0
    fd: float = 1.0
    min_pts: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")


def window_loss_grad(cands: np.ndarray, gt: np.ndarray, mask: np.ndarray):
    """Min-over-candidates masked ADE for one window and its gradient
    w.r.t. the candidate tensor (nonzero only for the winning candidate)."""
    if not mask.any():
        raise ValueError("window has no valid label; filter such windows out")
    k = cands.shape[0]
    err = cands - gt[None]
    norms = np.linalg.norm(err, axis=3)          # [k, t, n]
    count = float(mask.sum())
    ades = (norms * mask[None]).sum(axis=(1, 2)) / count
    best = int(np.argmin(ades))
    dcands = np.zeros_like(cands)
    nb = norms[best]
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(nb[:, :, None] > 0, err[best] / np.where(nb == 0, 1.0, nb)[:, :, None], 0.0)
    dcands[best] = unit * (mask[:, :, None] / count)
    return float(ades[best]), dcands, best


def batch_loss(params: dict, hp: Hyper, samples) -> float:
    """Mean min-ADE loss over (graph, gt, mask) triples; no gradients."""
    if not samples:
        raise ValueError("empty batch")
    total = 0.0
    for graph, gt, mask in samples:
        cands, _ = forward(params, hp, graph)
        loss, _, _ = window_loss_grad(cands, gt, mask)
        total += loss
    return total / len(samples)


class Adam:
    def __init__(self, params: dict, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def build_training_windows(
    obs_scenes,
    lbl_scenes,
    mode: Mode,
    t_obs: int = 8,
    t_pred: int = 12,
    stride: int = 1,
) -> list[Window]:
    """Slice the observation view, take labels from the label view, apply the
    mode, and drop windows with no pedestrians or no usable labels."""
    lbl_by_id = {s.scene_id: s for s in lbl_scenes}
    out = []
    for scene in obs_scenes:
        lbl = lbl_by_id.get(scene.scene_id)
        if lbl is None:
            raise ValueError(f"label view is missing scene {scene.scene_id!r}")
        for win in slice_windows(scene, t_obs, t_pred, stride):
            for i, pid in enumerate(win.pedestrian_ids):
                track = lbl.tracks.get(pid)
                for t in range(t_pred):
                    p = track.at(win.t0 + 1 + t) if track else None
                    if p is not None and p.is_observed:
                        win.fut_xy[i, t] = (p.x, p.y)
                        win.fut_obs[i, t] = True
                    else:
                        win.fut_xy[i, t] = 0.0
                        win.fut_obs[i, t] = False
            mat = materialize_mode(win, mode)
            if mat.m > 0 and mat.fut_obs.any():
                out.append(mat)
    return out


def _training_graph(window: Window, grid, params, hp, cfg: TrainConfig):
    """Graph the loss is applied to: pass-2 graph when a grid is in play."""
    g1 = build_graph(window, eps=cfg.ad, min_pts=cfg.min_pts, reorder=not cfg.no_clu)
    if grid is None or cfg.no_obs:
        return g1
    cands1, _ = forward(params, hp, g1)
    g2, _ = second_pass_graph(
        g1, cands1, grid, cfg.od, cfg.fd, cfg.ad,
        min_pts=cfg.min_pts, reorder=not cfg.no_clu,
    )
    return g2


def train(
    windows: list[Window],
    grids: dict[str, OccupancyGrid] | None,
    config: TrainConfig,
    hp: Hyper | None = None,
    checkpoint_dir: str | Path | None = None,
    log_every: int = 0,
    initial_params: dict[str, np.ndarray] | None = None,
) -> tuple[dict[str, np.ndarray], list[dict]]:
    """Train on materialized windows; returns (params, history).

    ``grids`` maps scene_id to its occupancy grid (missing entries mean no
    environment for that scene).  History holds one {"epoch", "loss"} record
    per epoch.  Non-finite losses abort with :class:`TrainingDiverged`.
    ``initial_params`` resumes from an existing parameter set instead of a
    fresh seed-deterministic initialization.
    """
    if not windows:
        raise ValueError("no training windows")
    hp = hp or Hyper()
    if config.no_code and hp.use_code:
        hp = dataclasses.replace(hp, use_code=False)
    if initial_params is not None:
        params = {k: v.copy() for k, v in initial_params.items()}
    else:
        params = init_params(hp, seed=config.seed)
    opt = Adam(params, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    static_graphs = None
    if grids is None or config.no_obs or all(grids.get(w.scene_id) is None for w in windows):
        # No environment anywhere: graphs never change, build them once.
        static_graphs = [
            build_graph(w, eps=config.ad, min_pts=config.min_pts, reorder=not config.no_clu)
            for w in windows
        ]

    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(windows))
        epoch_loss = 0.0
        n_batches = 0
        for b0 in range(0, len(order), config.batch_size):
            batch = order[b0 : b0 + config.batch_size]
            agg = None
            loss_sum = 0.0
            for wi in batch:
                win = windows[wi]
                if static_graphs is not None:
                    g = static_graphs[wi]
                else:
                    g = _training_graph(win, (grids or {}).get(win.scene_id), params, hp, config)
                gt, mask = align_labels(win, g)
                cands, cache = forward(params, hp, g)
                loss, dcands, _ = window_loss_grad(cands, gt, mask)
                grads = backward(params, hp, cache, dcands)
                loss_sum += loss
                if agg is None:
                    agg = grads
                else:
                    for k in agg:
                        agg[k] += grads[k]
            scale = 1.0 / len(batch)
            for k in agg:
                agg[k] *= scale
            batch_mean = loss_sum * scale
            if not math.isfinite(batch_mean):
                raise TrainingDiverged(epoch, n_batches)
            opt.step(params, agg)
            epoch_loss += batch_mean
            n_batches += 1
        record = {"epoch": epoch, "loss": epoch_loss / max(n_batches, 1)}
        history.append(record)
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch:4d}  loss {record['loss']:.6f}")
        if checkpoint_dir is not None:
            save_params(params, hp, Path(checkpoint_dir) / "checkpoint_last.npz")
    return params, history


def write_history(history, path: str | Path, config: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        if config is not None:
            fh.write(json.dumps({"_config": config}) + "\n")
        for rec in history:
            fh.write(json.dumps(rec) + "\n")


# --- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class EvalCondition:
    dataset: str                 # label for the dataset pair, e.g. "clean"
    train_mode: str              # provenance of the evaluated params: "f" | "p"
    test_mode: Mode

    @property
    def tag(self) -> str:
        tm = "f" if self.test_mode is Mode.FILTRATION else "p"
        return f"{self.train_mode}-{tm}@{self.dataset}"


@dataclass
class EvalReport:
    header: dict
    rows: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"header": self.header, "rows": self.rows}, indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = ["condition            minADE_k   minFDE_k   windows  pedestrians"]
        for row in self.rows:
            if row["empty"]:
                lines.append(f"{row['condition']:<20} (no eligible samples)")
            else:
                lines.append(
                    f"{row['condition']:<20} {row['min_ade']:>8.4f}   {row['min_fde']:>8.4f} "
                    f"{row['sample_count']:>9d} {row['pedestrian_count']:>12d}"
                )
        return "\n".join(lines)


def evaluate(
    params: dict,
    dataset_pair: tuple[list[Scene], list[Scene]],
    grids: dict[str, OccupancyGrid] | None,
    conditions: list[EvalCondition],
    hp: Hyper | None = None,
    config: TrainConfig | None = None,
    t_obs: int = 8,
    t_pred: int = 12,
    stride: int = 1,
) -> EvalReport:
    """Score a trained model under each condition; params are never mutated.

    Per window the metric is the min over candidates of the masked ADE/FDE;
    rows aggregate windows weighted by their valid-label counts, so complete
    data reproduces the pooled per-pedestrian mean exactly.
    """
    hp = hp or Hyper()
    config = config or TrainConfig()
    if config.no_code and hp.use_code:
        hp = dataclasses.replace(hp, use_code=False)  # match how train() built the model
    obs_scenes, lbl_scenes = dataset_pair
    header = {
        "seeds": {"train": config.seed},
        "bindings": {
            "od": config.od,
            "ad": "DBSCAN neighborhood radius (interpretation)",
            "ad_value": config.ad,
            "fd": "obstacle thinning radius (interpretation)",
            "fd_value": config.fd,
        },
        "corruption": "10% removal interpreted per observation entry",
        "mask_convention": "label frames missing from the label view are excluded "
                           "from ADE/FDE via a per-frame mask",
        "aggregation": "per-window min over candidates, windows weighted by valid-label counts",
        "ablations": {"no_obs": config.no_obs, "no_code": config.no_code, "no_clu": config.no_clu},
    }
    report = EvalReport(header=header)
    for cond in conditions:
        windows = build_training_windows(obs_scenes, lbl_scenes, cond.test_mode, t_obs, t_pred, stride)
        ade_num = fde_num = 0.0
        ade_w = fde_w = 0
        ped_count = 0
        used = 0
        for win in windows:
            res = predict_two_pass(
                win, (grids or {}).get(win.scene_id), params, hp,
                mode=cond.test_mode, od=config.od, ad=config.ad, fd=config.fd,
                min_pts=config.min_pts, no_obs=config.no_obs, no_clu=config.no_clu,
            )
            if res.m == 0:
                continue
            gt = np.transpose(win.fut_xy, (1, 0, 2))
            mask = np.transpose(win.fut_obs, (1, 0))
            w_ade = int(mask.sum())
            if w_ade:
                ade_num += min_k(res.candidates, gt, mask, metric=ade) * w_ade
                ade_w += w_ade
            w_fde = int(mask[-1].sum())
            if w_fde:
                fde_num += min_k(res.candidates, gt, mask, metric=fde) * w_fde
                fde_w += w_fde
            ped_count += res.m
            used += 1
        empty = ade_w == 0
        report.rows.append({
            "condition": cond.tag,
            "dataset": cond.dataset,
            "train_mode": cond.train_mode,
            "test_mode": "f" if cond.test_mode is Mode.FILTRATION else "p",
            "min_ade": None if empty else ade_num / ade_w,
            "min_fde": None if fde_w == 0 else fde_num / fde_w,
            "sample_count": used,
            "pedestrian_count": ped_count,
            "empty": empty,
        })
    return report
