"""Displacement-error metrics over (possibly gapped) ground truth.

ade/fde follow the usual definitions — mean Euclidean error over all
predicted frames, and at the final frame only — extended with a per-frame
label mask: on fully labeled data they reduce exactly to the unmasked
formulas (divide by m * t_pred and by m).
"""
from __future__ import annotations

import numpy as np


def _check(pred, gt, mask):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[2] != 2:
        raise ValueError(f"pred/gt must both be [t_pred, m, 2]; got {pred.shape} vs {gt.shape}")
    if mask is None:
        mask = np.ones(pred.shape[:2], dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.shape[:2]:
            raise ValueError(f"mask must be [t_pred, m]; got {mask.shape}")
    return pred, gt, mask


def ade(pred, gt, mask=None) -> float:
    """Mean Euclidean error over masked (frame, pedestrian) pairs, meters."""
    pred, gt, mask = _check(pred, gt, mask)
    if not mask.any():
        raise ValueError("ade is undefined when every label is masked out")
    err = np.linalg.norm(pred - gt, axis=2)
    return float(err[mask].mean())


def fde(pred, gt, mask=None) -> float:
    """Mean Euclidean error at the final frame over pedestrians with a valid
    final label, meters."""
    pred, gt, mask = _check(pred, gt, mask)
    final = mask[-1]
    if not final.any():
        raise ValueError("fde is undefined when no pedestrian has a final label")
    err = np.linalg.norm(pred[-1] - gt[-1], axis=1)
    return float(err[final].mean())


def min_k(pred_candidates, gt, mask=None, metric=ade) -> float:
    """Best-of-K: minimum of ``metric`` over the candidate axis."""
    cands = np.asarray(pred_candidates, dtype=np.float64)
    if cands.ndim != 4:
        raise ValueError(f"candidates must be [k, t_pred, m, 2]; got {cands.shape}")
    if cands.shape[0] < 1:
        raise ValueError("need at least one candidate")
    return min(metric(cands[k], gt, mask) for k in range(cands.shape[0]))
