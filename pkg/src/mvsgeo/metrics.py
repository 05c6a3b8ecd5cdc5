"""Evaluation metrics for point clouds and depth maps.

Point clouds are scored by mean nearest-neighbor distance in both
directions (accuracy: predicted to reference, completeness: reference
to predicted), with an outlier cutoff excluding points whose nearest
neighbor is farther than max_dist.  Neighbors come from an exact KD
tree; no approximate search is used.

Depth maps are scored against valid ground-truth pixels only: EPE is
the mean absolute error, e1/e3 the fraction of pixels whose error
strictly exceeds 1 and 3 depth units (thresholds configurable).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .fusion import PointCloud
from .geometry import DepthMap

__all__ = ["CloudScore", "DepthScore", "cloud_score", "depth_score"]


@dataclass(frozen=True)
class CloudScore:
    accuracy: float
    completeness: float

    @property
    def overall(self) -> float:
        return (self.accuracy + self.completeness) / 2.0


@dataclass(frozen=True)
class DepthScore:
    epe: float
    e1: float
    e3: float


def _directed_mean_nn(src: np.ndarray, dst_tree: cKDTree, max_dist: float,
                      label: str) -> float:
    dists, _ = dst_tree.query(src, k=1, workers=-1)
    kept = dists[dists <= max_dist]
    if kept.size == 0:
        raise ConfigurationError(
            f"every {label} point exceeds max_dist={max_dist}; "
            f"no distance to average")
    return float(kept.mean())


def cloud_score(pred: PointCloud, gt: PointCloud, max_dist: float) -> CloudScore:
    """Accuracy / completeness of a predicted cloud against a reference.

    Accuracy averages, over predicted points, the distance to the
    nearest reference point, excluding predicted points whose nearest
    neighbor is farther than max_dist (they are treated as outliers,
    not averaged in).  Completeness is the same with the roles swapped.

    Args:
        pred: Predicted cloud (non-empty).
        gt: Reference cloud (non-empty).
        max_dist: Outlier cutoff; required so scores from different
            runs are comparable.

    Raises:
        ConfigurationError: On empty clouds, non-positive max_dist, or
            when the cutoff excludes every point of a direction.
    """
    if len(pred) == 0 or len(gt) == 0:
        raise ConfigurationError("cloud_score requires two non-empty clouds")
    if max_dist <= 0:
        raise ConfigurationError(f"max_dist must be positive, got {max_dist}")
    acc = _directed_mean_nn(pred.points, cKDTree(gt.points), max_dist, "predicted")
    comp = _directed_mean_nn(gt.points, cKDTree(pred.points), max_dist, "reference")
    return CloudScore(accuracy=acc, completeness=comp)


def depth_score(pred: DepthMap, gt: DepthMap, e1_thresh: float = 1.0,
                e3_thresh: float = 3.0) -> DepthScore:
    """EPE and threshold error rates over valid ground-truth pixels.

    Errors strictly greater than the thresholds count toward e1/e3, so
    a constant offset exactly at a threshold does not trip it.

    Raises:
        ConfigurationError: On dimension mismatch or when the ground
            truth has no valid pixels.
    """
    if pred.values.shape != gt.values.shape:
        raise ConfigurationError(
            f"depth map shapes differ: {pred.values.shape} vs {gt.values.shape}")
    valid = gt.validity
    if not valid.any():
        raise ConfigurationError("ground-truth depth map has no valid pixels")
    err = np.abs(pred.values[valid] - gt.values[valid])
    return DepthScore(
        epe=float(err.mean()),
        e1=float((err > e1_thresh).mean()),
        e3=float((err > e3_thresh).mean()),
    )
