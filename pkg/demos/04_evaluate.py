"""Scoring clouds and depth maps.

Accuracy is the mean nearest-neighbor distance from prediction to
reference (outliers beyond a cutoff excluded), completeness the same in
reverse. Depth maps score by mean absolute error and the fraction of
pixels beyond 1 and 3 depth units.
"""

import numpy as np

from mvsgeo import DepthMap, PointCloud, cloud_score, depth_score

rng = np.random.default_rng(0)

# A reference cloud on a grid, a prediction shifted by a quarter of the
# spacing plus one gross outlier.
xs, ys = np.meshgrid(np.arange(60) * 2.0, np.arange(60) * 2.0)
gt = PointCloud(points=np.stack([xs.ravel(), ys.ravel(),
                                 np.zeros(xs.size)], axis=1))
pred_pts = np.concatenate([gt.points + (0.5, 0.0, 0.0),
                           [[0.0, 0.0, 40.0]]])
pred = PointCloud(points=pred_pts)

score = cloud_score(pred, gt, max_dist=1.0)
print(f"accuracy     {score.accuracy:.6f}   (outlier at 40 units excluded)")
print(f"completeness {score.completeness:.6f}")
print(f"overall      {score.overall:.6f}")

# Depth maps: a noisy estimate against its ground truth.
gt_depth = DepthMap(rng.uniform(8.0, 12.0, size=(48, 64)))
noise = rng.normal(0.0, 1.2, size=(48, 64))
est = DepthMap(gt_depth.values + noise)
ds = depth_score(est, gt_depth)
print(f"epe {ds.epe:.4f}   e1 {ds.e1:.4f}   e3 {ds.e3:.4f}")

# Thresholds are in the dataset's depth units and configurable.
tight = depth_score(est, gt_depth, e1_thresh=0.5, e3_thresh=1.5)
print(f"with 0.5 / 1.5 thresholds: e1 {tight.e1:.4f}   e3 {tight.e3:.4f}")
