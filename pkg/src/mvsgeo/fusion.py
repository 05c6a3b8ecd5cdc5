"""Depth-map fusion into a world-space point cloud.

Every reference pixel is cross-checked against the ESTIMATED depth maps
of its source views with the same forward-backward reprojection used
for consistency penalties.  Pixels that enough views agree on survive;
their depth is combined across the agreeing views and lifted to world
space along the reference ray, so each fused point reprojects exactly
into the pixel it came from.

Two voting modes are provided.  STATIC applies fixed PDE/RDD thresholds
and requires a minimum number of agreeing views.  DYNAMIC searches for
any support level k >= consistency_min such that at least k views agree
under thresholds that scale linearly with k, which adapts the required
precision to the available support.

Source pixels that corroborated a fused point are marked consumed so
the same surface point is not emitted again when its own view becomes
the reference.  Processing is sequential in view order, making the
output deterministic byte for byte.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Camera, DepthMap, SampleMode, _lift_to_world, _transfer_grid
from .consistency import fbr, pde_rdd

__all__ = ["FusionMode", "FusionParams", "PointCloud", "fuse", "survivor_masks"]

FusedView = tuple[Camera, DepthMap, np.ndarray]


class FusionMode(enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class PointCloud:
    """Unordered 3D points with optional per-point color and confidence."""

    points: np.ndarray
    colors: np.ndarray | None = None
    confidence: np.ndarray | None = None

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True).reshape(-1, 3)
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.colors is not None:
            col = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
            if col.shape[0] != pts.shape[0]:
                raise ValueError("colors do not match point count")
            object.__setattr__(self, "colors", col)
        if self.confidence is not None:
            conf = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
            if conf.shape[0] != pts.shape[0]:
                raise ValueError("confidence does not match point count")
            object.__setattr__(self, "confidence", conf)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class FusionParams:
    """Fusion thresholds and voting configuration.

    reproj_px_thresh / rel_depth_thresh bound PDE and RDD in STATIC
    mode (strict <).  In DYNAMIC mode the per-view bounds are
    k * dynamic_px_slope and k * dynamic_rel_slope for support level k.
    conf_thresh drops low-confidence pixels before any geometry runs.
    suppress_duplicates disables re-emission of already-consumed source
    pixels; depth_combine picks how agreeing depths are merged.
    """

    mode: FusionMode = FusionMode.STATIC
    reproj_px_thresh: float = 1.0
    rel_depth_thresh: float = 0.01
    conf_thresh: float = 0.5
    consistency_min: int = 3
    dynamic_px_slope: float = 0.25
    dynamic_rel_slope: float = 1.0 / 1300.0
    suppress_duplicates: bool = True
    depth_combine: str = "mean"  # or "median"

    def __post_init__(self) -> None:
        if min(self.reproj_px_thresh, self.rel_depth_thresh,
               self.dynamic_px_slope, self.dynamic_rel_slope) <= 0:
            raise ValueError("fusion thresholds must be positive")
        if self.consistency_min < 1:
            raise ValueError("consistency_min must be >= 1")
        if self.depth_combine not in ("mean", "median"):
            raise ValueError(f"unknown depth_combine {self.depth_combine!r}")


def _view_agreement(ref: FusedView, sources: list[FusedView],
                    p: FusionParams, mode: SampleMode
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-source agreement for one reference view.

    Returns (agree (V,H,W), reproj_depth (V,H,W), src_x (V,H,W),
    src_y (V,H,W), support (H,W)).  In DYNAMIC mode `agree` reflects the
    largest feasible support level per pixel.
    """
    ref_cam, ref_depth, _ = ref
    h, w = ref_depth.values.shape
    v = len(sources)
    pde = np.empty((v, h, w))
    rdd = np.empty((v, h, w))
    scope = np.empty((v, h, w), dtype=bool)
    reproj = np.empty((v, h, w))
    src_x = np.empty((v, h, w))
    src_y = np.empty((v, h, w))

    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    for i, (src_cam, src_depth, _) in enumerate(sources):
        result = fbr(ref_depth, ref_cam, src_depth, src_cam, mode)
        pde[i], rdd[i] = pde_rdd(ref_depth, result)
        scope[i] = result.in_scope & ref_depth.validity
        reproj[i] = result.reprojected_depth.values
        fx, fy, _, _ = _transfer_grid(ref_cam, src_cam, xs.ravel(), ys.ravel(),
                                      ref_depth.values.ravel())
        src_x[i] = fx.reshape(h, w)
        src_y[i] = fy.reshape(h, w)

    if p.mode is FusionMode.STATIC:
        agree = scope & (pde < p.reproj_px_thresh) & (rdd < p.rel_depth_thresh)
        support = agree.sum(axis=0)
        agree &= support >= p.consistency_min
        support = np.where(support >= p.consistency_min, support, 0)
    else:
        chosen = np.zeros((h, w), dtype=np.int32)
        for k in range(p.consistency_min, v + 1):
            ok_k = scope & (pde < k * p.dynamic_px_slope) & (rdd < k * p.dynamic_rel_slope)
            feasible = ok_k.sum(axis=0) >= k
            chosen = np.where(feasible, k, chosen)
        agree = scope & (pde < chosen * p.dynamic_px_slope) & \
            (rdd < chosen * p.dynamic_rel_slope) & (chosen > 0)
        support = agree.sum(axis=0)

    return agree, reproj, src_x, src_y, support


def survivor_masks(views: list[FusedView],
                   pairs: list[list[int]],
                   p: FusionParams,
                   mode: SampleMode = SampleMode.BILINEAR) -> list[np.ndarray]:
    """Pre-consumption survivor mask of every view, for diagnostics.

    A pixel survives when its confidence clears conf_thresh and its
    geometric support clears the voting rule; duplicate suppression is
    ignored here, so the masks are independent of processing order.
    """
    _validate_fusion_inputs(views, pairs)
    masks = []
    for r, (cam, depth, conf) in enumerate(views):
        sources = [views[i] for i in pairs[r]]
        if not sources:
            masks.append(np.zeros(depth.values.shape, dtype=bool))
            continue
        _, _, _, _, support = _view_agreement(views[r], sources, p, mode)
        masks.append((conf >= p.conf_thresh) & depth.validity & (support > 0))
    return masks


def _validate_fusion_inputs(views: list[FusedView],
                            pairs: list[list[int]]) -> None:
    if len(views) < 2:
        raise ConfigurationError("fusion needs at least two views")
    if len(pairs) != len(views):
        raise ConfigurationError(
            f"{len(views)} views but {len(pairs)} pair lists")
    for r, srcs in enumerate(pairs):
        for i in srcs:
            if not 0 <= i < len(views) or i == r:
                raise ConfigurationError(
                    f"pair list of view {r} references invalid view {i}")
    for r, (cam, depth, conf) in enumerate(views):
        if conf.shape != depth.values.shape:
            raise ConfigurationError(
                f"view {r}: confidence shape {conf.shape} does not match "
                f"depth shape {depth.values.shape}")
        if conf.min() < 0 or conf.max() > 1:
            raise ConfigurationError(f"view {r}: confidence outside [0, 1]")


def fuse(views: list[FusedView], pairs: list[list[int]], p: FusionParams,
         colors: list[np.ndarray] | None = None,
         mode: SampleMode = SampleMode.BILINEAR) -> PointCloud:
    """Fuse per-view depth maps into one world-space point cloud.

    Args:
        views: (camera, estimated depth, confidence in [0, 1]) per view.
            Pass all-ones confidence when no estimator confidence exists.
        pairs: Source view indices for each view, closest first.
        p: Voting thresholds and combination options.
        colors: Optional per-view (H, W, 3) uint8 images; fused points
            copy their reference pixel's color.
        mode: Interpolation for source depth sampling.

    Returns:
        The fused cloud.  Identical inputs always produce identical
        clouds: views are processed in order and pixels row-major.
    """
    _validate_fusion_inputs(views, pairs)
    consumed = [np.zeros(d.values.shape, dtype=bool) for _, d, _ in views]

    out_pts: list[np.ndarray] = []
    out_rgb: list[np.ndarray] = []
    out_conf: list[np.ndarray] = []

    for r, (cam, depth, conf) in enumerate(views):
        src_ids = pairs[r]
        if not src_ids:
            continue
        sources = [views[i] for i in src_ids]
        agree, reproj, src_x, src_y, support = _view_agreement(
            views[r], sources, p, mode)

        survive = (conf >= p.conf_thresh) & depth.validity & (support > 0)
        if p.suppress_duplicates:
            survive &= ~consumed[r]
        if not survive.any():
            continue

        if p.depth_combine == "mean":
            depth_sum = depth.values + np.where(agree, reproj, 0.0).sum(axis=0)
            fused_depth = depth_sum / (1.0 + agree.sum(axis=0))
        else:
            stack = np.concatenate(
                [depth.values[None], np.where(agree, reproj, np.nan)], axis=0)
            fused_depth = np.nanmedian(stack, axis=0)

        h, w = depth.values.shape
        xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                             np.arange(h, dtype=np.float64))
        sel = survive.ravel()
        world = _lift_to_world(cam, xs.ravel()[sel], ys.ravel()[sel],
                               fused_depth.ravel()[sel])
        out_pts.append(world.T)
        out_conf.append(conf.ravel()[sel])
        if colors is not None:
            out_rgb.append(colors[r].reshape(-1, 3)[sel])

        consumed[r] |= survive
        if p.suppress_duplicates:
            for i, src_id in enumerate(src_ids):
                used = agree[i] & survive
                if not used.any():
                    continue
                sh, sw = views[src_id][1].values.shape
                xi = np.floor(src_x[i][used] + 0.5).astype(np.intp)
                yi = np.floor(src_y[i][used] + 0.5).astype(np.intp)
                inb = (xi >= 0) & (xi < sw) & (yi >= 0) & (yi < sh)
                consumed[src_id][yi[inb], xi[inb]] = True

    if not out_pts:
        return PointCloud(points=np.empty((0, 3)),
                          colors=np.empty((0, 3), dtype=np.uint8)
                          if colors is not None else None,
                          confidence=np.empty(0))
    return PointCloud(
        points=np.concatenate(out_pts),
        colors=np.concatenate(out_rgb) if colors is not None else None,
        confidence=np.concatenate(out_conf),
    )
