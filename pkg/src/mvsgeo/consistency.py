"""Multi-view geometric consistency checking.

The central operation is forward-backward reprojection (FBR): every
reference pixel is projected into a source view using its estimated
depth, the source ground-truth depth is sampled at the landing spot,
and that sample is projected back into the reference view.  A pixel
whose depth is correct returns to where it started with the depth it
started with; the pixel displacement error (PDE, in pixels) and the
relative depth difference (RDD, dimensionless) measure how far off it
is.

Thresholding PDE and RDD per source view gives a binary inconsistency
mask; summing those masks over M source views and rescaling gives a
per-pixel penalty in [1, 2] (or [1, 3]) that can weight a per-pixel
training error.  Pixels that leave the source image, land on invalid
ground truth, or fall behind either camera are out of scope and
contribute nothing, which is what makes the check robust to occlusion.
A reference-view binary mask finally zeroes the penalty outside the
region of interest.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .geometry import Camera, DepthMap, SampleMode, _sample_grid, _transfer_grid

__all__ = [
    "ConsistencyThresholds",
    "FbrResult",
    "PenaltyMap",
    "PenaltyRange",
    "ViewBundle",
    "fbr",
    "pde_rdd",
    "view_inconsistency_mask",
    "penalty_map",
    "weighted_stage_loss",
    "total_loss",
    "decimate_nearest",
    "DEFAULT_STAGE_PIXEL_THRESHOLDS",
    "DEFAULT_STAGE_DEPTH_THRESHOLDS",
    "DEFAULT_STAGE_WEIGHTS",
    "DEFAULT_SOURCE_VIEWS",
]

# Stage defaults, coarse to fine.  The coarse stage runs at 1/4
# resolution, the intermediate at 1/2, the refine stage at full
# resolution, with thresholds halving alongside.
DEFAULT_STAGE_PIXEL_THRESHOLDS = (1.0, 0.5, 0.25)
DEFAULT_STAGE_DEPTH_THRESHOLDS = (0.01, 0.005, 0.0025)
DEFAULT_STAGE_WEIGHTS = (1.0, 1.0, 2.0)
DEFAULT_SOURCE_VIEWS = 8


class PenaltyRange(enum.Enum):
    """Output range of the per-pixel penalty inside the reference mask."""

    ONE_TWO = 2.0
    ONE_THREE = 3.0

    @property
    def upper(self) -> float:
        return self.value


@dataclass(frozen=True)
class ConsistencyThresholds:
    """Per-stage inconsistency thresholds.

    d_pixel is compared against PDE (pixels); d_depth against RDD
    (relative depth).  Both comparisons are strict: a pixel is flagged
    only when the error EXCEEDS the threshold.
    """

    d_pixel: float
    d_depth: float

    def __post_init__(self) -> None:
        if self.d_pixel <= 0 or self.d_depth <= 0:
            raise ValueError("thresholds must be positive")


@dataclass(frozen=True)
class FbrResult:
    """Outcome of forward-backward reprojection for one source view.

    reprojected_xy holds the return location of every reference pixel
    (H, W, 2); reprojected_depth its depth back in the reference frame.
    in_scope is true only where every step stayed in bounds, in front of
    both cameras, and sampled valid source depth; reprojected_depth is
    valid exactly there.
    """

    reprojected_xy: np.ndarray
    reprojected_depth: DepthMap
    in_scope: np.ndarray


@dataclass(frozen=True)
class PenaltyMap:
    """Per-pixel multiplicative penalty with its inconsistency counts.

    values is 0 outside the reference mask and 1 + mask_sum * (upper-1)/M
    inside it; mask_sum (how many of the M source views flagged each
    pixel) is retained for diagnostics.
    """

    values: np.ndarray
    upper: float
    mask_sum: np.ndarray

    @property
    def in_mask(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True)
class ViewBundle:
    """One reference view plus its ordered source views.

    Source order matters: penalty accumulation uses the first M sources,
    mirroring the closest-first ordering of pair files.  ref_mask is the
    binary region of interest that the final penalty is confined to;
    provenance paths are carried for reporting only.
    """

    ref_index: int
    ref_cam: Camera
    ref_depth: DepthMap
    ref_mask: np.ndarray
    sources: tuple[tuple[Camera, DepthMap], ...]
    ref_path: str | None = None
    source_paths: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        mask = np.array(self.ref_mask, dtype=bool, copy=True)
        if mask.shape != self.ref_depth.values.shape:
            raise ConfigurationError(
                f"ref_mask shape {mask.shape} does not match reference depth "
                f"shape {self.ref_depth.values.shape}")
        mask.flags.writeable = False
        object.__setattr__(self, "ref_mask", mask)
        object.__setattr__(self, "sources", tuple(self.sources))


def _check_camera_size(cam: Camera, depth: DepthMap, role: str) -> None:
    if cam.width is not None and cam.width != depth.width or \
       cam.height is not None and cam.height != depth.height:
        raise ConfigurationError(
            f"{role} depth map is {depth.width}x{depth.height} but its camera "
            f"declares {cam.width}x{cam.height}")


def fbr(ref_depth: DepthMap, ref_cam: Camera, src_gt: DepthMap,
        src_cam: Camera, mode: SampleMode = SampleMode.BILINEAR) -> FbrResult:
    """Forward-backward reprojection of a reference depth map via one source.

    For every valid reference pixel: project into the source view with
    the reference depth, sample the source depth map at the projected
    location, then project that sample back into the reference view.

    Args:
        ref_depth: Reference depth estimate (H, W).
        ref_cam: Reference camera.
        src_gt: Source depth map sampled at projected locations.
        src_cam: Source camera; image size may differ from the reference.
        mode: Interpolation used for the source sampling step.

    Returns:
        FbrResult with per-pixel return coordinates, return depth, and
        the in-scope mask.

    Raises:
        ConfigurationError: If a depth map contradicts its camera's
            declared image size.
    """
    _check_camera_size(ref_cam, ref_depth, "reference")
    _check_camera_size(src_cam, src_gt, "source")

    h, w = ref_depth.values.shape
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    xs_f = xs.ravel()
    ys_f = ys.ravel()
    d0 = ref_depth.values.ravel()

    # Forward: reference pixel -> source image plane.
    sx, sy, _, fwd_ok = _transfer_grid(ref_cam, src_cam, xs_f, ys_f, d0)

    # Remap: sample source depth at the landing spot (0 where invalid).
    d_src = _sample_grid(src_gt.values, sx, sy, mode)
    d_src = np.where(fwd_ok, d_src, 0.0)

    # Backward: source sample -> reference image plane.
    rx, ry, rz, back_ok = _transfer_grid(src_cam, ref_cam, sx, sy, d_src)

    in_scope = fwd_ok & (d_src > 0) & back_ok
    rx = np.where(in_scope, rx, xs_f)
    ry = np.where(in_scope, ry, ys_f)
    rz = np.where(in_scope, rz, 0.0)

    xy = np.stack([rx.reshape(h, w), ry.reshape(h, w)], axis=-1)
    return FbrResult(
        reprojected_xy=xy,
        reprojected_depth=DepthMap(rz.reshape(h, w)),
        in_scope=in_scope.reshape(h, w),
    )


def pde_rdd(ref_depth: DepthMap, f: FbrResult) -> tuple[np.ndarray, np.ndarray]:
    """Pixel displacement error and relative depth difference.

    PDE is the Euclidean distance between each pixel and its FBR return
    location; RDD is |returned depth - reference depth| / reference
    depth.  Both are 0 where the pixel is out of scope or the reference
    depth is invalid (those entries carry no information; consumers must
    gate on the in-scope mask).
    """
    h, w = ref_depth.values.shape
    if f.in_scope.shape != (h, w):
        raise ValueError("FBR result shape does not match the reference depth")
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    defined = f.in_scope & ref_depth.validity
    dx = f.reprojected_xy[..., 0] - xs
    dy = f.reprojected_xy[..., 1] - ys
    pde = np.where(defined, np.hypot(dx, dy), 0.0)
    safe_ref = np.where(defined, ref_depth.values, 1.0)
    rdd = np.where(defined,
                   np.abs(f.reprojected_depth.values - ref_depth.values) / safe_ref,
                   0.0)
    return pde, rdd


def view_inconsistency_mask(pde: np.ndarray, rdd: np.ndarray,
                            in_scope: np.ndarray,
                            t: ConsistencyThresholds) -> np.ndarray:
    """Binary mask of pixels inconsistent with one source view.

    A pixel is flagged (1) when it is in scope AND its PDE or RDD
    strictly exceeds the corresponding threshold.  Consistent pixels
    and out-of-scope pixels both get 0, so occluded or off-image pixels
    never accumulate penalty.
    """
    flagged = in_scope & ((pde > t.d_pixel) | (rdd > t.d_depth))
    return flagged.astype(np.uint8)


def _penalty_values(mask_sum: np.ndarray, m: int, prange: PenaltyRange
                    ) -> np.ndarray:
    """Rescale integer view counts into the configured penalty range.

    [1, 2]: 1 + mask_sum / M.  [1, 3]: 1 + mask_sum / (M / 2), where the
    divisor is the real number M/2 even for odd M; the value tops out at
    exactly 3 when all M views flag a pixel.
    """
    counts = mask_sum.astype(np.float64)
    if prange is PenaltyRange.ONE_TWO:
        return 1.0 + counts / m
    return np.minimum(1.0 + counts / (m / 2.0), 3.0)


def penalty_map(bundle: ViewBundle, m: int = DEFAULT_SOURCE_VIEWS,
                thresholds: ConsistencyThresholds = ConsistencyThresholds(1.0, 0.01),
                prange: PenaltyRange = PenaltyRange.ONE_TWO,
                ref_mask: np.ndarray | None = None,
                mode: SampleMode = SampleMode.BILINEAR) -> PenaltyMap:
    """Accumulate per-view inconsistency into a penalty map.

    Runs FBR against the first m source views of the bundle, sums the
    per-view inconsistency masks in view order, rescales the sum into
    [1, upper], and zeroes everything outside the reference mask
    (the bundle's, unless ref_mask overrides it).

    Raises:
        ConfigurationError: If the bundle has fewer than m source views
            or the mask shape disagrees with the reference depth.
    """
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    if len(bundle.sources) < m:
        raise ConfigurationError(
            f"penalty over {m} source views requested but the bundle has "
            f"only {len(bundle.sources)}")
    if ref_mask is None:
        mask = bundle.ref_mask
    else:
        mask = np.asarray(ref_mask, dtype=bool)
        if mask.shape != bundle.ref_depth.values.shape:
            raise ConfigurationError(
                f"ref_mask shape {mask.shape} does not match reference depth "
                f"shape {bundle.ref_depth.values.shape}")

    mask_sum = np.zeros(bundle.ref_depth.values.shape, dtype=np.int32)
    for src_cam, src_depth in bundle.sources[:m]:
        result = fbr(bundle.ref_depth, bundle.ref_cam, src_depth, src_cam, mode)
        pde, rdd = pde_rdd(bundle.ref_depth, result)
        mask_sum += view_inconsistency_mask(pde, rdd, result.in_scope, thresholds)

    values = _penalty_values(mask_sum, m, prange) * mask
    return PenaltyMap(values=values, upper=prange.upper, mask_sum=mask_sum)


def weighted_stage_loss(penalty: PenaltyMap, error: np.ndarray,
                        over_all_pixels: bool = False) -> float:
    """Mean of penalty-weighted per-pixel error.

    By default the mean runs over in-mask pixels only (penalty > 0);
    out-of-mask penalties are forced to zero, so averaging over the full
    image would just dilute the loss by the framing of the view.  Set
    over_all_pixels=True for the full-image mean.

    Raises:
        ConfigurationError: If the mask is empty (a NaN here would
            silently poison a training run).
    """
    error = np.asarray(error, dtype=np.float64)
    if error.shape != penalty.values.shape:
        raise ValueError(
            f"error shape {error.shape} does not match penalty shape "
            f"{penalty.values.shape}")
    weighted = penalty.values * error
    if over_all_pixels:
        return float(weighted.mean())
    mask = penalty.in_mask
    if not mask.any():
        raise ConfigurationError("penalty mask is empty; stage loss is undefined")
    return float(weighted[mask].mean())


def total_loss(stage_losses: tuple[float, float, float],
               weights: tuple[float, float, float] = DEFAULT_STAGE_WEIGHTS
               ) -> float:
    """Weighted sum of the three stage losses."""
    l1, l2, l3 = stage_losses
    a, b, g = weights
    return a * l1 + b * l2 + g * l3


def decimate_nearest(d: DepthMap, factor: int) -> DepthMap:
    """Downscale a depth map by keeping every factor-th pixel.

    Block-nearest decimation preserves exact stored values (no
    interpolated ground truth is invented); pair it with scale_camera
    for the matching intrinsics.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return DepthMap(d.values[::factor, ::factor])
