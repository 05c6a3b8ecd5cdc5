"""Penalty-map computation over caller-owned numeric buffers.

One function, meant to sit inside a training loop: it accepts the batch
buffers the host framework already owns (anything exposing the buffer
protocol or __array__, e.g. numpy arrays or CPU torch tensors), wraps
them without copying for validation, and returns a freshly allocated
float32 penalty map the caller is free to keep.  Compute itself works
in float64 scratch arrays (the same arithmetic the file-based pipeline
uses, which is what makes the outputs bit-identical); no input buffer
is retained after the call.

The penalty is plain data: it is a multiplicative per-pixel weight for
the caller's own error term and takes no part in gradient computation.
The heavy lifting happens inside vectorized numpy kernels, which
release the interpreter lock, so data-loading threads keep running
while a penalty is computed.  The function holds no global state and is
safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

from mvsgeo import (
    Camera,
    ConsistencyThresholds,
    DepthMap,
    PenaltyRange,
    SampleMode,
    ViewBundle,
    penalty_map,
)

__all__ = ["penalty_from_buffers"]

__version__ = "0.1.0"

_RANGES = {"1-2": PenaltyRange.ONE_TWO, "1-3": PenaltyRange.ONE_THREE}


def _wrap(name: str, buf, shape: tuple[int, ...], dtype=np.float32
          ) -> np.ndarray:
    """Wrap a caller buffer without copying; validate dtype and layout."""
    arr = np.asarray(buf)
    if arr.dtype != np.dtype(dtype):
        raise TypeError(
            f"{name} must be {np.dtype(dtype).name}, got {arr.dtype.name}")
    if not arr.flags.c_contiguous:
        raise ValueError(f"{name} must be C-contiguous")
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def _wrap_camera(name: str, buf, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(buf)
    if arr.dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise TypeError(f"{name} must be float32 or float64, got {arr.dtype.name}")
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr.astype(np.float64)


def penalty_from_buffers(ref_depth, ref_intrinsics, ref_extrinsics,
                         src_depths, src_intrinsics, src_extrinsics,
                         m: int, d_pixel: float, d_depth: float,
                         penalty_range: str = "1-2",
                         ref_mask=None,
                         sampling: str = "bilinear") -> np.ndarray:
    """Per-pixel penalty of a reference depth estimate over m source views.

    Args:
        ref_depth: (H, W) float32 buffer, the reference depth estimate;
            entries <= 0 mark invalid pixels.
        ref_intrinsics: (3, 3) float buffer.
        ref_extrinsics: (4, 4) float world-to-camera buffer.
        src_depths: (V, H, W) float32 buffer of source depth maps,
            closest view first; V must be >= m.
        src_intrinsics: (V, 3, 3) float buffer.
        src_extrinsics: (V, 4, 4) float buffer.
        m: Number of source views to accumulate over.
        d_pixel: Reprojection-distance threshold in pixels (strict >).
        d_depth: Relative depth-difference threshold (strict >).
        penalty_range: "1-2" or "1-3", the in-mask output range.
        ref_mask: Optional (H, W) region-of-interest buffer (nonzero =
            inside); defaults to the validity mask of ref_depth.
        sampling: "bilinear" or "nearest" source interpolation.

    Returns:
        A new C-contiguous (H, W) float32 array, 0 outside the mask and
        in [1, upper] inside it.  The caller owns it;
        no input buffer is copied or retained.

    Raises:
        TypeError: Wrong element type for a buffer.
        ValueError: Wrong shape, non-contiguous layout, V < m, or an
            unknown range/sampling name.
    """
    ref = np.asarray(ref_depth)
    if ref.ndim != 2:
        raise ValueError(f"ref_depth must be 2-D (H, W), got {ref.shape}")
    h, w = ref.shape
    ref = _wrap("ref_depth", ref_depth, (h, w))

    srcs = np.asarray(src_depths)
    if srcs.ndim != 3:
        raise ValueError(f"src_depths must be 3-D (V, H, W), got {srcs.shape}")
    v = srcs.shape[0]
    if v < m:
        raise ValueError(
            f"src_depths provides V={v} views but m={m} are required")
    srcs = _wrap("src_depths", src_depths, (v, h, w))

    k_r = _wrap_camera("ref_intrinsics", ref_intrinsics, (3, 3))
    e_r = _wrap_camera("ref_extrinsics", ref_extrinsics, (4, 4))
    k_s = _wrap_camera("src_intrinsics", src_intrinsics, (v, 3, 3))
    e_s = _wrap_camera("src_extrinsics", src_extrinsics, (v, 4, 4))

    if penalty_range not in _RANGES:
        raise ValueError(f"penalty_range must be one of {sorted(_RANGES)}")
    try:
        mode = SampleMode(sampling)
    except ValueError:
        raise ValueError(f"sampling must be 'bilinear' or 'nearest'") from None

    if ref_mask is None:
        mask = ref > 0
    else:
        mask = np.asarray(ref_mask)
        if mask.shape != (h, w):
            raise ValueError(
                f"ref_mask must have shape {(h, w)}, got {mask.shape}")
        mask = mask != 0

    bundle = ViewBundle(
        ref_index=0,
        ref_cam=Camera(intrinsics=k_r, extrinsics=e_r, width=w, height=h),
        ref_depth=DepthMap(ref),
        ref_mask=mask,
        sources=tuple(
            (Camera(intrinsics=k_s[i], extrinsics=e_s[i], width=w, height=h),
             DepthMap(srcs[i]))
            for i in range(m)),
    )
    result = penalty_map(bundle, m=m,
                         thresholds=ConsistencyThresholds(d_pixel, d_depth),
                         prange=_RANGES[penalty_range], mode=mode)
    return np.ascontiguousarray(result.values, dtype=np.float32)
