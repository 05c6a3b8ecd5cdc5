"""Pinhole camera model and projection primitives.

Coordinate conventions used throughout the package:

Image frame:
  - (0, 0) is the CENTER of the top-left pixel, x grows rightward,
    y grows downward.  A W x H image spans [0, W-1] x [0, H-1].

Camera frame (right-handed, standard computer vision):
  - x right, y down, z forward along the optical axis.  "Depth" always
    means camera-frame z, not distance along the ray.

Extrinsics:
  - 4x4 rigid world-to-camera transform E, so X_cam = E @ X_world.
    The camera center in world coordinates is -R.T @ t.

Intrinsics:
  - 3x3 matrix K with fx, fy on the diagonal and principal point
    (cx, cy); lifting pixel (x, y) at depth d gives d * K^-1 @ [x, y, 1].

Depth maps encode INVALID as 0; any non-finite value is normalized to 0
on construction so downstream code only ever sees finite arrays.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Camera",
    "DepthMap",
    "PixelPoint",
    "SampleMode",
    "project_pixel",
    "backproject_pixel",
    "sample_depth",
    "scale_camera",
]

_ROTATION_WARN_TOL = 1e-6


class SampleMode(enum.Enum):
    """Interpolation mode for sampling a depth map at continuous coordinates."""

    BILINEAR = "bilinear"
    NEAREST = "nearest"


class PixelPoint(NamedTuple):
    """A continuous pixel location with its camera-frame depth."""

    x: float
    y: float
    depth: float


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: intrinsics, world-to-camera extrinsics, depth range.

    Args:
        intrinsics: 3x3 matrix, fx/fy > 0, zero skew permitted.
        extrinsics: 4x4 world-to-camera rigid transform.
        depth_min: Near end of the depth sampling range (scene units).
        depth_interval: Depth hypothesis spacing (scene units).
        num_planes: Optional hypothesis-plane count from camera files.
        depth_max: Optional far end of the depth range.
        width: Declared image width in pixels, when known.
        height: Declared image height in pixels, when known.

    The rotation block is checked for orthonormality; deviations beyond
    1e-6 produce a warning rather than a rejection because camera files
    in the wild carry rounding error.
    """

    intrinsics: np.ndarray
    extrinsics: np.ndarray
    depth_min: float | None = None
    depth_interval: float | None = None
    num_planes: int | None = None
    depth_max: float | None = None
    width: int | None = None
    height: int | None = None

    def __post_init__(self) -> None:
        # Private copies: freezing a caller's array in place would be rude.
        k = np.array(self.intrinsics, dtype=np.float64, copy=True)
        e = np.array(self.extrinsics, dtype=np.float64, copy=True)
        if k.shape != (3, 3):
            raise ValueError(f"intrinsics must be 3x3, got {k.shape}")
        if e.shape != (4, 4):
            raise ValueError(f"extrinsics must be 4x4, got {e.shape}")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise ValueError("focal lengths fx, fy must be positive")
        r = e[:3, :3]
        dev = float(np.abs(r.T @ r - np.eye(3)).max())
        if dev > _ROTATION_WARN_TOL:
            warnings.warn(
                f"extrinsic rotation deviates from orthonormal by {dev:.3g}",
                stacklevel=2,
            )
        if np.linalg.det(r) <= 0:
            raise ValueError("extrinsic rotation must have det = +1")
        if self.depth_min is not None and self.depth_min <= 0:
            raise ValueError("depth_min must be positive when present")
        k.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "extrinsics", e)

    @property
    def intrinsics_inv(self) -> np.ndarray:
        return np.linalg.inv(self.intrinsics)

    @property
    def extrinsics_inv(self) -> np.ndarray:
        return np.linalg.inv(self.extrinsics)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        r = self.extrinsics[:3, :3]
        t = self.extrinsics[:3, 3]
        return -r.T @ t


@dataclass(frozen=True)
class DepthMap:
    """H x W scalar depth field; 0 marks an INVALID pixel.

    Values are stored as float64.  Non-finite entries are normalized to
    0 on construction; the array is frozen so instances can be shared
    across threads.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"depth map must be 2-D and non-empty, got {v.shape}")
        v[~np.isfinite(v)] = 0.0
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def validity(self) -> np.ndarray:
        """Boolean mask of valid (depth > 0) pixels."""
        return self.values > 0


def _lift_to_world(cam: Camera, xs: np.ndarray, ys: np.ndarray,
                   depths: np.ndarray) -> np.ndarray:
    """Lift pixels with depths to world coordinates.  Returns (3, N)."""
    pix = np.stack([xs, ys, np.ones_like(xs)])
    cam_pts = (cam.intrinsics_inv @ pix) * depths
    e_inv = cam.extrinsics_inv
    return e_inv[:3, :3] @ cam_pts + e_inv[:3, 3:4]


def _world_to_pixels(cam: Camera, world: np.ndarray
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Project world points (3, N) into a camera.

    Returns (x, y, z, in_front).  x and y are only meaningful where
    in_front is true; elsewhere they are filled with 0 to avoid dividing
    by a non-positive depth.
    """
    e = cam.extrinsics
    cam_pts = e[:3, :3] @ world + e[:3, 3:4]
    z = cam_pts[2]
    in_front = z > 0
    uvw = cam.intrinsics @ cam_pts
    safe = np.where(in_front, uvw[2], 1.0)
    x = np.where(in_front, uvw[0] / safe, 0.0)
    y = np.where(in_front, uvw[1] / safe, 0.0)
    return x, y, z, in_front


def _transfer_grid(cam_from: Camera, cam_to: Camera, xs: np.ndarray,
                   ys: np.ndarray, depths: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized pixel transfer between two views.

    Lifts (xs, ys, depths) out of cam_from, reprojects into cam_to, and
    returns (x, y, z, in_front) in cam_to's frame.  Entries with
    depth <= 0 are reported as not in front.
    """
    world = _lift_to_world(cam_from, xs, ys, depths)
    x, y, z, in_front = _world_to_pixels(cam_to, world)
    in_front = in_front & (depths > 0)
    return x, y, z, in_front


def project_pixel(cam_from: Camera, cam_to: Camera, p: PixelPoint
                  ) -> PixelPoint | None:
    """Transfer a pixel with known depth from one camera to another.

    The pixel is lifted to 3D with cam_from's inverse intrinsics scaled
    by its depth, moved to world coordinates through cam_from's inverse
    extrinsics, re-expressed in cam_to's frame, and perspective-divided
    through cam_to's intrinsics.

    Args:
        cam_from: Camera in which p is expressed.
        cam_to: Camera to project into.
        p: Pixel with depth > 0.

    Returns:
        The continuous pixel location and camera-frame depth in cam_to,
        or None when the 3D point lies behind cam_to (no division is
        attempted in that case).

    Raises:
        ValueError: If p.depth <= 0.
    """
    if not p.depth > 0:
        raise ValueError(f"pixel depth must be positive, got {p.depth}")
    x, y, z, in_front = _transfer_grid(
        cam_from, cam_to,
        np.array([p.x], dtype=np.float64),
        np.array([p.y], dtype=np.float64),
        np.array([p.depth], dtype=np.float64),
    )
    if not in_front[0]:
        return None
    return PixelPoint(float(x[0]), float(y[0]), float(z[0]))


def backproject_pixel(cam_from: Camera, cam_to: Camera, p: PixelPoint
                      ) -> PixelPoint | None:
    """Inverse transfer: move a pixel expressed in cam_to back to cam_from.

    Identical to project_pixel with the camera roles swapped; kept as a
    distinct name so forward-backward reprojection code reads in the
    same order it is usually written.
    """
    return project_pixel(cam_to, cam_from, p)


def _sample_grid(values: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                 mode: SampleMode) -> np.ndarray:
    """Vectorized depth-map sampling; returns 0 where the sample is INVALID.

    A sample is INVALID when (x, y) falls outside [0, W-1] x [0, H-1] or
    when any pixel that contributes with nonzero weight is itself
    INVALID (0).
    """
    h, w = values.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    inb = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    # Out-of-bounds (including non-finite) coordinates are already
    # excluded by inb; zeroing them keeps the integer casts defined.
    xs = np.where(inb, xs, 0.0)
    ys = np.where(inb, ys, 0.0)

    if mode is SampleMode.NEAREST:
        # Half-up rounding keeps ties deterministic across platforms.
        xi = np.floor(xs + 0.5).astype(np.intp).clip(0, w - 1)
        yi = np.floor(ys + 0.5).astype(np.intp).clip(0, h - 1)
        out = values[yi, xi]
        return np.where(inb & (out > 0), out, 0.0)

    x0 = np.floor(xs).astype(np.intp).clip(0, w - 1)
    y0 = np.floor(ys).astype(np.intp).clip(0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)

    taps = (values[y0, x0], values[y0, x1], values[y1, x0], values[y1, x1])
    weights = ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)

    out = np.zeros_like(xs)
    ok = inb.copy()
    for tap, wgt in zip(taps, weights):
        out += wgt * tap
        ok &= (wgt == 0) | (tap > 0)
    return np.where(ok, out, 0.0)


def sample_depth(d: DepthMap, x: float, y: float,
                 mode: SampleMode = SampleMode.BILINEAR) -> float:
    """Sample a depth map at a continuous location.

    BILINEAR interpolates the four surrounding pixels; NEAREST returns
    the nearest pixel's value (ties round half-up).  Returns 0 (INVALID)
    when (x, y) lies outside the image or any contributing pixel is
    INVALID.
    """
    return float(_sample_grid(d.values, np.array([x]), np.array([y]), mode)[0])


def scale_camera(cam: Camera, factor: int) -> Camera:
    """Intrinsics for an image decimated by an integer factor.

    Matches top-left block decimation (values[::factor, ::factor]):
    original pixel coordinates are factor * decimated coordinates, so
    the first two intrinsic rows divide by the factor exactly.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    k = cam.intrinsics.copy()
    k[:2, :] /= factor
    return Camera(
        intrinsics=k,
        extrinsics=cam.extrinsics,
        depth_min=cam.depth_min,
        depth_interval=cam.depth_interval,
        num_planes=cam.num_planes,
        depth_max=cam.depth_max,
        width=None if cam.width is None else cam.width // factor,
        height=None if cam.height is None else cam.height // factor,
    )
