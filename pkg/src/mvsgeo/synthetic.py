"""Deterministic synthetic scenes with analytic depth.

Planes and spheres have closed-form ray intersections, so rendered
depth maps double as exact ground truth for the geometric operations in
this package.  All randomness goes through numpy's PCG64 generator
(``np.random.default_rng(seed)``), which is stable across platforms, so
a seed fully determines every output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Camera, DepthMap

__all__ = [
    "Plane",
    "Sphere",
    "SyntheticScene",
    "render_depth",
    "corrupt_depth",
    "surface_distance",
    "look_at_camera",
    "translated_cameras",
]


@dataclass(frozen=True)
class Plane:
    """Surface of points X satisfying dot(normal, X) = offset."""

    normal: tuple[float, float, float]
    offset: float


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float


@dataclass(frozen=True)
class SyntheticScene:
    """An analytic surface observed by a list of cameras."""

    surface: Plane | Sphere
    cameras: tuple[Camera, ...]
    resolution: tuple[int, int]  # (W, H)
    seed: int = 0


def _camera_rays(cam: Camera, width: int, height: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel world-space rays.

    Returns (origin (3,), directions (3, N)) with directions scaled so
    that the camera-frame z component is 1; the ray parameter t is then
    the camera-frame depth directly.
    """
    xs, ys = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    pix = np.stack([xs.ravel(), ys.ravel(), np.ones(width * height)])
    dirs_cam = cam.intrinsics_inv @ pix
    r = cam.extrinsics[:3, :3]
    dirs_world = r.T @ dirs_cam
    return cam.center, dirs_world


def render_depth(scene: SyntheticScene, view: int) -> DepthMap:
    """Render the analytic depth map (camera-frame z) for one view.

    Pixels whose ray misses the surface, or would hit it behind the
    camera, are INVALID (0).
    """
    width, height = scene.resolution
    cam = scene.cameras[view]
    origin, dirs = _camera_rays(cam, width, height)
    surf = scene.surface

    if isinstance(surf, Plane):
        n = np.asarray(surf.normal, dtype=np.float64)
        denom = n @ dirs
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (surf.offset - n @ origin) / denom
        t = np.where(np.isfinite(t) & (t > 0), t, 0.0)
    elif isinstance(surf, Sphere):
        c = np.asarray(surf.center, dtype=np.float64)
        oc = origin - c
        a = np.sum(dirs * dirs, axis=0)
        b = 2.0 * (oc @ dirs)
        const = oc @ oc - surf.radius ** 2
        disc = b * b - 4.0 * a * const
        hit = disc >= 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        # Nearest intersection in front of the camera.
        t = np.where(t_near > 0, t_near, t_far)
        t = np.where(hit & (t > 0), t, 0.0)
    else:
        raise TypeError(f"unsupported surface type: {type(surf).__name__}")

    return DepthMap(t.reshape(height, width))


def surface_distance(surface: Plane | Sphere, points: np.ndarray) -> np.ndarray:
    """Signed distance from (N, 3) world points to the analytic surface."""
    pts = np.asarray(points, dtype=np.float64)
    if isinstance(surface, Plane):
        n = np.asarray(surface.normal, dtype=np.float64)
        return (pts @ n - surface.offset) / np.linalg.norm(n)
    if isinstance(surface, Sphere):
        c = np.asarray(surface.center, dtype=np.float64)
        return np.linalg.norm(pts - c, axis=1) - surface.radius
    raise TypeError(f"unsupported surface type: {type(surface).__name__}")


def corrupt_depth(d: DepthMap, fraction: float, magnitude: float, seed: int
                  ) -> tuple[DepthMap, np.ndarray]:
    """Perturb a seeded selection of valid pixels by +/- magnitude * depth.

    Selects floor(fraction * valid_count) valid pixels without
    replacement and offsets each by magnitude times its depth, with a
    per-pixel random sign.  Returns the corrupted map and the boolean
    mask of touched pixels.  The same seed always selects the same
    pixels and signs.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    valid_idx = np.flatnonzero(d.validity.ravel())
    count = int(np.floor(fraction * valid_idx.size))
    chosen = rng.choice(valid_idx, size=count, replace=False)
    signs = np.where(rng.integers(0, 2, size=count) == 0, -1.0, 1.0)

    flat = d.values.ravel().copy()
    flat[chosen] += signs * magnitude * flat[chosen]
    mask = np.zeros(flat.shape, dtype=bool)
    mask[chosen] = True
    h, w = d.values.shape
    return DepthMap(flat.reshape(h, w)), mask.reshape(h, w)


def look_at_camera(position: tuple[float, float, float],
                   target: tuple[float, float, float],
                   intrinsics: np.ndarray,
                   width: int, height: int,
                   up: tuple[float, float, float] = (0.0, -1.0, 0.0)) -> Camera:
    """World-to-camera extrinsics for a camera at `position` looking at `target`.

    The default up vector keeps image y pointing along world -y, which
    matches the y-down camera convention for scenes laid out along +z.
    """
    pos = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - pos
    fwd = fwd / np.linalg.norm(fwd)
    upv = np.asarray(up, dtype=np.float64)
    right = np.cross(upv, fwd)
    nr = np.linalg.norm(right)
    if nr < 1e-12:
        raise ValueError("up vector is parallel to the viewing direction")
    right /= nr
    down = np.cross(fwd, right)
    r = np.stack([right, down, fwd])  # rows: camera axes in world coords
    e = np.eye(4)
    e[:3, :3] = r
    e[:3, 3] = -r @ pos
    return Camera(intrinsics=np.asarray(intrinsics, dtype=np.float64),
                  extrinsics=e, width=width, height=height)


def translated_cameras(base_intrinsics: np.ndarray, width: int, height: int,
                       offsets: list[tuple[float, float, float]]) -> list[Camera]:
    """Identity-orientation cameras whose centers sit at the given offsets."""
    cams = []
    for off in offsets:
        e = np.eye(4)
        e[:3, 3] = -np.asarray(off, dtype=np.float64)
        cams.append(Camera(intrinsics=np.asarray(base_intrinsics, dtype=np.float64),
                           extrinsics=e, width=width, height=height))
    return cams
