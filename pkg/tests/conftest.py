import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mvsgeo import Camera, DepthMap, Plane, SyntheticScene, translated_cameras


def intrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0):
    return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


def identity_camera(width=64, height=48, **kw):
    return Camera(intrinsics=intrinsics(**kw), extrinsics=np.eye(4),
                  width=width, height=height)


@pytest.fixture
def cam_pair():
    """Identity-orientation cameras, the second shifted 1 unit along +x."""
    return translated_cameras(intrinsics(), 64, 48, [(0, 0, 0), (1, 0, 0)])


@pytest.fixture
def plane_scene():
    """Fronto-parallel plane at z=10 seen by two x-translated cameras.

    The baseline of 1 gives exactly 10 px of disparity at fx=100,
    keeping all projections pixel-aligned.
    """
    cams = translated_cameras(intrinsics(), 64, 48, [(0, 0, 0), (1, 0, 0)])
    return SyntheticScene(surface=Plane(normal=(0, 0, 1), offset=10.0),
                          cameras=tuple(cams), resolution=(64, 48))


def random_rotation(rng):
    """Uniform-ish rotation from a normalized random quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def extrinsics_from(r, center):
    e = np.eye(4)
    e[:3, :3] = r
    e[:3, 3] = -r @ np.asarray(center, dtype=np.float64)
    return e


def constant_map(value, width=64, height=48):
    return DepthMap(np.full((height, width), float(value)))
