"""Cameras, pixel transfer, and depth sampling, step by step.

Two pinhole cameras share an orientation; the second sits one unit to
the right. A pixel with known depth moves between them by lifting to
3D, changing frames, and reprojecting, and the round trip comes back
exactly.
"""

import numpy as np

from mvsgeo import (
    Camera,
    DepthMap,
    PixelPoint,
    SampleMode,
    backproject_pixel,
    project_pixel,
    sample_depth,
    translated_cameras,
)

k = np.array([[100.0, 0.0, 32.0],
              [0.0, 100.0, 24.0],
              [0.0, 0.0, 1.0]])
left, right = translated_cameras(k, 64, 48, [(0, 0, 0), (1, 0, 0)])

print("camera centers:", left.center, right.center)

# A pixel at the left camera's principal point, 10 units deep.  The
# stereo disparity is fx * baseline / depth = 100 * 1 / 10 = 10 px.
p = PixelPoint(32.0, 24.0, 10.0)
q = project_pixel(left, right, p)
print(f"{p} seen from the right camera -> {q}")

back = backproject_pixel(left, right, q)
print(f"and back again -> {back}")

# Points behind the target camera are reported, not divided through.
flipped = np.eye(4)
flipped[:3, :3] = np.diag([-1.0, 1.0, -1.0])
behind = project_pixel(left, Camera(intrinsics=k, extrinsics=flipped), p)
print("projection into a camera facing away:", behind)

# Depth maps sample bilinearly by default; 0 means invalid, and any
# invalid pixel under the interpolation footprint poisons the sample.
d = DepthMap(np.array([[1.0, 2.0],
                       [3.0, 0.0]]))
print("bilinear at (0.5, 0):", sample_depth(d, 0.5, 0.0))
print("bilinear at (0.5, 0.5) over a hole:", sample_depth(d, 0.5, 0.5))
print("nearest  at (0.9, 0.1):", sample_depth(d, 0.9, 0.1, SampleMode.NEAREST))
print("outside the image:", sample_depth(d, -0.01, 0.0))
