"""Multi-view stereo geometric consistency toolkit.

Core pieces: pinhole projection primitives (geometry), forward-backward
reprojection and penalty maps (consistency), ground-truth depth
filtering (filtering), depth-map fusion into point clouds (fusion),
cloud and depth evaluation metrics (metrics), analytic synthetic scenes
for verification (synthetic), and the PFM/cam/pair/PLY file formats
(io).  Everything operates on immutable value types and pure functions,
so concurrent use needs no locking.
"""

from .consistency import (
    DEFAULT_SOURCE_VIEWS,
    DEFAULT_STAGE_DEPTH_THRESHOLDS,
    DEFAULT_STAGE_PIXEL_THRESHOLDS,
    DEFAULT_STAGE_WEIGHTS,
    ConsistencyThresholds,
    FbrResult,
    PenaltyMap,
    PenaltyRange,
    ViewBundle,
    decimate_nearest,
    fbr,
    pde_rdd,
    penalty_map,
    total_loss,
    view_inconsistency_mask,
    weighted_stage_loss,
)
from .errors import ColorPfmError, ConfigurationError, FormatError
from .filtering import BLENDED_FILTER, DTU_FILTER, FilterReport, filter_depth
from .fusion import FusionMode, FusionParams, PointCloud, fuse, survivor_masks
from .geometry import (
    Camera,
    DepthMap,
    PixelPoint,
    SampleMode,
    backproject_pixel,
    project_pixel,
    sample_depth,
    scale_camera,
)
from .metrics import CloudScore, DepthScore, cloud_score, depth_score
from .synthetic import (
    Plane,
    Sphere,
    SyntheticScene,
    corrupt_depth,
    look_at_camera,
    render_depth,
    surface_distance,
    translated_cameras,
)

__version__ = "0.1.0"

__all__ = [
    "Camera", "DepthMap", "PixelPoint", "SampleMode",
    "project_pixel", "backproject_pixel", "sample_depth", "scale_camera",
    "ConsistencyThresholds", "FbrResult", "PenaltyMap", "PenaltyRange",
    "ViewBundle", "fbr", "pde_rdd", "view_inconsistency_mask", "penalty_map",
    "weighted_stage_loss", "total_loss", "decimate_nearest",
    "DEFAULT_STAGE_PIXEL_THRESHOLDS", "DEFAULT_STAGE_DEPTH_THRESHOLDS",
    "DEFAULT_STAGE_WEIGHTS", "DEFAULT_SOURCE_VIEWS",
    "FilterReport", "filter_depth", "DTU_FILTER", "BLENDED_FILTER",
    "FusionMode", "FusionParams", "PointCloud", "fuse", "survivor_masks",
    "CloudScore", "DepthScore", "cloud_score", "depth_score",
    "Plane", "Sphere", "SyntheticScene", "render_depth", "corrupt_depth",
    "surface_distance", "look_at_camera", "translated_cameras",
    "ConfigurationError", "FormatError", "ColorPfmError",
    "__version__",
]
