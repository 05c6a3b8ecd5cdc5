"""Ground-truth depth filtering.

Rendered ground-truth depth maps inherit geometric inconsistencies from
the meshing and rendering that produced them.  Running the multi-view
consistency check with the reference estimate replaced by the reference
ground truth exposes those pixels: a ground-truth value flagged as
inconsistent by enough of its neighboring views is almost certainly an
artifact, and removing it keeps the error from feeding back into
anything trained against the map.

Each view is always filtered against its neighbors' ORIGINAL maps, not
already-filtered ones, so results are deterministic and independent of
processing order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consistency import (
    ConsistencyThresholds,
    ViewBundle,
    fbr,
    pde_rdd,
    view_inconsistency_mask,
)
from .errors import ConfigurationError
from .geometry import DepthMap, SampleMode

__all__ = ["FilterReport", "filter_depth", "DTU_FILTER", "BLENDED_FILTER"]

# Loose defaults so only clearly erroneous values are removed:
# (thresholds, source view count) as used on the two common datasets.
DTU_FILTER = (ConsistencyThresholds(d_pixel=2.0, d_depth=0.25), 8)
BLENDED_FILTER = (ConsistencyThresholds(d_pixel=0.5, d_depth=0.05), 10)


@dataclass(frozen=True)
class FilterReport:
    """Summary of one filtering pass.

    per_view_flags counts, per pixel, how many of the M source views
    flagged it; removed_fraction is relative to the valid pixels of the
    input map.
    """

    removed_count: int
    removed_fraction: float
    per_view_flags: np.ndarray


def filter_depth(bundle: ViewBundle, m: int,
                 thresholds: ConsistencyThresholds,
                 min_frac: float = 0.5,
                 mode: SampleMode = SampleMode.BILINEAR
                 ) -> tuple[DepthMap, FilterReport]:
    """Remove geometrically inconsistent pixels from a ground-truth map.

    The bundle's reference depth must itself be the ground-truth map to
    be cleaned.  A valid pixel is set INVALID (0) when the fraction of
    the first m source views flagging it reaches min_frac; everything
    else passes through unchanged.

    Args:
        bundle: Reference ground truth plus source ground-truth views.
        m: Number of source views to check against.
        thresholds: PDE/RDD thresholds (loose values recommended; see
            DTU_FILTER and BLENDED_FILTER).
        min_frac: Removal vote threshold in (0, 1]; a pixel is removed
            when flags / m >= min_frac.
        mode: Source sampling interpolation.

    Returns:
        The filtered map and a removal report.

    Raises:
        ConfigurationError: If min_frac is out of range or the bundle
            has fewer than m sources.
    """
    if not 0.0 < min_frac <= 1.0:
        raise ConfigurationError(f"min_frac must be in (0, 1], got {min_frac}")
    if len(bundle.sources) < m:
        raise ConfigurationError(
            f"filtering over {m} source views requested but the bundle has "
            f"only {len(bundle.sources)}")

    ref = bundle.ref_depth
    flags = np.zeros(ref.values.shape, dtype=np.int32)
    for src_cam, src_depth in bundle.sources[:m]:
        result = fbr(ref, bundle.ref_cam, src_depth, src_cam, mode)
        pde, rdd = pde_rdd(ref, result)
        flags += view_inconsistency_mask(pde, rdd, result.in_scope, thresholds)

    valid = ref.validity
    remove = valid & (flags / m >= min_frac)
    filtered = np.where(remove, 0.0, ref.values)

    valid_count = int(valid.sum())
    removed = int(remove.sum())
    report = FilterReport(
        removed_count=removed,
        removed_fraction=removed / valid_count if valid_count else 0.0,
        per_view_flags=flags,
    )
    return DepthMap(filtered), report
