"""Command-line workflows: check, filter, fuse, eval, synth.

Scene directories follow the layout written by `synth`:

    scene/
      pair.txt
      cams/<id>_cam.txt
      gt_depths/<id>.pfm
      depths_est/<id>.pfm
      confidence/<id>.pfm     (optional; all-ones assumed when absent)

Configuration precedence is flags > config file > built-in defaults;
the effective configuration of every run that writes output is echoed
to run_config.txt next to the outputs.  Per-view work is spread over a
thread pool sized by the MVSGEO_WORKERS environment variable; results
are merged in view order so outputs are deterministic.

Exit codes: 0 success, 1 input error (unreadable or malformed files),
2 constraint violation (parameters inconsistent with the data).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .consistency import ConsistencyThresholds, PenaltyRange, ViewBundle, penalty_map
from .errors import ConfigurationError, FormatError
from .filtering import filter_depth
from .fusion import FusionMode, FusionParams, fuse
from .geometry import Camera, DepthMap, SampleMode
from .metrics import cloud_score, depth_score
from .synthetic import Plane, Sphere, SyntheticScene, render_depth, translated_cameras

_RANGES = {"1-2": PenaltyRange.ONE_TWO, "1-3": PenaltyRange.ONE_THREE}


def _workers() -> int:
    raw = os.environ.get("MVSGEO_WORKERS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n >= 1 else min(8, os.cpu_count() or 1)


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    cfg: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _effective(args: argparse.Namespace, defaults: dict[str, object]
               ) -> dict[str, object]:
    """Merge defaults, config file, and explicit flags (highest wins)."""
    cfg = _load_config_file(getattr(args, "config", None))
    merged: dict[str, object] = {}
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
        elif key in cfg:
            merged[key] = type(default)(cfg[key]) if default is not None \
                else cfg[key]
        else:
            merged[key] = default
    return merged


def _write_sidecar(out_dir: Path, command: str, eff: dict[str, object]) -> None:
    lines = [f"command = {command}"]
    lines += [f"{k} = {v}" for k, v in sorted(eff.items())]
    io.atomic_write_text(out_dir / "run_config.txt", "\n".join(lines) + "\n")


def _collect_scene(scene_dir: str, depth_subdir: str):
    pairs, cams, depths = io.load_scene_views(scene_dir, depth_subdir)
    return pairs, cams, depths


def _bundle_for(ref_id: int, srcs: list[tuple[int, float]],
                cams: dict[int, Camera],
                ref_depths: dict[int, DepthMap],
                src_depths: dict[int, DepthMap],
                ref_mask: np.ndarray) -> ViewBundle:
    return ViewBundle(
        ref_index=ref_id,
        ref_cam=cams[ref_id],
        ref_depth=ref_depths[ref_id],
        ref_mask=ref_mask,
        sources=tuple((cams[i], src_depths[i]) for i, _ in srcs),
    )


# ---------------------------------------------------------------------------
# check

CHECK_DEFAULTS: dict[str, object] = {
    "m": 8, "d_pixel": 1.0, "d_depth": 0.01, "range": "1-2",
    "sampling": "bilinear",
}


def _cmd_check(args: argparse.Namespace) -> int:
    eff = _effective(args, CHECK_DEFAULTS)
    if eff["range"] not in _RANGES:
        raise ConfigurationError(f"range must be one of {sorted(_RANGES)}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    pairs, cams, est = _collect_scene(args.scene, "depths_est")
    _, _, gt = _collect_scene(args.scene, "gt_depths")
    thresholds = ConsistencyThresholds(float(eff["d_pixel"]), float(eff["d_depth"]))
    prange = _RANGES[str(eff["range"])]
    mode = SampleMode(str(eff["sampling"]))
    m = int(eff["m"])

    def run(entry):
        ref_id, srcs = entry
        bundle = _bundle_for(ref_id, srcs, cams, est, gt, gt[ref_id].validity)
        pen = penalty_map(bundle, m=m, thresholds=thresholds, prange=prange,
                          mode=mode)
        io.write_pfm_file(out_dir / f"{io.view_name(ref_id)}_penalty.pfm",
                          DepthMap(pen.values))
        in_mask = pen.in_mask
        mean_pen = float(pen.values[in_mask].mean()) if in_mask.any() else 0.0
        flagged = float((pen.mask_sum[in_mask] > 0).mean()) if in_mask.any() else 0.0
        return ref_id, in_mask.sum(), mean_pen, int(pen.mask_sum.max()), flagged

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(run, pairs))

    print(f"{'view':>6} {'in_mask':>9} {'mean_penalty':>13} "
          f"{'max_flags':>10} {'flagged_frac':>13}")
    for ref_id, n_mask, mean_pen, max_flags, flagged in rows:
        print(f"{ref_id:>6} {n_mask:>9} {mean_pen:>13.6f} "
              f"{max_flags:>10} {flagged:>13.6f}")
    _write_sidecar(out_dir, "check", eff)
    return 0


# ---------------------------------------------------------------------------
# filter

FILTER_DEFAULTS: dict[str, object] = {
    "m": 8, "d_pixel": 2.0, "d_depth": 0.25, "min_inconsistent_frac": 0.5,
    "sampling": "bilinear",
}


def _cmd_filter(args: argparse.Namespace) -> int:
    eff = _effective(args, FILTER_DEFAULTS)
    out_dir = Path(args.out)
    (out_dir / "filtered_gt").mkdir(parents=True, exist_ok=True)

    pairs, cams, gt = _collect_scene(args.scene, "gt_depths")
    thresholds = ConsistencyThresholds(float(eff["d_pixel"]), float(eff["d_depth"]))
    mode = SampleMode(str(eff["sampling"]))
    m = int(eff["m"])
    min_frac = float(eff["min_inconsistent_frac"])

    def run(entry):
        ref_id, srcs = entry
        bundle = _bundle_for(ref_id, srcs, cams, gt, gt, gt[ref_id].validity)
        filtered, report = filter_depth(bundle, m=m, thresholds=thresholds,
                                        min_frac=min_frac, mode=mode)
        io.write_pfm_file(out_dir / "filtered_gt" / f"{io.view_name(ref_id)}.pfm",
                          filtered)
        return ref_id, report

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(run, pairs))

    report_lines = [f"{'view':>6} {'removed':>9} {'fraction':>10}"]
    for ref_id, report in rows:
        report_lines.append(
            f"{ref_id:>6} {report.removed_count:>9} "
            f"{report.removed_fraction:>10.6f}")
    report_text = "\n".join(report_lines) + "\n"
    print(report_text, end="")
    io.atomic_write_text(out_dir / "filter_report.txt", report_text)
    _write_sidecar(out_dir, "filter", eff)
    return 0


# ---------------------------------------------------------------------------
# fuse

FUSE_DEFAULTS: dict[str, object] = {
    "mode": "static", "conf": 0.5, "consistency_min": 3,
    "reproj_px": 1.0, "rel_depth": 0.01,
    "dyn_px_slope": 0.25, "dyn_rel_slope": 1.0 / 1300.0,
    "sampling": "bilinear",
}


def _cmd_fuse(args: argparse.Namespace) -> int:
    eff = _effective(args, FUSE_DEFAULTS)
    out_path = Path(args.out)

    pairs, cams, est = _collect_scene(args.scene, "depths_est")
    conf_dir = Path(args.scene) / "confidence"

    order = [ref for ref, _ in pairs]
    index_of = {vid: i for i, vid in enumerate(order)}
    views = []
    for vid in order:
        conf_path = conf_dir / f"{io.view_name(vid)}.pfm"
        if conf_path.is_file():
            conf = io.read_pfm_file(conf_path).values
        else:
            conf = np.ones_like(est[vid].values)
        views.append((cams[vid], est[vid], conf))
    pair_idx = []
    for ref, srcs in pairs:
        missing = [i for i, _ in srcs if i not in index_of]
        if missing:
            raise ConfigurationError(
                f"view {ref} pairs with {missing} which have no depth map")
        pair_idx.append([index_of[i] for i, _ in srcs])

    params = FusionParams(
        mode=FusionMode(str(eff["mode"])),
        reproj_px_thresh=float(eff["reproj_px"]),
        rel_depth_thresh=float(eff["rel_depth"]),
        conf_thresh=float(eff["conf"]),
        consistency_min=int(eff["consistency_min"]),
        dynamic_px_slope=float(eff["dyn_px_slope"]),
        dynamic_rel_slope=float(eff["dyn_rel_slope"]),
    )
    cloud = fuse(views, pair_idx, params, mode=SampleMode(str(eff["sampling"])))
    io.atomic_write_bytes(out_path, io.write_ply(cloud))
    print(f"fused {len(cloud)} points -> {out_path}")
    _write_sidecar(out_path.parent, "fuse", eff)
    return 0


# ---------------------------------------------------------------------------
# eval

def _cmd_eval(args: argparse.Namespace) -> int:
    pred = Path(args.pred)
    gt = Path(args.gt)
    suffixes = {pred.suffix.lower(), gt.suffix.lower()}
    if suffixes == {".ply"}:
        if args.max_dist is None:
            raise ConfigurationError(
                "--max-dist is required for point-cloud evaluation")
        score = cloud_score(io.read_ply(pred.read_bytes()),
                            io.read_ply(gt.read_bytes()),
                            max_dist=float(args.max_dist))
        print(f"accuracy     {score.accuracy:.9f}")
        print(f"completeness {score.completeness:.9f}")
        print(f"overall      {score.overall:.9f}")
    elif suffixes == {".pfm"}:
        ds = depth_score(io.read_pfm_file(pred), io.read_pfm_file(gt),
                         e1_thresh=args.e1_thresh, e3_thresh=args.e3_thresh)
        print(f"epe {ds.epe:.9f}")
        print(f"e1  {ds.e1:.9f}")
        print(f"e3  {ds.e3:.9f}")
    else:
        raise ConfigurationError(
            "eval expects two .ply files or two .pfm files")
    return 0


# ---------------------------------------------------------------------------
# synth

SYNTH_DEFAULTS: dict[str, object] = {
    "surface": "plane", "views": 5, "resolution": "64x48", "seed": 0,
}


def _cmd_synth(args: argparse.Namespace) -> int:
    eff = _effective(args, SYNTH_DEFAULTS)
    out_dir = Path(args.out)
    res = str(eff["resolution"]).lower().split("x")
    if len(res) != 2:
        raise ConfigurationError("resolution must look like 640x480")
    width, height = int(res[0]), int(res[1])
    n_views = int(eff["views"])
    if n_views < 2:
        raise ConfigurationError("synth needs at least 2 views")
    seed = int(eff["seed"])

    focal = 1.5 * width
    k = np.array([[focal, 0.0, (width - 1) / 2.0],
                  [0.0, focal, (height - 1) / 2.0],
                  [0.0, 0.0, 1.0]])
    # Baselines quantized to whole-pixel disparity at z=10 keep the
    # fixture exactly pixel-aligned; the seed varies the surface.
    rng = np.random.default_rng(seed)
    base = 10.0 / focal
    offsets = [(i * base, 0.0, 0.0) for i in range(n_views)]
    cams = translated_cameras(k, width, height, offsets)

    if str(eff["surface"]) == "plane":
        surface = Plane(normal=(0.0, 0.0, 1.0),
                        offset=10.0 + 2.0 * rng.random())
    elif str(eff["surface"]) == "sphere":
        cx = float(n_views - 1) * base / 2.0
        surface = Sphere(center=(cx, 0.0, 12.0), radius=4.0 + rng.random())
    else:
        raise ConfigurationError("surface must be 'plane' or 'sphere'")

    scene = SyntheticScene(surface=surface, cameras=tuple(cams),
                           resolution=(width, height), seed=seed)

    entries: io.PairList = []
    for i in range(n_views):
        others = sorted((j for j in range(n_views) if j != i),
                        key=lambda j: (abs(j - i), j))
        entries.append((i, [(j, float(n_views - abs(j - i))) for j in others]))

    for i, cam in enumerate(cams):
        depth = render_depth(scene, i)
        valid = depth.values[depth.validity]
        if valid.size == 0:
            raise ConfigurationError(f"view {i} does not see the surface")
        dmin = 0.8 * float(valid.min())
        dmax = 1.2 * float(valid.max())
        cam = Camera(intrinsics=cam.intrinsics, extrinsics=cam.extrinsics,
                     depth_min=dmin, depth_interval=(dmax - dmin) / 192.0,
                     num_planes=192, depth_max=dmax,
                     width=width, height=height)
        name = io.view_name(i)
        io.atomic_write_text(out_dir / "cams" / f"{name}_cam.txt",
                             io.write_cam(cam))
        io.write_pfm_file(out_dir / "gt_depths" / f"{name}.pfm", depth)
        io.write_pfm_file(out_dir / "depths_est" / f"{name}.pfm", depth)
        io.write_pfm_file(out_dir / "confidence" / f"{name}.pfm",
                          DepthMap(np.ones((height, width))))
    io.atomic_write_text(out_dir / "pair.txt", io.write_pair(entries))
    print(f"wrote {n_views}-view {eff['surface']} scene to {out_dir}")
    _write_sidecar(out_dir, "synth", eff)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvsgeo",
        description="Multi-view stereo geometric consistency toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="compute per-view penalty maps")
    p.add_argument("scene")
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--d-pixel", type=float)
    p.add_argument("--d-depth", type=float)
    p.add_argument("--range", choices=sorted(_RANGES))
    p.add_argument("--sampling", choices=["bilinear", "nearest"])
    p.add_argument("--config")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("filter", help="remove inconsistent ground-truth pixels")
    p.add_argument("scene")
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--d-pixel", type=float)
    p.add_argument("--d-depth", type=float)
    p.add_argument("--min-inconsistent-frac", type=float,
                   dest="min_inconsistent_frac")
    p.add_argument("--sampling", choices=["bilinear", "nearest"])
    p.add_argument("--config")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("fuse", help="fuse estimated depths into a PLY cloud")
    p.add_argument("scene")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["static", "dynamic"])
    p.add_argument("--conf", type=float)
    p.add_argument("--consistency-min", type=int, dest="consistency_min")
    p.add_argument("--reproj-px", type=float, dest="reproj_px")
    p.add_argument("--rel-depth", type=float, dest="rel_depth")
    p.add_argument("--dyn-px-slope", type=float, dest="dyn_px_slope")
    p.add_argument("--dyn-rel-slope", type=float, dest="dyn_rel_slope")
    p.add_argument("--sampling", choices=["bilinear", "nearest"])
    p.add_argument("--config")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("eval", help="score clouds (.ply) or depth maps (.pfm)")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--max-dist", type=float, dest="max_dist")
    p.add_argument("--e1-thresh", type=float, default=1.0, dest="e1_thresh")
    p.add_argument("--e3-thresh", type=float, default=3.0, dest="e3_thresh")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="write an analytic synthetic scene")
    p.add_argument("out")
    p.add_argument("--surface", choices=["plane", "sphere"])
    p.add_argument("--views", type=int)
    p.add_argument("--resolution")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except ConfigurationError as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
