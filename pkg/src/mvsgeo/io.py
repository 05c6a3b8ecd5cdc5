"""File formats: PFM depth maps, cam.txt, pair.txt, and binary PLY.

All parsers reject trailing garbage with an error that names the byte
or line where it starts, and every writer/reader pair is an identity.
Dense fields (depth maps, penalty maps, masks) all travel as
single-channel PFM; masks are stored as 0/1 scalars.

PFM convention: header "Pf", a width/height line, then a scale line
whose sign encodes endianness (negative = little endian) and whose
magnitude scales the stored values; rows are stored bottom-up.  Files
written here always use little-endian scale -1.0.
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import ColorPfmError, FormatError
from .fusion import PointCloud
from .geometry import Camera, DepthMap

__all__ = [
    "read_pfm", "write_pfm", "read_pfm_file", "write_pfm_file",
    "read_cam", "write_cam", "read_pair", "write_pair",
    "read_ply", "write_ply",
    "view_name", "load_scene_views", "atomic_write_bytes", "atomic_write_text",
]


# ---------------------------------------------------------------------------
# PFM

def read_pfm(data: bytes) -> DepthMap:
    """Decode a single-channel PFM byte string.

    Raises:
        ColorPfmError: For three-channel "PF" files.
        FormatError: For malformed headers, truncated payloads, or
            trailing bytes after the payload.
    """
    lines: list[bytes] = []
    offset = 0
    for _ in range(3):
        end = data.find(b"\n", offset)
        if end < 0:
            raise FormatError("PFM header truncated before three lines")
        lines.append(data[offset:end])
        offset = end + 1

    header = lines[0].strip()
    if header == b"PF":
        raise ColorPfmError("color PFM ('PF') is not supported; expected 'Pf'")
    if header != b"Pf":
        raise FormatError(f"not a PFM file: first line {header!r}")

    dims = lines[1].split()
    if len(dims) != 2:
        raise FormatError(f"PFM dimension line must be 'W H', got {lines[1]!r}")
    try:
        width, height = int(dims[0]), int(dims[1])
    except ValueError as exc:
        raise FormatError(f"PFM dimensions are not integers: {lines[1]!r}") from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"PFM dimensions must be positive, got {width}x{height}")

    try:
        scale = float(lines[2])
    except ValueError as exc:
        raise FormatError(f"PFM scale line is not a number: {lines[2]!r}") from exc
    if scale == 0:
        raise FormatError("PFM scale must be nonzero")

    expected = width * height * 4
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise FormatError(
            f"PFM payload truncated: expected {expected} bytes, "
            f"got {len(payload)}")
    if len(data) > offset + expected:
        raise FormatError(
            f"trailing garbage after PFM payload at byte {offset + expected}")

    dtype = "<f4" if scale < 0 else ">f4"
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    values = np.flipud(values).astype(np.float64)
    if abs(scale) != 1.0:
        values = values * abs(scale)
    return DepthMap(values)


def write_pfm(d: DepthMap) -> bytes:
    """Encode a depth map as little-endian PFM with scale -1.0."""
    header = f"Pf\n{d.width} {d.height}\n-1.0\n".encode("ascii")
    rows = np.flipud(d.values.astype(np.float32))
    return header + rows.tobytes()


def read_pfm_file(path: str | Path) -> DepthMap:
    return read_pfm(Path(path).read_bytes())


def write_pfm_file(path: str | Path, d: DepthMap) -> None:
    atomic_write_bytes(path, write_pfm(d))


# ---------------------------------------------------------------------------
# cam.txt

_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _parse_floats(lineno: int, line: str, expect: int) -> list[float]:
    tokens = line.split()
    if len(tokens) != expect:
        raise FormatError(
            f"line {lineno}: expected {expect} values, got {len(tokens)}")
    out = []
    for tok in tokens:
        if not _NUM_RE.match(tok):
            raise FormatError(f"line {lineno}: {tok!r} is not a number")
        out.append(float(tok))
    return out


def read_cam(text: str) -> Camera:
    """Parse a camera file: extrinsic 4x4, intrinsic 3x3, depth line.

    The final line carries "depth_min depth_interval" optionally
    followed by "num_planes depth_max".  Rotation blocks that are not
    orthonormal to 1e-6 produce a warning (real files carry rounding),
    not a rejection.
    """
    numbered = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    content = [(no, ln) for no, ln in numbered if ln]
    pos = 0

    def take() -> tuple[int, str]:
        nonlocal pos
        if pos >= len(content):
            raise FormatError("camera file truncated")
        item = content[pos]
        pos += 1
        return item

    no, ln = take()
    if ln.lower() != "extrinsic":
        raise FormatError(f"line {no}: expected 'extrinsic', got {ln!r}")
    extr = [_parse_floats(*take(), expect=4) for _ in range(4)]

    no, ln = take()
    if ln.lower() != "intrinsic":
        raise FormatError(f"line {no}: expected 'intrinsic', got {ln!r}")
    intr = [_parse_floats(*take(), expect=3) for _ in range(3)]

    no, ln = take()
    depth_tokens = ln.split()
    if len(depth_tokens) not in (2, 3, 4):
        raise FormatError(
            f"line {no}: depth line must have 2 to 4 values, "
            f"got {len(depth_tokens)}")
    depth_vals = _parse_floats(no, ln, len(depth_tokens))

    if pos < len(content):
        no, ln = content[pos]
        raise FormatError(f"line {no}: trailing garbage {ln!r}")

    return Camera(
        intrinsics=np.array(intr, dtype=np.float64),
        extrinsics=np.array(extr, dtype=np.float64),
        depth_min=depth_vals[0],
        depth_interval=depth_vals[1],
        num_planes=int(depth_vals[2]) if len(depth_vals) >= 3 else None,
        depth_max=depth_vals[3] if len(depth_vals) >= 4 else None,
    )


def write_cam(cam: Camera) -> str:
    lines = ["extrinsic"]
    for row in cam.extrinsics:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append("")
    lines.append("intrinsic")
    for row in cam.intrinsics:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append("")
    depth = [cam.depth_min if cam.depth_min is not None else 0.0,
             cam.depth_interval if cam.depth_interval is not None else 0.0]
    if cam.num_planes is not None:
        depth.append(cam.num_planes)
        if cam.depth_max is not None:
            depth.append(cam.depth_max)
    lines.append(" ".join(f"{v:.17g}" for v in depth))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# pair.txt

PairList = list[tuple[int, list[tuple[int, float]]]]


def read_pair(text: str) -> PairList:
    """Parse a pair file into ordered (ref_id, [(src_id, score), ...]).

    Format: the first line is the view count; each view contributes a
    line with its id and a line "N id score id score ...".  Scores are
    retained for diagnostics; source order is preserved.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    content = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not content:
        raise FormatError("pair file is empty")
    pos = 0

    def take() -> tuple[int, str]:
        nonlocal pos
        if pos >= len(content):
            raise FormatError("pair file truncated")
        item = content[pos]
        pos += 1
        return item

    no, ln = take()
    try:
        count = int(ln)
    except ValueError as exc:
        raise FormatError(f"line {no}: view count is not an integer") from exc

    entries: PairList = []
    for _ in range(count):
        no, ln = take()
        try:
            ref_id = int(ln)
        except ValueError as exc:
            raise FormatError(f"line {no}: view id is not an integer") from exc
        no, ln = take()
        tokens = ln.split()
        try:
            n_src = int(tokens[0])
        except (IndexError, ValueError) as exc:
            raise FormatError(f"line {no}: missing source count") from exc
        if len(tokens) != 1 + 2 * n_src:
            raise FormatError(
                f"line {no}: {n_src} sources declared but "
                f"{(len(tokens) - 1) // 2} (id, score) pairs present")
        srcs = []
        for i in range(n_src):
            try:
                srcs.append((int(tokens[1 + 2 * i]), float(tokens[2 + 2 * i])))
            except ValueError as exc:
                raise FormatError(f"line {no}: bad source entry {i}") from exc
        entries.append((ref_id, srcs))

    if pos < len(content):
        no, ln = content[pos]
        raise FormatError(f"line {no}: trailing garbage {ln!r}")
    return entries


def write_pair(entries: PairList) -> str:
    lines = [str(len(entries))]
    for ref_id, srcs in entries:
        lines.append(str(ref_id))
        parts = [str(len(srcs))]
        for src_id, score in srcs:
            parts.append(str(src_id))
            parts.append(f"{score:.17g}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# PLY

def write_ply(cloud: PointCloud) -> bytes:
    """Encode a point cloud as binary little-endian PLY.

    Coordinates are 32-bit floats; when the cloud carries colors, three
    uchar properties follow.
    """
    n = len(cloud)
    props = ["property float x", "property float y", "property float z"]
    if cloud.colors is not None:
        props += ["property uchar red", "property uchar green",
                  "property uchar blue"]
    header = "\n".join([
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {n}",
        *props,
        "end_header",
    ]) + "\n"

    xyz = cloud.points.astype("<f4")
    if cloud.colors is None:
        payload = xyz.tobytes()
    else:
        rec = np.empty(n, dtype=[("xyz", "<f4", 3), ("rgb", "u1", 3)])
        rec["xyz"] = xyz
        rec["rgb"] = cloud.colors
        payload = rec.tobytes()
    return header.encode("ascii") + payload


def read_ply(data: bytes) -> PointCloud:
    """Decode a binary little-endian PLY with float x/y/z (+ uchar rgb).

    Other property layouts, ASCII files, and big-endian files are
    rejected; colors are returned when red/green/blue follow the
    coordinates.
    """
    end = data.find(b"end_header\n")
    if end < 0:
        raise FormatError("PLY header has no end_header line")
    header_lines = data[:end].decode("ascii", errors="replace").splitlines()
    payload = data[end + len(b"end_header\n"):]

    if not header_lines or header_lines[0].strip() != "ply":
        raise FormatError("not a PLY file")
    fmt = next((ln for ln in header_lines if ln.startswith("format")), None)
    if fmt is None or fmt.split() != ["format", "binary_little_endian", "1.0"]:
        raise FormatError(f"unsupported PLY format line: {fmt!r}")

    count = None
    props: list[tuple[str, str]] = []
    for ln in header_lines[1:]:
        tokens = ln.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "element":
            if tokens[1] != "vertex":
                raise FormatError(f"unsupported PLY element {tokens[1]!r}")
            count = int(tokens[2])
        elif tokens[0] == "property":
            props.append((tokens[1], tokens[2]))
        elif tokens[0] == "format":
            continue
        else:
            raise FormatError(f"unsupported PLY header line: {ln!r}")
    if count is None:
        raise FormatError("PLY header declares no vertex element")

    names = [name for _, name in props]
    if names[:3] != ["x", "y", "z"] or any(t != "float" for t, _ in props[:3]):
        raise FormatError(f"unsupported PLY vertex layout: {props}")
    has_color = names[3:] == ["red", "green", "blue"]
    if names[3:] and not has_color:
        raise FormatError(f"unsupported PLY vertex layout: {props}")
    if has_color and any(t != "uchar" for t, _ in props[3:]):
        raise FormatError(f"unsupported PLY vertex layout: {props}")

    stride = 12 + (3 if has_color else 0)
    expected = count * stride
    if len(payload) < expected:
        raise FormatError(
            f"PLY payload truncated: expected {expected} bytes, "
            f"got {len(payload)}")
    if len(payload) > expected:
        raise FormatError(
            f"trailing garbage after PLY payload at byte "
            f"{end + len(b'end_header') + 1 + expected}")

    if has_color:
        rec = np.frombuffer(payload, dtype=[("xyz", "<f4", 3), ("rgb", "u1", 3)])
        return PointCloud(points=rec["xyz"].astype(np.float64),
                          colors=rec["rgb"].copy())
    xyz = np.frombuffer(payload, dtype="<f4").reshape(count, 3)
    return PointCloud(points=xyz.astype(np.float64))


# ---------------------------------------------------------------------------
# Scene directories

def view_name(view_id: int) -> str:
    return f"{view_id:08d}"


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write via a temp file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def load_scene_views(scene_dir: str | Path, depth_subdir: str
                     ) -> tuple[PairList, dict[int, Camera], dict[int, DepthMap]]:
    """Load pair.txt, cameras, and one depth directory of a scene.

    Expects the layout written by the synth command:
    pair.txt, cams/<id>_cam.txt, <depth_subdir>/<id>.pfm.
    """
    scene = Path(scene_dir)
    pair_path = scene / "pair.txt"
    if not pair_path.is_file():
        raise FormatError(f"missing pair file: {pair_path}")
    pairs = read_pair(pair_path.read_text())

    ids = [ref for ref, _ in pairs]
    for _, srcs in pairs:
        ids.extend(i for i, _ in srcs)

    cams: dict[int, Camera] = {}
    depths: dict[int, DepthMap] = {}
    for vid in sorted(set(ids)):
        cam_path = scene / "cams" / f"{view_name(vid)}_cam.txt"
        depth_path = scene / depth_subdir / f"{view_name(vid)}.pfm"
        if not cam_path.is_file():
            raise FormatError(f"missing camera file: {cam_path}")
        if not depth_path.is_file():
            raise FormatError(f"missing depth map: {depth_path}")
        cams[vid] = read_cam(cam_path.read_text())
        depths[vid] = read_pfm_file(depth_path)
    return pairs, cams, depths
