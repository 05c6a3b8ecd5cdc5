"""PFM / cam.txt / pair.txt / PLY parsing, writing, and round trips."""

import struct

import numpy as np
import pytest

from mvsgeo import ColorPfmError, DepthMap, FormatError, PointCloud
from mvsgeo.io import (
    read_cam,
    read_pair,
    read_pfm,
    read_ply,
    write_cam,
    write_pair,
    write_pfm,
    write_ply,
)


class TestPfm:
    def test_round_trip_bit_identical(self):
        d = DepthMap(np.array([[1.5, 2.25], [3.125, 4.0625]]))
        out = read_pfm(write_pfm(d))
        assert np.array_equal(out.values, d.values)
        assert write_pfm(out) == write_pfm(d)

    def test_big_endian_positive_scale(self):
        # Hand-assembled: 2x2 map, scale +1.0 => big-endian payload,
        # rows bottom-up (so the file starts with the bottom row 3, 4).
        payload = struct.pack(">4f", 3.0, 4.0, 1.0, 2.0)
        data = b"Pf\n2 2\n1.0\n" + payload
        out = read_pfm(data)
        assert out.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_scale_magnitude_multiplies_values(self):
        payload = struct.pack("<4f", 3.0, 4.0, 1.0, 2.0)
        data = b"Pf\n2 2\n-0.5\n" + payload
        out = read_pfm(data)
        assert out.values.tolist() == [[0.5, 1.0], [1.5, 2.0]]

    def test_color_header_gets_distinct_error(self):
        with pytest.raises(ColorPfmError):
            read_pfm(b"PF\n2 2\n-1.0\n" + b"\0" * 48)

    def test_malformed_headers(self):
        with pytest.raises(FormatError, match="first line"):
            read_pfm(b"P5\n2 2\n-1.0\n" + b"\0" * 16)
        with pytest.raises(FormatError, match="dimension"):
            read_pfm(b"Pf\n2\n-1.0\n" + b"\0" * 16)
        with pytest.raises(FormatError, match="scale"):
            read_pfm(b"Pf\n2 2\nabc\n" + b"\0" * 16)
        with pytest.raises(FormatError, match="nonzero"):
            read_pfm(b"Pf\n2 2\n0.0\n" + b"\0" * 16)
        with pytest.raises(FormatError, match="truncated"):
            read_pfm(b"Pf\n2 2\n-1.0")

    def test_truncated_payload(self):
        with pytest.raises(FormatError, match="truncated"):
            read_pfm(b"Pf\n2 2\n-1.0\n" + b"\0" * 15)

    def test_trailing_garbage_has_position(self):
        data = write_pfm(DepthMap(np.ones((2, 2)))) + b"x"
        with pytest.raises(FormatError, match="byte 2[0-9]"):
            read_pfm(data)

    def test_nonfinite_values_normalized_on_load(self):
        payload = struct.pack("<4f", float("nan"), 4.0, 1.0, 2.0)
        out = read_pfm(b"Pf\n2 2\n-1.0\n" + payload)
        assert out.values[1, 0] == 0.0


CANONICAL_CAM = """extrinsic
1 0 0 0
0 1 0 0
0 0 1 0
0 0 0 1

intrinsic
100 0 32
0 100 24
0 0 1

2.5 0.1 192 21.7
"""


class TestCam:
    def test_canonical_file(self):
        cam = read_cam(CANONICAL_CAM)
        assert cam.intrinsics[0, 0] == 100.0
        assert cam.intrinsics[0, 2] == 32.0
        assert cam.intrinsics[1, 2] == 24.0
        assert np.array_equal(cam.extrinsics, np.eye(4))
        assert cam.depth_min == 2.5
        assert cam.depth_interval == 0.1
        assert cam.num_planes == 192
        assert cam.depth_max == 21.7

    def test_two_value_depth_line(self):
        text = CANONICAL_CAM.replace("2.5 0.1 192 21.7", "2.5 0.1")
        cam = read_cam(text)
        assert cam.depth_min == 2.5
        assert cam.num_planes is None
        assert cam.depth_max is None

    def test_missing_matrix_value_names_line(self):
        text = CANONICAL_CAM.replace("0 0 1 0", "0 0 1")
        with pytest.raises(FormatError, match="line 4"):
            read_cam(text)

    def test_non_numeric_token(self):
        text = CANONICAL_CAM.replace("100 0 32", "100 zero 32")
        with pytest.raises(FormatError, match="zero"):
            read_cam(text)

    def test_sloppy_rotation_warns_but_parses(self):
        text = CANONICAL_CAM.replace("1 0 0 0\n", "1.00001 0 0 0\n", 1)
        with pytest.warns(UserWarning, match="orthonormal"):
            cam = read_cam(text)
        assert cam.extrinsics[0, 0] == 1.00001

    def test_trailing_garbage(self):
        with pytest.raises(FormatError, match="trailing"):
            read_cam(CANONICAL_CAM + "\nleftover\n")

    def test_round_trip(self):
        cam = read_cam(CANONICAL_CAM)
        again = read_cam(write_cam(cam))
        assert np.array_equal(again.intrinsics, cam.intrinsics)
        assert np.array_equal(again.extrinsics, cam.extrinsics)
        assert again.depth_min == cam.depth_min
        assert again.num_planes == cam.num_planes


CANONICAL_PAIR = """2
0
10 10 2346.41 1 2036.53 9 1243.89 8 1052.87 2 1052.84 7 702.422 3 702.418 4 465.361 5 465.357 6 235.667
1
2 0 2036.53 2 1243.89
"""


class TestPair:
    def test_canonical_ten_source_line(self):
        entries = read_pair(CANONICAL_PAIR)
        assert len(entries) == 2
        ref, srcs = entries[0]
        assert ref == 0
        assert len(srcs) == 10
        assert srcs[0] == (10, 2346.41)
        assert srcs[-1] == (6, 235.667)
        # Ordering of the file is preserved exactly.
        assert [s for s, _ in entries[1][1]] == [0, 2]

    def test_empty_source_list(self):
        entries = read_pair("1\n0\n0\n")
        assert entries == [(0, [])]

    def test_truncated_source_line(self):
        with pytest.raises(FormatError, match="declared"):
            read_pair("1\n0\n3 1 0.5 2 0.25\n")

    def test_count_mismatch(self):
        with pytest.raises(FormatError, match="truncated"):
            read_pair("3\n0\n1 1 0.5\n")

    def test_trailing_garbage(self):
        with pytest.raises(FormatError, match="trailing"):
            read_pair(CANONICAL_PAIR + "5\n")

    def test_round_trip(self):
        entries = read_pair(CANONICAL_PAIR)
        assert read_pair(write_pair(entries)) == entries


def decode_ply_reference(data: bytes):
    """Independent PLY decode: header by line scan, payload via struct."""
    header, _, payload = data.partition(b"end_header\n")
    lines = header.decode().splitlines()
    assert lines[0] == "ply"
    count = int(next(ln.split()[2] for ln in lines if ln.startswith("element")))
    names = [ln.split()[2] for ln in lines if ln.startswith("property")]
    points, colors = [], []
    offset = 0
    for _ in range(count):
        x, y, z = struct.unpack_from("<3f", payload, offset)
        offset += 12
        points.append((x, y, z))
        if "red" in names:
            colors.append(struct.unpack_from("<3B", payload, offset))
            offset += 3
    assert offset == len(payload)
    return points, colors, names


class TestPly:
    def test_empty_cloud_is_valid_header_only(self):
        data = write_ply(PointCloud(points=np.empty((0, 3))))
        points, _, _ = decode_ply_reference(data)
        assert points == []
        assert len(read_ply(data)) == 0

    def test_single_point_against_reference_decoder(self):
        cloud = PointCloud(points=np.array([[1.5, -2.25, 3.0]]))
        points, colors, names = decode_ply_reference(write_ply(cloud))
        assert points == [(1.5, -2.25, 3.0)]
        assert colors == []
        assert names == ["x", "y", "z"]

    def test_color_flag_adds_uchar_properties(self):
        cloud = PointCloud(points=np.array([[1.0, 2.0, 3.0]]),
                           colors=np.array([[255, 128, 0]], dtype=np.uint8))
        data = write_ply(cloud)
        points, colors, names = decode_ply_reference(data)
        assert names == ["x", "y", "z", "red", "green", "blue"]
        assert colors == [(255, 128, 0)]

    def test_round_trip_with_colors(self):
        rng = np.random.default_rng(6)
        cloud = PointCloud(
            points=rng.uniform(-5, 5, size=(40, 3)).astype(np.float32),
            colors=rng.integers(0, 256, size=(40, 3), dtype=np.uint8))
        out = read_ply(write_ply(cloud))
        assert np.array_equal(out.points, cloud.points)
        assert np.array_equal(out.colors, cloud.colors)
        assert write_ply(out) == write_ply(cloud)

    def test_rejects_other_formats(self):
        cloud = PointCloud(points=np.array([[1.0, 2.0, 3.0]]))
        data = write_ply(cloud).replace(b"binary_little_endian", b"ascii")
        with pytest.raises(FormatError, match="format"):
            read_ply(data)

    def test_trailing_garbage_and_truncation(self):
        cloud = PointCloud(points=np.array([[1.0, 2.0, 3.0]]))
        data = write_ply(cloud)
        with pytest.raises(FormatError, match="trailing"):
            read_ply(data + b"zz")
        with pytest.raises(FormatError, match="truncated"):
            read_ply(data[:-4])
