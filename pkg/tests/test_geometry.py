"""Projection, back-projection, and depth sampling."""

import numpy as np
import pytest
from hypothesis import given, assume, settings
from hypothesis import strategies as st

from mvsgeo import (
    Camera,
    DepthMap,
    PixelPoint,
    SampleMode,
    backproject_pixel,
    project_pixel,
    sample_depth,
    scale_camera,
)

import oracle
from conftest import constant_map, extrinsics_from, identity_camera, intrinsics, random_rotation


class TestProjectPixel:
    def test_identity_cameras_leave_pixel_unchanged(self):
        cam = identity_camera()
        p = PixelPoint(17.25, 5.5, 3.7)
        out = project_pixel(cam, cam, p)
        assert out == pytest.approx(p, abs=1e-12)

    def test_translated_camera_disparity(self, cam_pair):
        # fx * baseline / depth = 100 * 1 / 10 = 10 px of disparity.
        out = project_pixel(cam_pair[0], cam_pair[1], PixelPoint(32, 24, 10))
        assert out == pytest.approx((22.0, 24.0, 10.0), abs=1e-12)

    def test_matches_matrix_chain_oracle(self, cam_pair):
        world = oracle.lift(cam_pair[0].intrinsics, cam_pair[0].extrinsics,
                            32.0, 24.0, 10.0)
        expected = oracle.project(cam_pair[1].intrinsics,
                                  cam_pair[1].extrinsics, world)
        out = project_pixel(cam_pair[0], cam_pair[1], PixelPoint(32, 24, 10))
        assert out == pytest.approx(expected, abs=1e-12)

    def test_point_behind_target_camera(self):
        cam_a = identity_camera()
        flipped = np.diag([-1.0, 1.0, -1.0])
        cam_b = Camera(intrinsics=intrinsics(),
                       extrinsics=extrinsics_from(flipped, (0, 0, 0)))
        assert project_pixel(cam_a, cam_b, PixelPoint(32, 24, 10)) is None

    def test_rejects_nonpositive_depth(self):
        cam = identity_camera()
        with pytest.raises(ValueError):
            project_pixel(cam, cam, PixelPoint(1, 1, 0.0))
        with pytest.raises(ValueError):
            project_pixel(cam, cam, PixelPoint(1, 1, -2.0))

    def test_depth_ordering_preserved_along_ray(self):
        cam_a = identity_camera()
        cam_b = Camera(intrinsics=intrinsics(),
                       extrinsics=extrinsics_from(np.eye(3), (0, 0, 2.0)))
        near = project_pixel(cam_a, cam_b, PixelPoint(40, 20, 5.0))
        far = project_pixel(cam_a, cam_b, PixelPoint(40, 20, 9.0))
        assert near.depth < far.depth


class TestBackprojectPixel:
    def test_inverse_of_project(self, cam_pair):
        p = PixelPoint(12.5, 30.25, 7.5)
        fwd = project_pixel(cam_pair[0], cam_pair[1], p)
        back = backproject_pixel(cam_pair[0], cam_pair[1], fwd)
        assert back == pytest.approx(p, abs=1e-9)

    def test_identity_cameras(self):
        cam = identity_camera()
        p = PixelPoint(3.0, 4.0, 2.0)
        assert backproject_pixel(cam, cam, p) == pytest.approx(p, abs=1e-12)

    def test_recovers_translated_example(self, cam_pair):
        out = backproject_pixel(cam_pair[0], cam_pair[1],
                                PixelPoint(22.0, 24.0, 10.0))
        assert out == pytest.approx((32.0, 24.0, 10.0), abs=1e-9)


@st.composite
def camera_and_pixel(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    cams = []
    for _ in range(2):
        r = random_rotation(rng)
        center = rng.uniform(-1.0, 1.0, size=3)
        cams.append(Camera(intrinsics=intrinsics(),
                           extrinsics=extrinsics_from(r, center)))
    pixel = PixelPoint(float(rng.uniform(0, 63)), float(rng.uniform(0, 47)),
                       float(rng.uniform(2.0, 50.0)))
    return cams[0], cams[1], pixel


class TestRoundTripProperty:
    @settings(max_examples=200, deadline=None)
    @given(camera_and_pixel())
    def test_project_then_backproject_is_identity(self, case):
        cam_a, cam_b, p = case
        fwd = project_pixel(cam_a, cam_b, p)
        assume(fwd is not None)
        back = backproject_pixel(cam_a, cam_b, fwd)
        assume(back is not None)
        assert back.x == pytest.approx(p.x, abs=1e-9)
        assert back.y == pytest.approx(p.y, abs=1e-9)
        assert back.depth == pytest.approx(p.depth, abs=1e-9)


class TestSampleDepth:
    def test_integer_coordinates_return_stored_value(self):
        d = DepthMap(np.array([[1.0, 2.0], [3.0, 4.0]]))
        for mode in SampleMode:
            assert sample_depth(d, 1, 0, mode) == 2.0
            assert sample_depth(d, 0, 1, mode) == 3.0

    def test_out_of_bounds_is_invalid(self):
        d = constant_map(5.0, width=4, height=4)
        assert sample_depth(d, -0.01, 0) == 0.0
        assert sample_depth(d, 3.01, 0) == 0.0
        assert sample_depth(d, 0, 3.5, SampleMode.NEAREST) == 0.0

    def test_nonfinite_coordinates_are_invalid(self):
        d = constant_map(5.0, width=4, height=4)
        for bad in (float("nan"), float("inf"), -float("inf")):
            assert sample_depth(d, bad, 1.0) == 0.0
            assert sample_depth(d, 1.0, bad, SampleMode.NEAREST) == 0.0

    def test_bilinear_center_of_2x2(self):
        d = DepthMap(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert sample_depth(d, 0.5, 0.5) == pytest.approx(2.5)

    def test_bilinear_matches_oracle_at_random_points(self):
        rng = np.random.default_rng(7)
        values = rng.uniform(1.0, 9.0, size=(6, 5))
        values[2, 3] = 0.0  # a hole
        d = DepthMap(values)
        for _ in range(200):
            x = rng.uniform(-0.5, 5.5)
            y = rng.uniform(-0.5, 6.5)
            assert sample_depth(d, x, y) == pytest.approx(
                oracle.sample_bilinear(d.values, x, y), abs=1e-12)
            assert sample_depth(d, x, y, SampleMode.NEAREST) == pytest.approx(
                oracle.sample_nearest(d.values, x, y), abs=1e-12)

    def test_invalid_neighbor_invalidates_interpolation(self):
        values = np.array([[1.0, 0.0], [3.0, 4.0]])
        d = DepthMap(values)
        assert sample_depth(d, 0.5, 0.0) == 0.0
        # Weight-zero taps do not contribute: the exact node stays valid.
        assert sample_depth(d, 0.0, 0.0) == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31))
    def test_bilinear_bounded_by_contributing_values(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.uniform(1.0, 9.0, size=(5, 5))
        d = DepthMap(values)
        x = float(rng.uniform(0, 4))
        y = float(rng.uniform(0, 4))
        out = sample_depth(d, x, y)
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        patch = values[y0:y0 + 2, x0:x0 + 2]
        assert patch.min() - 1e-12 <= out <= patch.max() + 1e-12


class TestTypes:
    def test_depthmap_normalizes_nonfinite_to_invalid(self):
        d = DepthMap(np.array([[np.nan, 1.0], [np.inf, -2.0]]))
        assert d.values[0, 0] == 0.0
        assert d.values[1, 0] == 0.0
        assert d.validity.tolist() == [[False, True], [False, False]]

    def test_depthmap_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            DepthMap(np.zeros(5))

    def test_camera_rejects_bad_focal(self):
        k = intrinsics()
        k[0, 0] = -1.0
        with pytest.raises(ValueError):
            Camera(intrinsics=k, extrinsics=np.eye(4))

    def test_camera_warns_on_sloppy_rotation(self):
        e = np.eye(4)
        e[0, 0] = 1.0 + 5e-5
        with pytest.warns(UserWarning, match="orthonormal"):
            Camera(intrinsics=intrinsics(), extrinsics=e)

    def test_camera_rejects_reflection(self):
        e = np.eye(4)
        e[:3, :3] = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError):
            Camera(intrinsics=intrinsics(), extrinsics=e)

    def test_scale_camera_halves_intrinsics(self):
        cam = identity_camera()
        half = scale_camera(cam, 2)
        assert half.intrinsics[0, 0] == 50.0
        assert half.intrinsics[1, 2] == 12.0
        assert half.intrinsics[2, 2] == 1.0
        assert half.width == 32
