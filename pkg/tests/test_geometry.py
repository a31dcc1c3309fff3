"""Geometry tests: lattice, projections, conversions, distortion ratio."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panosphere.geometry import (
    CameraModel,
    angles_to_dirs,
    dirs_to_angles,
    distortion_ratio,
    erp_pixel_angles,
    erp_pixel_dirs,
    fibonacci_lattice,
    focal_from_fov,
    in_frame,
    perspective_to_spherical,
    project_dirs,
    spherical_to_perspective,
)

CAP_DEG = 40.0


def brute_force_min_angle(dirs):
    """Oracle: smallest pairwise angle over all pairs, in degrees."""
    worst = 180.0
    n = len(dirs)
    for i in range(n):
        for j in range(i + 1, n):
            dot = float(np.dot(dirs[i], dirs[j]))
            worst = min(worst, math.degrees(math.acos(max(-1.0, min(1.0, dot)))))
    return worst


class TestConventions:
    def test_axis_anchors(self):
        assert np.allclose(angles_to_dirs(0.0, 0.0), [0, 0, 1])
        assert np.allclose(angles_to_dirs(90.0, 0.0), [1, 0, 0])
        assert np.allclose(angles_to_dirs(0.0, 90.0), [0, 1, 0])    # down
        assert np.allclose(angles_to_dirs(0.0, -90.0), [0, -1, 0])  # up

    @given(
        st.floats(0.0, 360.0, exclude_max=True),
        st.floats(-89.9, 89.9),
    )
    @settings(max_examples=200, deadline=None)
    def test_angle_round_trip(self, azimuth, elevation):
        d = angles_to_dirs(azimuth, elevation)
        assert abs(np.linalg.norm(d) - 1.0) < 1e-12
        back_az, back_el = dirs_to_angles(d)
        # within 1e-6 radians away from the poles
        tol = math.degrees(1e-6)
        assert abs(back_el - elevation) < tol
        diff = (back_az - azimuth + 180.0) % 360.0 - 180.0
        assert abs(diff) * math.cos(math.radians(elevation)) < tol


class TestFibonacciLattice:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            fibonacci_lattice(0)

    def test_single_point_unit_norm(self):
        d = fibonacci_lattice(1)
        assert d.shape == (1, 3)
        assert abs(np.linalg.norm(d[0]) - 1.0) < 1e-9

    def test_all_unit_norm(self):
        dirs = fibonacci_lattice(2600)
        assert np.max(np.abs(np.linalg.norm(dirs, axis=1) - 1.0)) < 1e-9

    def test_deterministic(self):
        assert np.array_equal(fibonacci_lattice(100), fibonacci_lattice(100))

    def test_four_points_spread(self):
        # brute force over all 6 pairs of the generated points
        dirs = fibonacci_lattice(4)
        assert brute_force_min_angle(dirs) > 60.0

    def test_cap_counts_match_area_fraction(self):
        # analytic oracle: a 40 degree cap holds n * (1 - cos(40)) / 2 points
        dirs = fibonacci_lattice(2600)
        expected = 2600 * (1.0 - math.cos(math.radians(CAP_DEG))) / 2.0
        rng = np.random.default_rng(99)
        axes = rng.standard_normal((50, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        threshold = math.cos(math.radians(CAP_DEG))
        counts = (dirs @ axes.T >= threshold).sum(axis=0)
        assert abs(counts.mean() - expected) < 0.03 * expected
        assert abs(counts.mean() - 304.0) < 0.03 * 304.0


class TestCameraModel:
    def test_rotation_orthonormal(self):
        for azimuth, elevation in [(0, 0), (90, 0), (123.4, -56.7), (0, 90), (0, -90)]:
            cam = CameraModel.from_angles(azimuth, elevation, 80.0)
            assert np.allclose(cam.rotation @ cam.rotation.T, np.eye(3), atol=1e-9)
            # forward maps onto the camera forward axis
            assert np.allclose(cam.rotation @ cam.forward, [0, 0, 1], atol=1e-9)

    def test_focal_from_fov(self):
        assert abs(focal_from_fov(90.0) - 1.0) < 1e-12
        cam = CameraModel.from_angles(0, 0, 80.0)
        assert abs(cam.focal - 1.0 / math.tan(math.radians(40.0))) < 1e-12
        assert abs(cam.fov_deg - 80.0) < 1e-9

    def test_pole_cameras_well_defined(self):
        up = CameraModel.from_angles(0.0, -90.0, 80.0)
        down = CameraModel.from_angles(0.0, 90.0, 80.0)
        for cam in (up, down):
            assert np.all(np.isfinite(cam.rotation))
            assert np.allclose(np.linalg.norm(cam.rotation, axis=1), 1.0)
        assert np.allclose(up.up_hint, [0, 0, 1])

    def test_horizon_views_keep_horizon_level(self):
        # the image-right axis stays horizontal for non-pole views
        cam = CameraModel.from_angles(77.0, 33.0, 80.0)
        assert abs(cam.rotation[0, 1]) < 1e-12


class TestProjection:
    def test_optical_axis_maps_to_center(self):
        for fov in (30.0, 80.0, 120.0):
            cam = CameraModel.from_angles(211.0, -37.0, fov)
            u, v = spherical_to_perspective(cam.forward, cam)
            assert abs(u) < 1e-12 and abs(v) < 1e-12

    def test_forward_example(self):
        # forward +Z, f=1: normalize(1, 0, 1) projects to (1, 0)
        cam = CameraModel.from_angles(0.0, 0.0, 90.0)
        d = np.array([1.0, 0.0, 1.0]) / math.sqrt(2.0)
        u, v = spherical_to_perspective(d, cam)
        assert abs(u - 1.0) < 1e-12 and abs(v) < 1e-12

    def test_behind_camera_absent(self):
        cam = CameraModel.from_angles(0.0, 0.0, 90.0)
        assert spherical_to_perspective(-cam.forward, cam) is None

    def test_frontal_masking_is_inner_product_sign(self):
        cam = CameraModel.from_angles(45.0, 10.0, 90.0)
        rng = np.random.default_rng(3)
        dirs = rng.standard_normal((500, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        _, frontal = project_dirs(dirs, cam)
        assert np.array_equal(frontal, dirs @ cam.forward > 0.0)

    def test_inverse_examples(self):
        cam = CameraModel.from_angles(0.0, 0.0, 90.0)
        assert np.allclose(perspective_to_spherical(np.array([0.0, 0.0]), cam),
                           cam.forward, atol=1e-12)
        d = perspective_to_spherical(np.array([1.0, 0.0]), cam)
        assert np.allclose(d, np.array([1.0, 0.0, 1.0]) / math.sqrt(2.0), atol=1e-12)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_round_trip_random_frontal(self, seed):
        # forward map as oracle: project(unproject(p)) == p within 1e-6
        rng = np.random.default_rng(seed)
        cam = CameraModel.from_angles(
            rng.uniform(0, 360), rng.uniform(-90, 90), rng.uniform(30, 120)
        )
        uv = rng.uniform(-1.0, 1.0, size=(20, 2))
        dirs = perspective_to_spherical(uv, cam)
        back, frontal = project_dirs(dirs, cam)
        assert np.all(frontal)
        assert np.max(np.abs(back - uv)) < 1e-6

    def test_round_trip_1000_directions(self):
        cam = CameraModel.from_angles(200.0, 25.0, 100.0)
        rng = np.random.default_rng(11)
        uv = rng.uniform(-1.0, 1.0, size=(1000, 2))
        dirs = perspective_to_spherical(uv, cam)
        back, frontal = project_dirs(dirs, cam)
        assert np.all(frontal) and np.max(np.abs(back - uv)) < 1e-6

    def test_in_frame_crop_inclusive(self):
        uv = np.array([[1.0, 0.0], [1.2, 0.0], [0.0, 0.0], [0.0, -1.0], [-1.0, 1.0]])
        frontal = np.array([True, True, False, True, True])
        assert list(in_frame(uv, frontal)) == [True, False, False, True, True]


class TestDistortionRatio:
    def test_limit_at_zero(self):
        assert distortion_ratio(0.0) == 1.0

    def test_forty_five_degrees(self):
        assert abs(distortion_ratio(math.pi / 4.0) - 4.0 / math.pi) < 1e-12

    def test_monotone_increasing(self):
        grid = np.linspace(0.0, math.pi / 2.0 - 1e-6, 500)
        values = distortion_ratio(grid)
        assert np.all(np.diff(values) > 0.0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            distortion_ratio(math.pi / 2.0)
        with pytest.raises(ValueError):
            distortion_ratio(-0.1)


class TestErpLayout:
    def test_shape_and_poles(self):
        azimuth, elevation = erp_pixel_angles(8)
        assert azimuth.shape == (8, 16)
        assert elevation[0, 0] == -90.0 + 180.0 * 0.5 / 8  # row 0 is the upward pole
        assert elevation[-1, 0] == 90.0 - 180.0 * 0.5 / 8
        assert azimuth[0, 0] == 360.0 * 0.5 / 16

    def test_dirs_round_trip_with_unprojection(self):
        # ERP directions agree with camera unprojection away from poles
        dirs = erp_pixel_dirs(64)
        azimuth, elevation = erp_pixel_angles(64)
        cam = CameraModel.from_angles(azimuth[32, 40], elevation[32, 40], 60.0)
        d = perspective_to_spherical(np.zeros(2), cam)
        assert np.allclose(d, dirs[32, 40], atol=1e-9)
