import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psampler.errors import BehindCamera, ConfigError, InvalidDepth, NoIntersection
from psampler.geometry import (Camera, CameraBounds, SceneBoundary, camera_to_image,
                               compute_bounds, image_to_camera, load_rig, project, ray_from_sample,
                               save_rig, unproject, world_to_camera)

from conftest import random_rotation

coord = st.floats(-5, 5, allow_nan=False)


def camera_from_seed(seed):
    rng = np.random.default_rng(seed)
    return Camera(random_rotation(rng), rng.normal(size=3), 50.0, 60.0, 20.0, 15.0, 40, 30)


class TestCamera:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Camera(np.diag([1.0, 1.0, 2.0]), [0, 0, 0], 1, 1, 0, 0, 1, 1)

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            Camera(np.diag([1.0, 1.0, -1.0]), [0, 0, 0], 1, 1, 0, 0, 1, 1)

    @pytest.mark.parametrize("fx,width", [(0.0, 10), (-1.0, 10), (1.0, 0)])
    def test_rejects_bad_intrinsics(self, fx, width):
        with pytest.raises(ValueError):
            Camera(np.eye(3), [0, 0, 0], fx, 1.0, 0, 0, width, 1)

    def test_look_at_puts_target_on_principal_point(self, front_camera):
        u = project(front_camera, [0.0, 0.0, 0.0])
        np.testing.assert_allclose(u, [0.0, 0.0, 4.0], atol=1e-12)
        px, py = front_camera.uv_to_pixel(u[0], u[1])
        assert (px, py) == pytest.approx((32.0, 32.0))

    def test_pixel_uv_round_trip(self, front_camera):
        u, v = front_camera.pixel_to_uv(10.5, 40.25)
        assert front_camera.uv_to_pixel(u, v) == pytest.approx((10.5, 40.25))

    def test_dict_round_trip(self, front_camera):
        back = Camera.from_dict(json.loads(json.dumps(front_camera.to_dict())))
        np.testing.assert_array_equal(back.rotation, front_camera.rotation)
        assert back.fx == front_camera.fx and back.width == front_camera.width


class TestRig:
    def test_save_load(self, tmp_path, front_camera):
        path = tmp_path / "rig.json"
        save_rig(path, [front_camera, front_camera])
        rig = load_rig(path)
        assert len(rig) == 2
        np.testing.assert_array_equal(rig[1].center, front_camera.center)

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(ConfigError, match="nowhere.json"):
            load_rig(tmp_path / "nowhere.json")

    def test_empty_rig(self, tmp_path):
        (tmp_path / "r.json").write_text("[]")
        with pytest.raises(ConfigError):
            load_rig(tmp_path / "r.json")


class TestTransforms:
    def test_identity_camera_example(self):
        cam = Camera(np.eye(3), [0, 0, 0], 1, 1, 0, 0, 1, 1)
        np.testing.assert_allclose(project(cam, [1.0, 2.0, 4.0]), [0.25, 0.5, 4.0])

    def test_behind_camera(self):
        with pytest.raises(BehindCamera):
            camera_to_image([0.0, 0.0, -1.0])
        with pytest.raises(BehindCamera):
            camera_to_image([1.0, 1.0, 0.0])

    def test_invalid_depth(self):
        with pytest.raises(InvalidDepth):
            image_to_camera([0.1, 0.1, 0.0])
        with pytest.raises(InvalidDepth):
            image_to_camera([0.1, 0.1, np.nan])

    def test_world_to_camera_uses_transpose(self):
        # camera optical axis is world +x
        R = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
        cam = Camera(R, [0, 0, 0], 1, 1, 0, 0, 1, 1)
        np.testing.assert_allclose(world_to_camera(cam, [2.0, 0.0, 0.0]), [0.0, 0.0, 2.0])

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), u=st.floats(-2, 2), v=st.floats(-2, 2),
           lam=st.floats(0.05, 20))
    def test_unproject_project_round_trip(self, seed, u, v, lam):
        cam = camera_from_seed(seed)
        back = project(cam, unproject(cam, [u, v, lam]))
        np.testing.assert_allclose(back, [u, v, lam], rtol=1e-10, atol=1e-10)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), u=st.floats(-1, 1), v=st.floats(-1, 1),
           lam=st.floats(0.1, 10))
    def test_ray_recovers_point(self, seed, u, v, lam):
        cam = camera_from_seed(seed)
        o, d, depth = ray_from_sample(cam, [u, v, lam])
        assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(o + depth * d, unproject(cam, [u, v, lam]), atol=1e-10)
        assert depth >= lam * (1 - 1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), u=st.floats(-1, 1), v=st.floats(-1, 1),
           lam=st.floats(0.2, 10))
    def test_jacobian_determinant_is_depth_squared(self, seed, u, v, lam):
        cam = camera_from_seed(seed)
        x0 = np.array([u, v, lam])
        h = 1e-6 * np.array([1.0, 1.0, max(lam, 1.0)])
        J = np.empty((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h[k]
            J[:, k] = (unproject(cam, x0 + e) - unproject(cam, x0 - e)) / (2 * h[k])
        assert np.linalg.det(J) == pytest.approx(lam**2, rel=1e-6)

    def test_batched_shapes(self):
        cam = camera_from_seed(3)
        pts = np.random.default_rng(0).normal(size=(7, 5, 3)) * 0.1 + cam.center + 3 * cam.rotation[:, 2]
        assert project(cam, pts).shape == (7, 5, 3)


class TestBoundary:
    def test_sphere_intersection(self):
        b = SceneBoundary.sphere(1.0)
        assert b.intersect([0, 0, -3.0], [0, 0, 1.0]) == pytest.approx((2.0, 4.0))
        assert b.intersect([0, 2.0, -3.0], [0, 0, 1.0]) is None

    def test_box_intersection(self):
        b = SceneBoundary.box([1.0, 2.0, 0.5])
        assert b.intersect([0, 0, -3.0], [0, 0, 2.0]) == pytest.approx((1.25, 1.75))
        assert b.intersect([5.0, 0, -3.0], [0, 0, 1.0]) is None
        assert b.intersect([0.5, 0.5, -3.0], [1.0, 0, 0]) is None

    def test_contains(self):
        b = SceneBoundary.box([1.0, 1.0, 1.0], center=[2.0, 0, 0])
        np.testing.assert_array_equal(b.contains([[2.5, 0, 0], [0, 0, 0]]), [True, False])

    def test_bad_dict(self):
        with pytest.raises(ConfigError):
            SceneBoundary.from_dict({"type": "torus"})


class TestComputeBounds:
    def test_on_axis_camera(self, front_camera):
        b = compute_bounds(front_camera, SceneBoundary.sphere(1.5))
        assert b.u_range == pytest.approx((-1 / 3, 1 / 3))
        assert b.v_range == pytest.approx((-1 / 3, 1 / 3))
        assert b.lambda_range == pytest.approx((2.5, 5.5))

    def test_camera_inside_boundary_clamps_near(self):
        cam = Camera(np.eye(3), [0, 0, 0], 10, 10, 5, 5, 10, 10)
        b = compute_bounds(cam, SceneBoundary.sphere(2.0))
        assert 0 < b.lambda_range[0] < 0.01
        assert b.lambda_range[1] == pytest.approx(2.0)

    def test_looking_away(self):
        cam = Camera(np.diag([1.0, -1.0, -1.0]), [0, 0, -4.0], 96, 96, 32, 32, 64, 64)
        with pytest.raises(NoIntersection):
            compute_bounds(cam, SceneBoundary.sphere(1.5))

    def test_array_round_trip(self):
        b = CameraBounds((-1.0, 1.0), (-0.5, 0.5), (2.0, 6.0))
        assert CameraBounds.from_array(b.as_array()) == b
