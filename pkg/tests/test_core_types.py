import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupledpf.core_types import (BoxVolume, CameraModel, GripperPose, SphereVolume, backproject,
                                  check_depth, check_flow, check_heatmap, cosine_similarity,
                                  distance_to_volumes, gaussian_kernel, point3, project)


def test_project_principal_ray(cam):
    assert project(cam, (0, 0, 1)) == (50.0, 50.0)


def test_project_right_edge_is_out_of_frame(cam):
    # u = 100 = width, outside the half-open domain
    assert project(cam, (0.5, 0, 1)) is None


def test_project_hand_evaluated(cam):
    u, v = project(cam, (0.2, -0.1, 2))
    assert u == pytest.approx(60.0) and v == pytest.approx(45.0)


def test_project_behind_camera(cam):
    assert project(cam, (0, 0, -1)) is None
    assert project(cam, (0, 0, 0)) is None


def test_backproject_examples(cam):
    np.testing.assert_allclose(backproject(cam, 50, 50, 1.0), [0, 0, 1])
    np.testing.assert_allclose(backproject(cam, 60, 45, 2.0), [0.2, -0.1, 2.0])


def test_backproject_rejects_bad_depth(cam):
    with pytest.raises(ValueError):
        backproject(cam, 10, 10, 0.0)
    with pytest.raises(ValueError):
        backproject(cam, 10, 10, -1.0)


def test_backproject_round_trip(cam):
    rng = np.random.default_rng(3)
    for _ in range(100):
        u, v = rng.uniform(0, 100, 2)
        d = rng.uniform(0.1, 5)
        p = backproject(cam, u, v, d)
        assert p[2] == pytest.approx(d)
        pu, pv = project(cam, p)
        assert abs(pu - u) < 1e-6 and abs(pv - v) < 1e-6


@given(fx=st.floats(10, 1000), fy=st.floats(10, 1000), w=st.integers(2, 640), h=st.integers(2, 480),
       fu=st.floats(0, 0.999), fv=st.floats(0, 0.999), pu=st.floats(0, 0.999), pv=st.floats(0, 0.999),
       d=st.floats(0.05, 20))
def test_project_backproject_inverse_property(fx, fy, w, h, fu, fv, pu, pv, d):
    cam = CameraModel(fx, fy, fu * w, fv * h, w, h)
    u, v = pu * w, pv * h
    res = project(cam, backproject(cam, u, v, d))
    assert res is not None
    assert abs(res[0] - u) < 1e-6 and abs(res[1] - v) < 1e-6


def test_camera_validation():
    with pytest.raises(ValueError):
        CameraModel(0, 1, 0, 0, 10, 10)
    with pytest.raises(ValueError):
        CameraModel(1, 1, 10, 0, 10, 10)


def test_gaussian_kernel_values():
    a = np.zeros(3)
    assert gaussian_kernel(a, a, 0.05) == 1.0
    assert gaussian_kernel(a, [0.05, 0, 0], 0.05) == pytest.approx(math.exp(-0.5))
    assert gaussian_kernel(a, [0.05, 0, 0], 0.05) == pytest.approx(0.6065, abs=1e-4)
    far = gaussian_kernel(a, [0.5, 0, 0], 0.05)
    assert far == pytest.approx(math.exp(-50.0), rel=1e-12)
    assert far < 2e-22


def test_gaussian_kernel_rejects_bad_sigma():
    with pytest.raises(ValueError):
        gaussian_kernel([0, 0, 0], [0, 0, 0], 0.0)


pts = st.lists(st.floats(-2, 2), min_size=3, max_size=3)


@given(a=pts, b=pts, sigma=st.floats(0.01, 1.0))
def test_gaussian_kernel_symmetric(a, b, sigma):
    assert gaussian_kernel(a, b, sigma) == gaussian_kernel(b, a, sigma)


@given(r1=st.floats(0, 1), r2=st.floats(0, 1), sigma=st.floats(0.01, 1.0))
def test_gaussian_kernel_monotone(r1, r2, sigma):
    lo, hi = sorted((r1, r2))
    k = lambda r: gaussian_kernel([0, 0, 0], [r, 0, 0], sigma)
    assert k(lo) >= k(hi)


def test_cosine_similarity_examples():
    assert cosine_similarity([1, 0, 0], [1, 0, 0]) == 1.0
    assert cosine_similarity([1, 0, 0], [-1, 0, 0]) == -1.0
    assert cosine_similarity([1, 0, 0], [0, 1, 0]) == 0.0


def test_cosine_similarity_rejects_non_unit():
    with pytest.raises(ValueError):
        cosine_similarity([2, 0, 0], [1, 0, 0])


def _rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    return q * np.sign(np.diag(r))


@given(seed=st.integers(0, 2**32 - 1))
def test_cosine_similarity_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    a, b = (v / np.linalg.norm(v) for v in rng.normal(size=(2, 3)))
    rot = _rotation(rng)
    assert cosine_similarity(rot @ a, rot @ b) == pytest.approx(cosine_similarity(a, b), abs=1e-12)


def test_gripper_pose_requires_unit_approach():
    GripperPose(np.zeros(3), [0, 0, 1])
    with pytest.raises(ValueError):
        GripperPose(np.zeros(3), [0, 0, 1.01])


def test_point3_finite():
    with pytest.raises(ValueError):
        point3(0, math.nan, 1)


def test_grid_validators():
    check_depth(np.ones((2, 2)))
    with pytest.raises(ValueError):
        check_depth(-np.ones((2, 2)))
    with pytest.raises(ValueError):
        check_heatmap(np.full((2, 2), 1.5))
    with pytest.raises(ValueError):
        check_flow(np.full((2, 2, 2), np.inf))


def test_volume_distances():
    s = SphereVolume(np.zeros(3), 0.1)
    np.testing.assert_allclose(s.distance([[0, 0, 0], [0.3, 0, 0]]), [0.0, 0.2])
    b = BoxVolume(np.zeros(3), np.array([0.1, 0.1, 0.1]))
    np.testing.assert_allclose(b.distance([[0.05, 0, 0], [0.4, 0.5, 0.1]]), [0.0, 0.5])
    assert distance_to_volumes([[0, 0, 0]], []) == np.inf
    assert distance_to_volumes([[0.3, 0, 0]], [s, b])[0] == pytest.approx(0.2)


def test_rotated_box_distance():
    rot = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])  # 90 deg about z
    b = BoxVolume(np.zeros(3), np.array([0.3, 0.1, 0.1]), rotation=rot)
    # the long axis now points along y
    assert b.distance([[0, 0.25, 0]])[0] == 0.0
    assert b.distance([[0.25, 0, 0]])[0] == pytest.approx(0.15)
