import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from psampler.losses import (RayEvaluation, background_loss, combine, compute_alphas,
                             compute_weights, empty_space_loss, evaluate_ray, near_surface_loss,
                             total_surface_loss)
from psampler.sampler import Band


def test_alpha_hand_value():
    # Phi(0) = 0.5 and Phi(-1) = 0.268941 at s = 50, sdf step 0.02
    a = compute_alphas([0.0, -0.02], 50.0)
    assert a[0] == pytest.approx(0.462117, abs=1e-6)


def test_alpha_zero_when_leaving_surface():
    np.testing.assert_array_equal(compute_alphas([-0.1, 0.0, 0.1], 30.0), [0.0, 0.0])


def test_alphas_need_two_points():
    with pytest.raises(ValueError):
        compute_alphas([0.0], 1.0)


def test_weights_hand_values():
    w = compute_weights([0.5, 0.5, 0.5])
    np.testing.assert_allclose(w, [0.5, 0.25, 0.125])
    np.testing.assert_allclose(compute_weights([0.5, 0.5, 0.5], inclusive=True), [0.25, 0.125, 0.0625])


def test_opaque_front_gates_later_points():
    w = compute_weights([0.2, 1.0, 0.7, 0.9])
    assert w[1] == pytest.approx(0.8)
    np.testing.assert_array_equal(w[2:], 0.0)


@settings(max_examples=300)
@given(arrays(np.float64, st.integers(1, 64), elements=st.floats(0, 1)))
def test_telescoping(alphas):
    total = compute_weights(alphas).sum() + np.prod(1 - alphas)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_evaluate_ray_pads_last_weight():
    r = evaluate_ray([0.2, 0.05, -0.05, -0.2], [Band.EMPTY, Band.NEAR, Band.NEAR, Band.EMPTY], 40.0)
    assert r.weights.shape == (4,) and r.weights[-1] == 0.0
    assert r.weights.sum() <= 1.0


def test_evaluation_validates_lengths():
    with pytest.raises(ValueError):
        RayEvaluation(np.zeros(3), np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        RayEvaluation(np.zeros(3), np.zeros(3), np.zeros(2))
    RayEvaluation(np.zeros(3), np.zeros(3), np.zeros(0), is_background=True)


def ray(sdf, bands, w, bg=False):
    return RayEvaluation(np.asarray(sdf, float), np.asarray(w, float), np.asarray(bands), bg)


def test_near_loss_zero_on_surface():
    rays = [ray([0.0, 0.0], [Band.NEAR, Band.NEAR], [0.3, 0.6])]
    assert near_surface_loss(rays) == 0.0


def test_empty_loss_zero_at_epsilon():
    rays = [ray([1e-3, 1e-3, 1e-3], [Band.EMPTY] * 3, [0.2, 0.5, 0.1])]
    assert empty_space_loss(rays, epsilon=1e-3) == 0.0


def test_losses_hand_values():
    fg = ray([0.1, -0.2, 0.3], [Band.NEAR, Band.NEAR, Band.EMPTY], [0.5, 0.25, 0.2])
    bg = ray([0.0, 0.1], [], [0.4, 0.1], bg=True)
    rays = [fg, bg]
    assert near_surface_loss(rays) == pytest.approx((0.05 + 0.05) / 2)
    assert empty_space_loss(rays, epsilon=0.1) == pytest.approx((0.2 * 0.2) ** 2 / 2)
    assert background_loss(rays, beta=10.0) == pytest.approx((0.4 + np.exp(-1.0) * 0.1) / 2)


def test_surface_composition():
    rng = np.random.default_rng(0)
    rays = []
    for k in range(50):
        sdf = rng.normal(scale=0.1, size=16)
        bands = np.where(rng.random(16) < 0.5, Band.NEAR, Band.EMPTY)
        rays.append(evaluate_ray(np.sort(sdf)[::-1], bands, 60.0, is_background=k % 7 == 0))
    rep = total_surface_loss(rays)
    assert rep.total == pytest.approx(0.5 * rep.near + 0.5 * (rep.empty + rep.background), abs=1e-12)
    assert rep.total == combine(rep.near, rep.empty, rep.background)
    d = rep.to_dict()
    assert set(d) == {"near", "empty", "background", "total", "rays", "params"}
    assert d["rays"] == 50


def test_no_rays():
    with pytest.raises(ValueError):
        total_surface_loss([])
