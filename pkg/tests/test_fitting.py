import numpy as np
import pytest

from glassybv.errors import InvalidParameter, SingularJacobian
from glassybv.fitting import FitModel, fit, model_jacobian, model_value

x = np.linspace(0, 1, 21)


def synthetic(params, noise=0.0, seed=0):
    y = model_value(x, params) + noise * np.random.default_rng(seed).normal(size=x.size)
    return list(zip(x, y))


@pytest.mark.parametrize(
    "params",
    [(0.5, 3.0, -0.2, 0.5), (0.19, 4.3, -0.31, 0.8), (0.95, 10.0, -0.05, 0.05), (0.3, 1.0, 0.1, 0.6)],
)
def test_exact_round_trip(params):
    res = fit(synthetic(params), FitModel.gauss_quad())
    assert res.converged
    assert res.params == pytest.approx(params, abs=1e-6)
    assert res.rms_error < 1e-8


def test_gauss_only_pins_c():
    res = fit(synthetic((0.59, 1.8, 0.0, 0.41)), FitModel.gauss_only())
    assert res.params[2] == 0.0
    assert res.half_widths_95[2] == 0.0
    assert res.params == pytest.approx((0.59, 1.8, 0.0, 0.41), abs=1e-6)


def test_extra_pins():
    res = fit(synthetic((0.99, 35.0, 0.0, 0.0)), FitModel.gauss_quad(c=0.0, d=0.0))
    assert res.params[2:] == (0.0, 0.0)
    assert res.params[1] == pytest.approx(35.0, rel=1e-6)


def test_jacobian_matches_finite_differences():
    p = np.array([0.7, 2.5, -0.3, 0.2])
    J = model_jacobian(x, p)
    h = 1e-6
    for k in range(4):
        dp = np.zeros(4)
        dp[k] = h
        fd = (model_value(x, p + dp) - model_value(x, p - dp)) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-8)


def test_half_widths_cover_truth_under_noise():
    truth = (0.5, 3.0, -0.2, 0.5)
    hits = 0
    for seed in range(40):
        res = fit(synthetic(truth, noise=0.003, seed=seed), FitModel.gauss_quad())
        hits += all(abs(p - t) <= h for p, t, h in zip(res.params, truth, res.half_widths_95))
    # four intervals jointly at 95% each: expect roughly 80% joint coverage or better
    assert hits >= 26


def test_scale_invariance():
    data = synthetic((0.5, 3.0, -0.2, 0.5), noise=0.002, seed=3)
    scaled = [(u, 10 * v) for u, v in data]
    a = fit(data, FitModel.gauss_quad())
    b = fit(scaled, FitModel.gauss_quad())
    assert b.params[1] == pytest.approx(a.params[1], rel=1e-6)
    assert b.params[0] == pytest.approx(10 * a.params[0], rel=1e-6)
    assert b.rms_error == pytest.approx(10 * a.rms_error, rel=1e-6)


def test_negative_start_projected():
    res = fit(synthetic((0.5, 3.0, -0.2, 0.5)), FitModel.gauss_quad(), init=(-1.0, -2.0, 0.0, 0.5))
    assert res.params == pytest.approx((0.5, 3.0, -0.2, 0.5), abs=1e-6)


def test_rising_curve_hits_bound_and_is_degenerate():
    # best fit wants a < 0; at a = 0 the width b is no longer identifiable
    y = 0.2 + 0.5 * x**2
    with pytest.raises(SingularJacobian):
        fit(list(zip(x, y)), FitModel.gauss_only())


def test_too_few_points():
    with pytest.raises(InvalidParameter):
        fit(synthetic((0.5, 3.0, 0.0, 0.5))[:7], FitModel.gauss_only())


def test_duplicate_or_out_of_range_x():
    data = synthetic((0.5, 3.0, 0.0, 0.5))
    with pytest.raises(InvalidParameter):
        fit(data + [data[0]], FitModel.gauss_only())
    with pytest.raises(InvalidParameter):
        fit(data + [(1.5, 0.3)], FitModel.gauss_only())


def test_flat_data_is_singular():
    with pytest.raises(SingularJacobian):
        fit([(u, 0.5) for u in x], FitModel.gauss_quad())


def test_unknown_form():
    with pytest.raises(InvalidParameter):
        FitModel("cubic")
