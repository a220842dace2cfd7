import math

import numpy as np
import pytest

from stochain import make_config
from stochain.estimators import (EstimatorError, compare_fields, estimate_char_function,
                                 estimate_complex_moment, estimate_density, silverman_bandwidth,
                                 solve_phase_density, zscore)


@pytest.fixture
def gauss():
    return np.random.default_rng(1).standard_normal((20_000, 2))


def test_cf_of_gaussian(gauss):
    cf = estimate_char_function(gauss, [(0, 0), (1, 0), (1, 1)])
    assert cf.value[0] == 1 and cf.stderr_re[0] == 0
    exact = [1, math.exp(-0.5), math.exp(-1)]
    z = (cf.value.real - exact) / np.where(cf.stderr_re > 0, cf.stderr_re, 1)
    assert np.all(np.abs(z) < 4)


def test_cf_requires_samples():
    with pytest.raises(EstimatorError):
        estimate_char_function(np.zeros((10, 2)))


def test_complex_moment_of_constant():
    xy = np.tile([0.5, 0.5], (1000, 1))
    v, (sr, si) = estimate_complex_moment(xy, 2)
    assert v == pytest.approx((0.5 - 0.5j) ** 2) and sr == 0
    assert estimate_complex_moment(xy, 0)[0] == 1


def test_kde_gaussian(gauss):
    est = estimate_density(gauss, points=101)
    assert est.mass == pytest.approx(1, abs=1e-3)
    assert est.hist.sum() == len(gauss)
    # KDE inflates the second moment by hx^2 + hy^2
    bw = est.bandwidth
    assert est.second_moment() == pytest.approx((gauss ** 2).sum(1).mean() + bw[0] ** 2 + bw[1] ** 2, rel=1e-2)
    # smoothed N(0, I) peaks at 1 / (2 pi sqrt((1 + hx^2)(1 + hy^2))) at the origin
    peak = 1 / (2 * math.pi * math.sqrt((1 + bw[0] ** 2) * (1 + bw[1] ** 2)))
    assert est.rho[50, 50] == pytest.approx(peak, rel=0.05)


def test_zero_spread_axis_falls_back():
    xy = np.column_stack([np.random.default_rng(0).standard_normal(500), np.zeros(500)])
    assert silverman_bandwidth(xy[:, 1]) == 0
    est = estimate_density(xy)
    assert est.bandwidth[1] > 0 and np.isfinite(est.rho).all()


def test_bad_bandwidth(gauss):
    with pytest.raises(EstimatorError):
        estimate_density(gauss, bandwidth=-1)


def test_zscore_edge_cases():
    np.testing.assert_array_equal(zscore([0.0, 1.0, 2.0], [0.0, 0.0, 1.0]), [0.0, np.inf, 2.0])


def test_compare_fields_detects_shift(gauss):
    a = estimate_char_function(gauss)
    b = estimate_char_function(gauss + 0.3)
    assert compare_fields(a, a).passed
    rep = compare_fields(a, b)
    assert not rep.passed and rep.max_z > 4
    with pytest.raises(EstimatorError):
        compare_fields(a, estimate_char_function(gauss, [(0, 1)]))


def test_phase_density_gaussian():
    pd = solve_phase_density(make_config(), 1.0, points=2048)
    assert pd.linf_error < 1e-4
    assert abs(pd.mass - 1) < 1e-12
    assert pd.variance == pytest.approx(pd.target_variance, rel=1e-4)


def test_phase_density_variable_intensity():
    c = make_config(f=[0.5, 1.0])
    pd = solve_phase_density(c, 1.0, points=1024, steps=800)
    # int_0^1 (0.5 + l)^2 dl = 13/12
    assert pd.target_variance - (pd.phi[1] - pd.phi[0]) ** 2 / 4 == pytest.approx(13 / 12)
    assert pd.linf_error < 1e-3


def test_phase_density_zero_noise():
    pd = solve_phase_density(make_config(f=0.0), 1.0, points=64)
    assert math.isnan(pd.linf_error) and pd.mass == pytest.approx(1)


def test_phase_density_boundary_guard():
    with pytest.raises(EstimatorError):
        solve_phase_density(make_config(), 1.0, points=256, half_width=1.0)
