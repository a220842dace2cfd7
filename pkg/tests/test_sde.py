import numpy as np
import pytest

from stochain import make_config
from stochain.config import NumericalError
from stochain.sde import (IntegratorConfig, SdeState, init_state, integrate_block, integrate_path,
                          step_euler, step_exact, weak_error_study)


def test_init_conventions(cfg):
    assert init_state(cfg) == SdeState(0.0, 0.0, 0.0, 0.0, 1.0)
    assert init_state(cfg, "paper").p == 1.0


def test_scheme_aliases_and_validation():
    assert IntegratorConfig("exact").scheme == "exact-angle"
    with pytest.raises(ValueError):
        IntegratorConfig("rk4")
    with pytest.raises(ValueError):
        IntegratorConfig(h=0)


@pytest.mark.parametrize("scheme", ["euler", "projected-euler", "exact-angle"])
def test_zero_noise_is_straight(scheme):
    c = make_config(a=[1.0, 1.0], f=0.0)
    ends = integrate_block(c, IntegratorConfig(scheme, h=1e-3), [0, 1]).endpoints
    # Euler uses left-point q, exact-angle right-point a; both differ from 1.5 by h/2
    np.testing.assert_allclose(ends[:, 0], 1.5, atol=6e-4)
    np.testing.assert_allclose(ends[:, 1], 0.0, atol=1e-15)


def test_exact_defect_and_projected_radius(cfg):
    path = integrate_path(cfg, IntegratorConfig("exact-angle", h=1e-3, stride=10), 4)
    assert path.max_defect <= 1e-12
    assert len(path.l) == 101
    proj = integrate_block(cfg, IntegratorConfig("projected-euler", h=0.01), np.arange(50))
    assert proj.max_defect.max() < 1e-12
    eul = integrate_block(cfg, IntegratorConfig("euler", h=0.01), np.arange(50))
    assert eul.max_defect.max() > 1e-6


def test_step_functions_match_block(cfg):
    icfg = IntegratorConfig("euler", h=0.1)
    from stochain.rng import Component, substream
    z = substream(cfg.seed, 0, Component.SDE).standard_normal(10)
    s = init_state(cfg)
    for k in range(10):
        s = step_euler(s, 0.1, 1.0, z[k], cfg)
    end = integrate_block(cfg, icfg, [0]).endpoints[0]
    assert (s.x, s.y) == pytest.approx(tuple(end), rel=1e-12)
    s = init_state(cfg)
    for k in range(10):
        s = step_exact(s, 0.1, 1.0, z[k], cfg)
    end = integrate_block(cfg, IntegratorConfig("exact-angle", h=0.1), [0]).endpoints[0]
    assert (s.x, s.y) == pytest.approx(tuple(end), rel=1e-12)


def test_step_must_divide_length(cfg):
    with pytest.raises(ValueError):
        integrate_block(cfg, IntegratorConfig(h=0.3), [0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_raises():
    c = make_config(f=1e200)
    with pytest.raises(NumericalError):
        integrate_block(c, IntegratorConfig("euler", h=0.1), [0])


def test_common_noise_aggregation(cfg):
    fine = integrate_block(cfg, IntegratorConfig("exact-angle", h=0.01, base_h=0.01), [3])
    coarse = integrate_block(cfg, IntegratorConfig("exact-angle", h=0.02, base_h=0.01), [3])
    # same Brownian path, so endpoints are close but not identical
    assert np.abs(fine.endpoints - coarse.endpoints).max() < 0.05


def test_weak_error_shrinks(cfg):
    rows, ratios = weak_error_study(cfg, 1.0, (0.02, 0.01), 2000)
    assert abs(rows[1][1]) < abs(rows[0][1])
