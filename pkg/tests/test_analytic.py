import itertools
import math

import numpy as np

import pytest
from hypothesis import given, settings, strategies as st

from stochain import make_config
from stochain.analytic import (Lemma2Variant, MomentRequest, feller_mean_square, finite_n_product,
                               lemma1_rhs, lemma2_rhs, mean_square_length, moment_pure)
from stochain.config import FunctionSpec1D

# quadrature-independent references (high-precision evaluation of the nested integrals)
M1, M2, M3 = 0.786938680574733, 0.472808429590719, 0.227059040958924
MSL_K1 = 8 * math.exp(-0.5) - 4            # 0.852245277701067
MSL_K05 = 32 * math.exp(-0.25) - 24        # 0.921625058284956


def test_feller_formula():
    assert feller_mean_square(10, math.pi / 3) == pytest.approx(26.00390625, rel=1e-13)
    assert feller_mean_square(12, math.pi / 2) == 12
    assert feller_mean_square(1, 0.7) == pytest.approx(1.0)


# n = 20, closed form evaluated at 50 significant digits
@pytest.mark.parametrize("alpha,ref", [(0.0, 400.0), (1e-9, 400.0), (1e-5, 399.999999867),
                                       (1e-3, 399.99867000310332774)])
def test_feller_small_angle_continuous(alpha, ref):
    assert feller_mean_square(20, alpha) == pytest.approx(ref, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.floats(1e-4, math.pi))
def test_feller_formula_matches_enumeration(n, alpha):
    # exact average over all 2^(n-1) turn sequences
    total = 0.0
    for signs in itertools.product((-1, 1), repeat=n - 1):
        heading = np.concatenate([[0.0], np.cumsum(signs) * alpha])
        total += np.cos(heading).sum() ** 2 + np.sin(heading).sum() ** 2
    assert feller_mean_square(n, alpha) == pytest.approx(total / 2 ** (n - 1), rel=1e-9, abs=1e-9)


def test_lemma1_symmetric():
    eta = FunctionSpec1D.polynomial([1.0, -0.5])
    assert lemma1_rhs(0.7, eta, 0.1, 0.9) == lemma1_rhs(-0.7, eta, 0.1, 0.9)
    assert lemma1_rhs(1.0, FunctionSpec1D.constant(1.0), 0, 1) == pytest.approx(math.exp(0.5))


def test_lemma2_constants():
    c = make_config()
    assert finite_n_product(1, 0, 1, 1, 1) == pytest.approx(2 ** -0.5)
    assert finite_n_product(1, 0, 1, 1, 1, "paper") == pytest.approx(1.5 ** -0.5)
    assert lemma2_rhs(1, c, 0, 1, 1) == pytest.approx(math.exp(-0.5))
    assert lemma2_rhs(1, c, 0, 1, 1, Lemma2Variant.PAPER) == pytest.approx(math.exp(-0.25))


@pytest.mark.parametrize("variant", list(Lemma2Variant))
def test_finite_n_converges_at_rate_one_over_n(variant):
    c = make_config()
    lim = math.log(lemma2_rhs(1.3, c, 0, 1, 1, variant))
    e3 = abs(math.log(finite_n_product(1.3, 0, 1, 1, 1000, variant)) - lim)
    e4 = abs(math.log(finite_n_product(1.3, 0, 1, 1, 10_000, variant)) - lim)
    assert 9 < e3 / e4 < 11


def test_moments_against_references(cfg):
    for m, ref in [(0, 1.0), (1, M1), (2, M2), (3, M3)]:
        assert moment_pure(MomentRequest(m, 1.0, 1.0, cfg)) == pytest.approx(ref, rel=1e-9)


def test_first_moment_closed_form_kappa_half():
    c = make_config(kappa=0.5)
    assert moment_pure(MomentRequest(1, 1.0, 1.0, c)) == pytest.approx(4 * (1 - math.exp(-0.25)), rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0.2, 2.0), min_size=1, max_size=3), st.integers(1, 3), st.floats(0.1, 1.0))
def test_simplex_identity(coeffs, m, l):
    c = make_config(a=coeffs, f=0.0)
    total = c.a.integral(0.0, l)
    assert moment_pure(MomentRequest(m, l, 1.0, c)) == pytest.approx(total ** m, rel=1e-6)


def test_moment_guard(cfg):
    with pytest.raises(ValueError):
        MomentRequest(7, 1.0, 1.0, cfg)
    with pytest.raises(ValueError):
        MomentRequest(1, 1.5, 1.0, cfg)


def test_mean_square_length_closed_forms():
    assert mean_square_length(1, 1, make_config()) == pytest.approx(MSL_K1, rel=1e-6)
    assert mean_square_length(1, 1, make_config(kappa=0.5)) == pytest.approx(MSL_K05, rel=1e-6)
    assert mean_square_length(1, 0, make_config(a=[1.0, 1.0])) == pytest.approx(2.25, rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_mean_square_length_monotone(l, t):
    c = make_config(f=[1.0, 0.5], g=[0.5, 1.0])
    v = mean_square_length(l, t, c, points=201)
    assert mean_square_length(min(l + 0.05, 1), t, c, points=201) >= v - 1e-12
    assert mean_square_length(l, min(t + 0.05, 1), c, points=201) <= v + 1e-12
