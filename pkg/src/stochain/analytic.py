"""Closed forms and quadratures for the chain model's expectations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import FunctionSpec1D


class Lemma2Variant(str, Enum):
    """Which constant to use in the averaged Gaussian exponent.

    PAPER keeps the published -alpha^2/4 factor, ORACLE the -alpha^2/2 factor
    that follows from E[exp(-c W_t^2)] = (1 + 2ct)^(-1/2).
    """

    PAPER = "paper"
    ORACLE = "oracle"


MAX_MOMENT_ORDER = 6


@dataclass(frozen=True)
class MomentRequest:
    m: int
    l: float
    t: float
    config: object
    points: int = 2001

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("moment order must be nonnegative")
        if self.m > MAX_MOMENT_ORDER:
            raise ValueError(f"moment order {self.m} exceeds the cost guard ({MAX_MOMENT_ORDER})")
        if self.l > self.config.l_obs * (1 + 1e-12) or self.l < 0:
            raise ValueError("l must lie in [0, n * delta]")


def feller_mean_square(n, alpha):
    """Mean squared end-to-end length of Feller's +-alpha chain of n unit steps.

    n + 2 sum_{d<n} (n - d) cos(alpha)^d, summed directly for moderate n; the
    closed form cancels badly when cos(alpha) is close to 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c = math.cos(alpha)
    if abs(c) < 1e-15:
        c = 0.0
    eps = 2.0 * math.sin(0.5 * alpha) ** 2   # 1 - cos(alpha) without cancellation
    if eps < 1e-8:
        # n^2 - 2 C(n+1, 3) eps + 2 C(n+1, 4) eps^2
        return n * n - 2 * math.comb(n + 1, 3) * eps + 2 * math.comb(n + 1, 4) * eps * eps
    if n <= 100_000:
        d = np.arange(1, n)
        return float(n + 2.0 * np.sum((n - d) * c ** d))
    return n * (1 + c) / eps - 2 * c * (1 - c ** n) / (eps * eps)


def _as_variant(variant):
    return Lemma2Variant(variant)


def lemma1_rhs(alpha, eta: FunctionSpec1D, a, b):
    """exp{(alpha^2 / 2) int_a^b eta(u)^2 du}."""
    if b < a:
        raise ValueError("need a <= b")
    return math.exp(0.5 * alpha * alpha * eta.integral(a, b, squared=True))


def sigma_sq_double_integral(config, a, b, t):
    """int_a^b int_0^t sigma(u, tau)^2 dtau du (unscaled by kappa)."""
    return config.sigma.f.integral(a, b, squared=True) * config.sigma.time_integral_sq(t)


def lemma2_rhs(alpha, config, a, b, t, variant=Lemma2Variant.ORACLE):
    if b < a:
        raise ValueError("need a <= b")
    factor = 0.25 if _as_variant(variant) is Lemma2Variant.PAPER else 0.5
    return math.exp(-factor * alpha * alpha * sigma_sq_double_integral(config, a, b, t))


def finite_n_product(alpha, a, b, t, N, variant=Lemma2Variant.ORACLE):
    """prod_k E[exp(-alpha^2 (b-a) W_k(t)^2 / (2N))] for sigma = 1.

    The oracle variant is (1 + alpha^2 (b-a) t / N)^(-N/2); the paper variant
    drops the factor 2 in the Gaussian integral.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    c = alpha * alpha * (b - a) * t / N
    if _as_variant(variant) is Lemma2Variant.PAPER:
        c = c / 2
    return math.exp(-0.5 * N * math.log1p(c))


def cumulative_eta_sq(config, u, t):
    """E(u) = int_0^u eta_tilde^2(theta, t) dtheta."""
    return config.kappa * config.sigma.time_integral_sq(t) * config.sigma.f.antiderivative(u, squared=True)


def simpson_weights(points, dx):
    if points < 3 or points % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of points >= 3")
    w = np.ones(points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * dx / 3.0


def _tail_integrals(w, E, c, dx):
    """T_i = int_{u_i}^{u_end} w(u) exp(-c (E(u) - E(u_i))) du on a uniform grid.

    Two-panel Simpson steps chained from the right with a decay factor, so every
    exponent is <= 0. The first panel of odd-offset chains uses the 3-point
    one-panel rule.
    """
    G = len(w)
    T = np.zeros(G)
    if G < 3:
        raise ValueError("need at least 3 grid points")
    i = np.arange(G - 2)
    d1 = np.exp(-c * (E[i + 1] - E[i]))
    d2 = np.exp(-c * (E[i + 2] - E[i]))
    simp = dx / 3.0 * (w[i] + 4.0 * w[i + 1] * d1 + w[i + 2] * d2)
    j = G - 2
    T[j] = dx / 12.0 * (-w[j - 1] * math.exp(-c * (E[j - 1] - E[j])) + 8.0 * w[j]
                        + 5.0 * w[j + 1] * math.exp(-c * (E[j + 1] - E[j])))
    Tl = T.tolist()
    sl, dl = simp.tolist(), d2.tolist()
    for k in range(G - 3, -1, -1):
        Tl[k] = sl[k] + dl[k] * Tl[k + 2]
    return np.asarray(Tl)


def moment_pure(req: MomentRequest):
    """E[z^m] of the limit field, z = x - i y, as a nested simplex integral.

    m! int_{0<u_1<...<u_m<l} prod_k a(u_k) exp{-((m-k+1)^2/2) int_{u_{k-1}}^{u_k} eta~^2} du,
    evaluated level by level from the innermost variable outwards.
    """
    m, l, t, cfg = req.m, req.l, req.t, req.config
    if m == 0:
        return 1.0
    if l == 0:
        return 0.0
    G = req.points if req.points % 2 else req.points + 1
    u = np.linspace(0.0, l, G)
    dx = u[1] - u[0]
    a = cfg.a(u)
    E = cumulative_eta_sq(cfg, u, t)
    h = np.ones(G)
    for k in range(m, 0, -1):
        c = 0.5 * (m - k + 1) ** 2
        h = _tail_integrals(a * h, E, c, dx)
    return math.factorial(m) * float(h[0])


def mean_square_length(l, t, config, points=801):
    """E[x^2 + y^2] of the limit field at (l, t) by 2-D composite Simpson.

    int_0^l int_0^l a(u) a(v) exp{-|E(u) - E(v)| / 2} du dv.
    """
    if l > config.L * (1 + 1e-12) or l < 0:
        raise ValueError("l must lie in [0, L]")
    if l == 0:
        return 0.0
    u = np.linspace(0.0, l, points)
    w = simpson_weights(points, u[1] - u[0]) * config.a(u)
    E = cumulative_eta_sq(config, u, t)
    K = np.exp(-0.5 * np.abs(E[:, None] - E[None, :]))
    return float(w @ K @ w)

