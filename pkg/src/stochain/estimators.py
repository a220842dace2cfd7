"""Statistical estimators over chain-endpoint samples and the reduced
forward equation for the phase density."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .analytic import cumulative_eta_sq
from .ensemble import batch_mean_stderr

DEFAULT_AXIS = (-2.0, -1.0, 0.0, 1.0, 2.0)
Z_THRESHOLD = 4.0


class EstimatorError(ValueError):
    pass


def _samples(samples, min_count=1):
    xy = np.asarray(samples, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) == 0:
        raise EstimatorError("samples must be a non-empty (M, 2) array of endpoints")
    if len(xy) < min_count:
        raise EstimatorError(f"need at least {min_count} samples, got {len(xy)}")
    return xy


def default_grid(values=DEFAULT_AXIS):
    return [(float(a), float(b)) for a in values for b in values]


@dataclass
class CharFunctionGrid:
    grid: list
    value: np.ndarray       # complex
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    M: int

    def rows(self):
        return [(a, b, float(v.real), float(v.imag), float(sr), float(si))
                for (a, b), v, sr, si in zip(self.grid, self.value, self.stderr_re, self.stderr_im)]


def estimate_char_function(samples, grid=None, min_count=1000):
    """Empirical characteristic function E[exp{i(alpha x + beta y)}] on a grid."""
    xy = _samples(samples, min_count)
    grid = default_grid() if grid is None else [tuple(map(float, g)) for g in grid]
    ab = np.asarray(grid)
    theta = xy @ ab.T
    mc, sc = batch_mean_stderr(np.cos(theta))
    ms, ss = batch_mean_stderr(np.sin(theta))
    return CharFunctionGrid(grid=grid, value=mc + 1j * ms, stderr_re=sc, stderr_im=ss, M=len(xy))


def estimate_complex_moment(samples, m, min_count=1000):
    """Mean of (x - i y)^m with batch standard errors of its real and imaginary parts."""
    if m < 0 or m > 6:
        raise EstimatorError("moment order must lie in 0..6")
    xy = _samples(samples, min_count)
    z = (xy[:, 0] - 1j * xy[:, 1]) ** m
    mr, sr = batch_mean_stderr(z.real)
    mi, si = batch_mean_stderr(z.imag)
    return complex(mr, mi), (float(sr), float(si))


def silverman_bandwidth(v):
    v = np.asarray(v)
    sd = v.std(ddof=1) if len(v) > 1 else 0.0
    iqr = np.subtract(*np.percentile(v, [75, 25])) / 1.349
    spread = min(sd, iqr) if iqr > 0 else sd
    return 0.9 * spread * len(v) ** (-0.2)


@dataclass
class DensityEstimate:
    xs: np.ndarray
    ys: np.ndarray
    rho: np.ndarray          # (len(xs), len(ys)) KDE values
    bandwidth: tuple
    hist: np.ndarray         # raw 2-D histogram counts on cells centred at xs, ys
    mass: float

    @property
    def mode(self):
        i, j = np.unravel_index(np.argmax(self.rho), self.rho.shape)
        return float(self.xs[i]), float(self.ys[j])

    def second_moment(self):
        """int (x^2 + y^2) rho dx dy on the grid."""
        dx, dy = self.xs[1] - self.xs[0], self.ys[1] - self.ys[0]
        r2 = self.xs[:, None] ** 2 + self.ys[None, :] ** 2
        return float((r2 * self.rho).sum() * dx * dy)


def estimate_density(samples, bandwidth=None, grid=None, extent=None, points=129):
    """Gaussian product-kernel KDE of (x, y) plus a raw histogram.

    ``bandwidth`` is a scalar or an (hx, hy) pair; by default Silverman's rule
    per axis, falling back to one grid cell on an axis with no spread. The
    default grid covers [-extent, extent]^2 padded by five bandwidths.
    """
    xy = _samples(samples)
    if extent is None:
        extent = float(np.abs(xy).max())
    if bandwidth is None:
        h = [silverman_bandwidth(xy[:, 0]), silverman_bandwidth(xy[:, 1])]
    else:
        h = list(np.broadcast_to(np.asarray(bandwidth, dtype=float), (2,)))
        if not all(np.isfinite(h)) or min(h) <= 0:
            raise EstimatorError("bandwidth must be positive and finite")
    if grid is None:
        hmax = max(h) if max(h) > 0 else extent / points
        half = extent + 5 * hmax
        cell = 2 * half / (points - 1)
        h = [v if v > 0 else cell for v in h]
        half = extent + 5 * max(h)
        xs = ys = np.linspace(-half, half, points)
    else:
        xs, ys = (np.asarray(g, dtype=float) for g in grid)
        cell = min(xs[1] - xs[0], ys[1] - ys[0])
        h = [v if v > 0 else cell for v in h]
    hx, hy = h
    kx = np.exp(-0.5 * ((xs[None, :] - xy[:, :1]) / hx) ** 2) / (hx * math.sqrt(2 * math.pi))
    ky = np.exp(-0.5 * ((ys[None, :] - xy[:, 1:]) / hy) ** 2) / (hy * math.sqrt(2 * math.pi))
    rho = kx.T @ ky / len(xy)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    xe = np.concatenate([xs - dx / 2, [xs[-1] + dx / 2]])
    ye = np.concatenate([ys - dy / 2, [ys[-1] + dy / 2]])
    hist, _, _ = np.histogram2d(np.clip(xy[:, 0], xe[0], xe[-1]), np.clip(xy[:, 1], ye[0], ye[-1]),
                                bins=[xe, ye])
    return DensityEstimate(xs=xs, ys=ys, rho=rho, bandwidth=(hx, hy), hist=hist.astype(np.int64),
                           mass=float(rho.sum() * dx * dy))


@dataclass
class PhaseDensity:
    phi: np.ndarray
    density: np.ndarray
    l: float
    mass: float
    variance: float
    target_variance: float   # int_0^l eta~^2 plus the variance of the initial spike
    linf_error: float        # sup distance to N(0, target_variance)
    boundary_mass: float


def _neumann_laplacian(G, dx):
    ab = np.zeros((3, G))
    ab[0, 1:] = 1.0
    ab[2, :-1] = 1.0
    ab[1] = -2.0
    ab[1, 0] = ab[1, -1] = -1.0
    return ab / (dx * dx)


def _banded_apply(ab, v):
    out = ab[1] * v
    out[:-1] += ab[0, 1:] * v[1:]
    out[1:] += ab[2, :-1] * v[:-1]
    return out


def solve_phase_density(config, t, l_max=None, points=2048, half_width=None, steps=400,
                        startup=4):
    """Crank-Nicolson solve of d rho / dl = (eta~^2(l, t) / 2) d^2 rho / dPhi^2.

    Starts from unit mass split over the two central cells, uses zero-flux
    boundaries (mass is conserved), and damps the startup with ``startup``
    implicit-Euler half steps. The result is compared with the Gaussian of
    variance int_0^l eta~^2 plus the spike's own variance.
    """
    if startup % 2:
        raise ValueError("startup must be an even number of half steps")
    l_max = config.l_obs if l_max is None else l_max
    var_total = float(cumulative_eta_sq(config, l_max, t))
    if half_width is None:
        half_width = max(8.0 * math.sqrt(var_total), 1.0)
    phi = np.linspace(-half_width, half_width, points)
    dx = phi[1] - phi[0]
    rho = np.zeros(points)
    mid = points // 2
    if points % 2:
        rho[mid] = 1.0 / dx
        var0 = 0.0
    else:
        rho[mid - 1] = rho[mid] = 0.5 / dx
        var0 = (dx / 2) ** 2
    lap = _neumann_laplacian(points, dx)

    def advance(v, l0, dl, theta):
        # diffusion coefficient from the exact increment of int eta~^2 over the step
        D = float(cumulative_eta_sq(config, min(l0 + dl, l_max), t) - cumulative_eta_sq(config, l0, t)) / (2 * dl)
        A = lap * D
        lhs = -theta * dl * A
        lhs[1] += 1.0
        rhs = v + (1 - theta) * dl * _banded_apply(A, v)
        return solve_banded((1, 1), lhs, rhs)

    dl = l_max / steps
    l = 0.0
    if var_total > 0 and l_max > 0:
        for _ in range(startup):
            rho = advance(rho, l, dl / 2, 1.0)
            l += dl / 2
        for _ in range(steps - startup // 2):
            rho = advance(rho, l, dl, 0.5)
            l += dl
    mass = float(rho.sum() * dx)
    var = float((phi * phi * rho).sum() * dx / mass)
    edge = max(1, points // 64)
    boundary = float((rho[:edge].sum() + rho[-edge:].sum()) * dx)
    if boundary > 1e-8:
        raise EstimatorError(f"boundary mass {boundary:.3g} > 1e-8; widen the grid")
    target = var_total + var0
    if var_total > 0:
        gauss = np.exp(-0.5 * phi * phi / target) / math.sqrt(2 * math.pi * target)
        linf = float(np.abs(rho - gauss).max())
    else:
        linf = float("nan")
    return PhaseDensity(phi=phi, density=rho, l=l_max, mass=mass, variance=var,
                        target_variance=target, linf_error=linf, boundary_mass=boundary)


@dataclass
class ComparisonReport:
    grid: list
    z_re: np.ndarray
    z_im: np.ndarray
    sup_diff: float
    max_z: float
    threshold: float
    passed: bool
    note: str

    def rows(self):
        return [(a, b, float(zr), float(zi)) for (a, b), zr, zi in zip(self.grid, self.z_re, self.z_im)]


def zscore(diff, err):
    diff = np.asarray(diff, dtype=float)
    err = np.asarray(err, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(err > 0, diff / np.where(err > 0, err, 1.0),
                     np.where(diff == 0, 0.0, np.inf * np.sign(diff)))
    return z


def compare_fields(a: CharFunctionGrid, b: CharFunctionGrid, threshold=Z_THRESHOLD):
    """Pointwise z-scores between two characteristic-function estimates."""
    if len(a.grid) != len(b.grid) or any(
            not np.allclose(p, q, rtol=0, atol=1e-12) for p, q in zip(a.grid, b.grid)):
        raise EstimatorError("characteristic-function grids differ")
    d = a.value - b.value
    z_re = zscore(d.real, np.hypot(a.stderr_re, b.stderr_re))
    z_im = zscore(d.imag, np.hypot(a.stderr_im, b.stderr_im))
    max_z = float(np.max(np.abs(np.concatenate([z_re, z_im]))))
    k = 2 * len(a.grid)
    note = (f"{k} simultaneous z-tests at |z| < {threshold:g} each; the family-wise "
            f"level is not Bonferroni-corrected")
    return ComparisonReport(grid=list(a.grid), z_re=z_re, z_im=z_im,
                            sup_diff=float(np.max(np.abs(d))), max_z=max_z, threshold=threshold,
                            passed=bool(max_z < threshold), note=note)


def phase_variance_profile(config, t, ls):
    """int_0^l eta~^2 at each l (the exact phase variance)."""
    return np.asarray(cumulative_eta_sq(config, np.asarray(ls), t))

