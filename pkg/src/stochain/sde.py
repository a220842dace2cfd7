"""Integrators for the limit system in the chain-length variable l at fixed t.

State convention: q = a cos(Phi) = dx/dl and p = a sin(Phi) = dy/dl, started
x-aligned at (x, y, p, q) = (0, 0, 0, a(0)). With eta~^2 = kappa int_0^t sigma^2,

    dq = [q a'/a - (eta~^2 / 2) q] dl - eta~ p dw
    dp = [p a'/a - (eta~^2 / 2) p] dl + eta~ q dw
    dx = q dl,  dy = p dl

Three schemes share the noise of one substream per trajectory (common random
numbers): plain Euler-Maruyama, Euler-Maruyama projected back onto the circle
p^2 + q^2 = a^2, and the exact-angle sampler that advances the Gaussian phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import NumericalError, eta_tilde_sq
from .rng import Component, normals

SCHEMES = ("euler", "projected-euler", "exact-angle")


class SdeState(NamedTuple):
    l: float
    x: float
    y: float
    p: float
    q: float
    phase: float = 0.0


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "exact-angle"
    h: float = 1e-3
    t: float = 1.0
    stride: int = 1
    base_h: float | None = None

    def __post_init__(self):
        scheme = {"exact": "exact-angle", "projected": "projected-euler"}.get(self.scheme, self.scheme)
        object.__setattr__(self, "scheme", scheme)
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class SdePath:
    l: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    q: np.ndarray
    defect: np.ndarray
    max_defect: float
    seed: int
    trajectory: int

    @property
    def endpoint(self):
        return float(self.x[-1]), float(self.y[-1])


class BlockResult(NamedTuple):
    endpoints: np.ndarray   # (B, 2)
    max_defect: np.ndarray  # (B,) largest |p^2 + q^2 - a^2| / a^2 along each path
    states: dict | None     # recorded arrays (B, R) when requested


def init_state(config, convention="consistent"):
    """Boundary state at l = 0.

    ``convention="paper"`` returns the literal published assignment
    p(0) = a(0), q(0) = 0, which starts the chain along y.
    """
    a0 = float(config.a(0.0))
    if convention == "paper":
        return SdeState(0.0, 0.0, 0.0, a0, 0.0)
    return SdeState(0.0, 0.0, 0.0, 0.0, a0)


def _steps(length, h):
    K = int(round(length / h))
    if K < 1 or abs(K * h - length) > 1e-9 * max(1.0, length):
        raise ValueError(f"step {h} does not divide the interval length {length}")
    return K


def step_euler(state, h, t, noise, config):
    """One Euler-Maruyama step; dw = sqrt(h) * noise."""
    l, x, y, p, q, ph = state
    a = config.a(l)
    dlna = config.a.derivative(l) / a
    e2 = eta_tilde_sq(config, l, t)
    dw = np.sqrt(h) * noise
    e = np.sqrt(e2)
    qn = q + (q * dlna - 0.5 * e2 * q) * h - e * p * dw
    pn = p + (p * dlna - 0.5 * e2 * p) * h + e * q * dw
    new = SdeState(l + h, x + q * h, y + p * h, pn, qn, ph)
    if not all(np.isfinite(v) for v in new):
        raise NumericalError("non-finite SDE state", where=f"l={l + h:.6g}")
    return new


def step_exact(state, h, t, noise, config):
    """Advance the phase by eta~ dw and put (q, p) back on the circle of radius a."""
    l, x, y, p, q, ph = state
    ph = ph + np.sqrt(eta_tilde_sq(config, l, t)) * np.sqrt(h) * noise
    l1 = l + h
    a1 = config.a(l1)
    q = a1 * np.cos(ph)
    p = a1 * np.sin(ph)
    new = SdeState(l1, x + q * h, y + p * h, p, q, ph)
    if not all(np.isfinite(v) for v in new):
        raise NumericalError("non-finite SDE state", where=f"l={l1:.6g}")
    return new


def brownian_increments(config, icfg, trajectories, K):
    """dw on the step grid; with base_h, drawn at base_h and summed up to h."""
    base = icfg.base_h or icfg.h
    r = int(round(icfg.h / base))
    if r < 1 or abs(r * base - icfg.h) > 1e-12 * icfg.h:
        raise ValueError("h must be an integer multiple of base_h")
    z = normals(config.seed, trajectories, Component.SDE, (K * r,))
    if r == 1:
        return z * np.sqrt(icfg.h)
    return z.reshape(len(trajectories), K, r).sum(axis=2) * np.sqrt(base)


def integrate_block(config, icfg, trajectories, l_max=None, record=False):
    trajectories = np.atleast_1d(trajectories)
    l_max = config.l_obs if l_max is None else l_max
    if l_max > config.L * (1 + 1e-12):
        raise ValueError("l_max exceeds L")
    h, t = icfg.h, icfg.t
    K = _steps(l_max, h)
    dw = brownian_increments(config, icfg, trajectories, K)
    lk = np.minimum(np.arange(K + 1) * h, config.L)
    a = config.a(lk)
    e = np.sqrt(eta_tilde_sq(config, lk, t))
    B = len(trajectories)
    if icfg.scheme == "exact-angle":
        phase = np.zeros((B, K + 1))
        np.cumsum(e[:-1] * dw, axis=1, out=phase[:, 1:])
        q = a * np.cos(phase)
        p = a * np.sin(phase)
        x = np.zeros((B, K + 1))
        y = np.zeros((B, K + 1))
        np.cumsum(q[:, 1:] * h, axis=1, out=x[:, 1:])
        np.cumsum(p[:, 1:] * h, axis=1, out=y[:, 1:])
        rel = np.abs(p * p + q * q - a * a) / (a * a)
        if not np.all(np.isfinite(x)):
            raise NumericalError("non-finite SDE state")
        states = None
        if record:
            sl = slice(None, None, icfg.stride)
            states = {"l": lk[sl], "x": x[:, sl], "y": y[:, sl], "p": p[:, sl], "q": q[:, sl],
                      "defect": (rel * a * a)[:, sl]}
        return BlockResult(np.stack([x[:, -1], y[:, -1]], axis=1), rel.max(axis=1), states)

    dlna = config.a.derivative(lk) / a
    drift = (dlna - 0.5 * e * e) * h
    project = icfg.scheme == "projected-euler"
    x = np.zeros(B)
    y = np.zeros(B)
    q = np.full(B, a[0])
    p = np.zeros(B)
    maxrel = np.zeros(B)
    rec = {k: [] for k in ("x", "y", "p", "q", "defect")} if record else None

    def keep(k):
        d = np.abs(p * p + q * q - a[k] * a[k])
        np.maximum(maxrel, d / (a[k] * a[k]), out=maxrel)
        if record and k % icfg.stride == 0:
            for name, v in (("x", x), ("y", y), ("p", p), ("q", q), ("defect", d)):
                rec[name].append(v.copy())

    keep(0)
    for k in range(K):
        edw = e[k] * dw[:, k]
        x = x + q * h
        y = y + p * h
        q, p = q + q * drift[k] - p * edw, p + p * drift[k] + q * edw
        if project:
            scale = a[k + 1] / np.sqrt(p * p + q * q)
            q = q * scale
            p = p * scale
        keep(k + 1)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(q)):
        raise NumericalError("non-finite SDE state", where=f"l<={l_max}")
    states = None
    if record:
        states = {name: np.stack(v, axis=1) for name, v in rec.items()}
        states["l"] = lk[::icfg.stride]
    return BlockResult(np.stack([x, y], axis=1), maxrel, states)


def integrate_path(config, icfg, trajectory, l_max=None):
    res = integrate_block(config, icfg, [trajectory], l_max=l_max, record=True)
    s = res.states
    return SdePath(l=s["l"], x=s["x"][0], y=s["y"][0], p=s["p"][0], q=s["q"][0],
                   defect=s["defect"][0], max_defect=float(res.max_defect[0]),
                   seed=config.seed, trajectory=int(trajectory))


def weak_error_study(config, t, hs, M, workers=1, l_max=None):
    """Euler-Maruyama weak error in E[x(l_max)] against the exact-angle sampler.

    All step sizes share one Brownian path per trajectory, drawn at min(hs)
    and aggregated, and both schemes see the same increments. Returns one
    (h, mean difference, stderr) row per step size plus successive error ratios.
    """
    from .ensemble import batch_mean_stderr, map_chunks

    base = min(hs)
    rows = []
    for h in hs:
        eul = IntegratorConfig("euler", h=h, t=t, base_h=base)
        ex = IntegratorConfig("exact-angle", h=h, t=t, base_h=base)

        def diff(tr, eul=eul, ex=ex):
            return (integrate_block(config, eul, tr, l_max).endpoints[:, 0]
                    - integrate_block(config, ex, tr, l_max).endpoints[:, 0])

        d = np.concatenate(map_chunks(diff, M, workers))
        mean, err = batch_mean_stderr(d)
        rows.append((h, float(mean), float(err)))
    ratios = [abs(rows[i][1]) / abs(rows[i + 1][1]) for i in range(len(rows) - 1)]
    return rows, ratios
