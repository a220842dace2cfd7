"""Discrete chain fields: the double-stochastic original field, the hat field
with deterministic angle intensity, and Feller's fixed-angle chain.

Each ``*_block`` function simulates a batch of trajectories at once; the
public ``simulate_*`` functions are single-trajectory views of the same code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NumericalError, eta_tilde_sq
from .rng import Component, normals, raw_words


@dataclass
class FieldSample:
    t: float
    n: int
    phi: np.ndarray
    x: np.ndarray
    y: np.ndarray
    seed: int
    trajectory: int

    @property
    def endpoint(self):
        return float(self.x[-1]), float(self.y[-1])


def segment_lengths(config):
    """a(l_s) * delta for s = 1..n."""
    return config.a(config.sites()) * config.delta


def _check_finite(arr, what):
    bad = ~np.isfinite(arr)
    if bad.any():
        site = int(np.argwhere(bad)[0][-1]) + 1
        raise NumericalError(f"non-finite {what}", where=f"site {site}")


def original_phases(config, t, trajectories):
    """phi_s = sum_{k<=s} eta(l_k; t) dw(l_k), with eta a left-point Ito sum.

    Per site k an independent Wiener path w_k is drawn on a uniform grid of
    ``time_steps`` intervals of [0, t]; eta(l_k; t) = sum_j sigma(l_k, tau_j)
    (w_k(tau_{j+1}) - w_k(tau_j)).
    """
    n, steps, seed = config.n, config.time_steps, config.seed
    l = config.sites()
    dtau = t / steps
    tau = np.arange(steps) * dtau
    weights = config.sigma.g(tau) * np.sqrt(dtau)
    f = config.sigma.f(l)
    eta = np.empty((len(trajectories), n))
    for i, tr in enumerate(trajectories):
        z = config.rng.stream(tr, Component.TIME).standard_normal((n, steps))
        eta[i] = f * (z @ weights)
    dw = normals(seed, trajectories, Component.SPACE, (n,)) * np.sqrt(config.delta)
    phi = np.cumsum(eta * dw, axis=1)
    _check_finite(phi, "angle")
    return phi


def hat_phases(config, t, trajectories):
    """phi_s = sum_{j<=s} dw(l_j) * sqrt(eta_tilde_sq(l_j, t))."""
    scale = np.sqrt(eta_tilde_sq(config, config.sites(), t))
    dw = normals(config.seed, trajectories, Component.HAT, (config.n,)) * np.sqrt(config.delta)
    phi = np.cumsum(dw * scale, axis=1)
    _check_finite(phi, "angle")
    return phi


def chain_sums(config, phi):
    step = segment_lengths(config)
    x = np.cumsum(step * np.cos(phi), axis=-1)
    y = np.cumsum(step * np.sin(phi), axis=-1)
    return x, y


def _block(phases, config, t, trajectories, full):
    trajectories = np.atleast_1d(trajectories)
    phi = phases(config, t, trajectories)
    x, y = chain_sums(config, phi)
    ends = np.stack([x[:, -1], y[:, -1]], axis=1)
    return (phi, x, y) if full else (phi, ends)


def original_block(config, t, trajectories, full=False):
    return _block(original_phases, config, t, trajectories, full)


def hat_block(config, t, trajectories, full=False):
    return _block(hat_phases, config, t, trajectories, full)


def _sample(block, config, t, trajectory):
    phi, x, y = block(config, t, [trajectory], full=True)
    return FieldSample(t=t, n=config.n, phi=phi[0], x=x[0], y=y[0],
                       seed=config.seed, trajectory=int(trajectory))


def simulate_field_original(config, t, trajectory):
    return _sample(original_block, config, t, trajectory)


def simulate_field_hat(config, t, trajectory):
    return _sample(hat_block, config, t, trajectory)


def feller_block(n, alpha, trajectories, seed):
    """Squared end-to-end length of unit-step chains turning by +-alpha.

    Turn k takes its sign from bit k of the trajectory's FELLER word stream.
    """
    trajectories = np.atleast_1d(trajectories)
    turns = np.zeros((len(trajectories), n))
    if n > 1:
        words = raw_words(seed, trajectories, Component.FELLER, -(-(n - 1) // 64))
        bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")[:, :n - 1]
        turns[:, 1:] = (2.0 * bits - 1.0) * alpha
    heading = np.cumsum(turns, axis=1)
    cx = np.cos(heading).sum(axis=1)
    cy = np.sin(heading).sum(axis=1)
    return cx * cx + cy * cy


def simulate_feller_chain(n, alpha, trajectory, seed=0):
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= alpha <= np.pi:
        raise ValueError("alpha must lie in [0, pi]")
    return float(feller_block(n, alpha, [trajectory], seed)[0])
