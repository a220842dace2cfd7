"""Ensemble execution and batch-means statistics.

Trajectories are processed in chunks of a fixed size. The chunk layout only
depends on M, never on the worker count, and results are gathered in chunk
order, so an ensemble is bitwise reproducible for any ``workers``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

CHUNK = 256


def chunk_ranges(M, start=0):
    return [np.arange(i, min(i + CHUNK, M)) + start for i in range(0, M, CHUNK)]


def map_chunks(fn, M, workers=1, start=0):
    """Apply fn to each trajectory chunk and return the list of results in order."""
    chunks = chunk_ranges(M, start)
    if workers <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def default_batches(M):
    return 100 if M >= 1000 else 20


def batch_mean_stderr(values, batches=None):
    """Mean over axis 0 and its batch-means standard error.

    Batches are contiguous in trajectory order.
    """
    values = np.asarray(values)
    M = values.shape[0]
    if M == 0:
        raise ValueError("no samples")
    B = batches or default_batches(M)
    if M < B:
        raise ValueError(f"need at least {B} samples for {B} batches")
    mean = values.mean(axis=0)
    bm = np.stack([b.mean(axis=0) for b in np.array_split(values, B)])
    stderr = bm.std(axis=0, ddof=1) / np.sqrt(B)
    return mean, stderr


@dataclass
class EnsembleStats:
    M: int
    seed: int
    mean: dict
    stderr: dict
    samples: np.ndarray | None = field(default=None, repr=False)
    batches: int = 20

    def rows(self):
        return [(k, float(self.mean[k]), float(self.stderr[k]), self.M, self.seed)
                for k in self.mean]


def stats_from_columns(columns, seed, samples=None, batches=None):
    M = len(next(iter(columns.values())))
    B = batches or default_batches(M)
    mean, err = {}, {}
    for k, v in columns.items():
        mean[k], err[k] = (float(x) for x in batch_mean_stderr(v, B))
    return EnsembleStats(M=M, seed=seed, mean=mean, stderr=err, samples=samples, batches=B)


def endpoint_columns(xy):
    x, y = xy[:, 0], xy[:, 1]
    return {"x": x, "y": y, "r2": x * x + y * y}


def ensemble_endpoints(kind, config, t, M, workers=1, **kw):
    """(M, 2) array of chain endpoints for kind in original/hat/sde-euler/sde-exact/..."""
    from . import chain, sde

    if kind == "original":
        fn = lambda tr: chain.original_block(config, t, tr)[1]
    elif kind == "hat":
        fn = lambda tr: chain.hat_block(config, t, tr)[1]
    elif kind.startswith("sde-"):
        icfg = kw.get("icfg") or sde.IntegratorConfig(scheme=kind[4:], h=config.delta, t=t)
        fn = lambda tr: sde.integrate_block(config, icfg, tr).endpoints
    else:
        raise ValueError(f"unknown simulator {kind!r}")
    return np.concatenate(map_chunks(fn, M, workers))


def run_ensemble(simulator, M, config, t=None, workers=1, keep_samples=False,
                 batches=None, **kw):
    """Run M trajectories of a simulator and summarize them.

    ``simulator`` is a name ("original", "hat", "feller", "sde-euler",
    "sde-exact", "sde-projected-euler") or one of the public simulate_*
    functions. Field simulators report x, y and r2 = x^2 + y^2; the Feller
    chain reports L2 and needs ``n`` and ``alpha`` keywords.
    """
    from . import chain

    if M < 100:
        raise ValueError("an ensemble needs M >= 100")
    names = {chain.simulate_field_original: "original", chain.simulate_field_hat: "hat",
             chain.simulate_feller_chain: "feller"}
    kind = names.get(simulator, simulator)
    if kind == "feller":
        n, alpha = kw["n"], kw["alpha"]
        parts = map_chunks(lambda tr: chain.feller_block(n, alpha, tr, config.rng.seed), M, workers)
        L2 = np.concatenate(parts)
        return stats_from_columns({"L2": L2}, config.rng.seed,
                                  samples=L2 if keep_samples else None, batches=batches)
    if t is None:
        t = config.T
    xy = ensemble_endpoints(kind, config, t, M, workers, **kw)
    return stats_from_columns(endpoint_columns(xy), config.rng.seed,
                              samples=xy if keep_samples else None, batches=batches)
