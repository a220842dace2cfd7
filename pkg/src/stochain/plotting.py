"""Static SVG figures for reports. Presentation only; nothing is asserted on them."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({"font.size": 10, "axes.labelsize": 11, "svg.hashsalt": "stochain",
                     "svg.fonttype": "none", "figure.dpi": 100})


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def density_heatmap(est, path, title=None):
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.pcolormesh(est.xs, est.ys, est.rho.T, shading="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label=r"$\rho(x, y)$")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    ax.set_title(title or "chain-end density (KDE)")
    return _save(fig, path)


def cf_modulus(cf, path, title=None):
    grid = np.asarray(cf.grid)
    alphas, betas = np.unique(grid[:, 0]), np.unique(grid[:, 1])
    mod = np.full((len(alphas), len(betas)), np.nan)
    for (a, b), v in zip(cf.grid, cf.value):
        mod[np.searchsorted(alphas, a), np.searchsorted(betas, b)] = abs(v)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(mod.T, origin="lower", cmap="magma", vmin=0, vmax=1,
                   extent=(alphas[0] - .5, alphas[-1] + .5, betas[0] - .5, betas[-1] + .5))
    fig.colorbar(im, ax=ax, label=r"$|\hat g(\alpha, \beta)|$")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$\beta$")
    ax.set_title(title or "characteristic function modulus")
    return _save(fig, path)


def phase_density_plot(pd, path):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(pd.phi, pd.density, lw=1.4, label="Crank-Nicolson")
    if pd.target_variance > 0:
        g = np.exp(-0.5 * pd.phi ** 2 / pd.target_variance) / np.sqrt(2 * np.pi * pd.target_variance)
        ax.plot(pd.phi, g, "--", lw=1, label="Gaussian")
    ax.set_xlabel(r"$\Phi$")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    return _save(fig, path)


def paths_plot(paths, path):
    fig, ax = plt.subplots(figsize=(5, 5))
    for p in paths:
        ax.plot(p.x, p.y, lw=0.8)
    ax.plot([0], [0], "ko", ms=3)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    ax.set_title("chain configurations")
    return _save(fig, path)
