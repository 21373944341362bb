"""Figure rendering for the CLI report path.

Each writer takes the same arrays that went into the CSV and saves a PNG
next to it. Figures are a human-readable companion to the delimited
output; the CSV remains the machine contract.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def plot_integral_grid(alphas, s_values, values, png_path) -> None:
    """I(alpha, s) versus alpha, one curve per s (log ordinate)."""
    plt = _pyplot()
    alphas = np.asarray(alphas)
    s_values = np.asarray(s_values)
    grid = np.asarray(values).reshape(alphas.size, s_values.size)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    n_curves = min(s_values.size, 7)
    picks = np.unique(np.linspace(0, s_values.size - 1, n_curves).astype(int))
    for idx in picks:
        ax.semilogy(alphas, np.clip(grid[:, idx], 1e-300, None),
                    label=f"s = {s_values[idx]:g}")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$I(\alpha, s)$")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def plot_ergotropy_series(t_gamma, columns: dict[str, np.ndarray], png_path,
                          title: str | None = None) -> None:
    """Ergotropy (and companions) against time in collision-rate units."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    ax1.plot(t_gamma, columns["ergotropy_over_hbar_omegaS"], color="tab:orange")
    ax1.set_ylabel(r"$\mathcal{W} / \hbar\omega_S$")
    ax1.grid(True, alpha=0.3)
    if title:
        ax1.set_title(title)
    ax2.plot(t_gamma, columns["E_S"], label=r"$E_S$")
    ax2.plot(t_gamma, columns["S"], label=r"$S$ (nats)")
    ax2.plot(t_gamma, columns["Q_dot"], label=r"$\dot{Q}$")
    ax2.set_xlabel(r"$t\,\tilde{\Gamma}$")
    ax2.legend(fontsize=8)
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def plot_rate_matrix(rate_array, png_path) -> None:
    """Heatmap of the transition-rate matrix (log color scale)."""
    plt = _pyplot()
    r = np.asarray(rate_array, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    masked = np.where(r > 0, r, np.nan)
    im = ax.imshow(masked, origin="lower", cmap="viridis",
                   norm=None if np.all(np.isnan(masked)) else "log")
    ax.set_xlabel("source level j")
    ax.set_ylabel("target level i")
    fig.colorbar(im, ax=ax, label="rate")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
