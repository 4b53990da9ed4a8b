"""Static SVG figures for experiment reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_overlay(grid, target, recovered, path, title=""):
    """Target and recovered grid weights as stems."""
    fig, ax = plt.subplots(figsize=(8, 3.5))
    nz = target != 0
    ax.vlines(grid[nz], 0, target[nz], color="0.6", lw=3, label="target")
    ax.plot(grid, recovered, "r.", ms=3, label="recovered")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel("location")
    ax.set_ylabel("weight")
    ax.set_title(title)
    ax.legend(loc="upper right")
    _save(fig, path)


def plot_err_sweep(s_values, errors, path, bound=None):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(s_values, np.maximum(errors, 1e-17), "o-", ms=3)
    if bound is not None:
        ax.axhline(bound, color="r", ls="--", lw=1, label=f"bound {bound:g}")
        ax.legend()
    ax.set_xlabel("sparsity s")
    ax.set_ylabel("mean l1 error / p")
    _save(fig, path)


def plot_heatmap(deltas, ns, rates, path):
    """Success rates, white = 100%, rows indexed by degree."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = ax.imshow(np.asarray(rates).T, origin="lower", cmap="gray", vmin=0, vmax=1, aspect="auto")
    ax.set_xticks(range(len(deltas)), [f"1/{round(1 / d)}" for d in deltas])
    ax.set_yticks(range(len(ns)), [str(n) for n in ns])
    ax.set_xlabel("minimal separation")
    ax.set_ylabel("n")
    fig.colorbar(im, ax=ax, label="success rate")
    _save(fig, path)


def plot_counterexample(sigma, mu, path):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.vlines(sigma.locations, 0, sigma.weights, color="b", lw=3, label="sigma")
    ax.vlines(mu.locations, 0, mu.weights, color="r", lw=1.5, label="mu")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel("location")
    ax.legend()
    _save(fig, path)
