"""Static SVG figures for sweep, ring and comparison reports.

Figures are written with text kept as ``<text>`` elements and a fixed hash
salt, so the same data always produces the same bytes.
"""

from __future__ import annotations

from contextlib import contextmanager

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.fonttype": "none",
    "svg.hashsalt": "gazecenter",
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (5.0, 3.6),
    "lines.linewidth": 1.5,
}


def fmt(x) -> str:
    """Shared number format for CSV cells and figure annotations."""
    return repr(float(x))


@contextmanager
def figure(path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            yield fig, ax
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)


def plot_sweep(result, path, label="combined"):
    """Mean NSS against beta with s.e.m. error bars."""
    with figure(path) as (fig, ax):
        ax.errorbar(result.betas, result.mean_nss, yerr=result.sem, marker="o",
                    markersize=3, capsize=2, color="k", label=label)
        ax.axvline(result.beta_opt, color="0.6", linestyle="--", linewidth=0.8)
        ax.set_xlabel(r"$\beta$")
        ax.set_ylabel("mean NSS")
        ax.set_xlim(-0.02, 1.02)
        ax.set_title(f"beta_opt = {fmt(result.beta_opt)}, n = {len(result.image_ids)}")


def plot_ring_profile(p, path, mean_sal=None):
    p = np.asarray(p, dtype=float)
    rings = np.arange(1, len(p) + 1)
    with figure(path) as (fig, ax):
        ax.plot(rings, p, marker="o", color="k", label="fixations")
        ax.set_xlabel("ring (1 = innermost)")
        ax.set_ylabel("fixation density")
        ax.set_xticks(rings)
        if mean_sal is not None and np.isfinite(mean_sal).any():
            ax2 = ax.twinx()
            ax2.plot(rings, mean_sal, marker="s", color="tab:blue", label="saliency")
            ax2.set_ylabel("mean saliency", color="tab:blue")
        ax.set_title("fixations per ring (all objects)")


def plot_index_histogram(indices, path, bins=10):
    indices = np.asarray(indices, dtype=float)
    with figure(path) as (fig, ax):
        ax.hist(indices, bins=bins, range=(0.0, 1.0), color="0.5", edgecolor="k")
        ax.axvline(0.5, color="k", linestyle="--", linewidth=0.8)
        ax.set_xlabel("object center-bias index")
        ax.set_ylabel("objects")
        above = int((indices > 0.5).sum())
        ax.set_title(f"{above} of {len(indices)} objects above 0.5")


def plot_scatter(a, b, comparison, path, label_a="A", label_b="B"):
    """Per-image NSS of model B (x) against model A (y) with the diagonal."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with figure(path) as (fig, ax):
        lo = float(min(a.min(), b.min()))
        hi = float(max(a.max(), b.max()))
        pad = 0.05 * (hi - lo or 1.0)
        ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], color="0.6", linewidth=0.8)
        ax.scatter(b, a, s=12, color="k")
        ax.set_xlabel(f"NSS {label_b}")
        ax.set_ylabel(f"NSS {label_a}")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(f"win_rate = {fmt(comparison.win_rate_a_over_b)}")


def plot_histogram(counts, edges, path, xlabel):
    counts = np.asarray(counts)
    with figure(path) as (fig, ax):
        ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color="0.5", edgecolor="k")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("count")
        ax.set_title(f"n = {int(counts.sum())}")
