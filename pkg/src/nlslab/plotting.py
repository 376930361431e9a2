"""SVG figures for the CLI report path."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.6),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "nlslab",
    "svg.fonttype": "none",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def line_plot(path, t, curves: dict, xlabel="t", ylabel="", logx=False, title=None):
    """One or more named curves sharing a time axis."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, y in curves.items():
            ax.plot(t, np.real(y), label=label)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(curves) > 1:
            ax.legend(frameon=False)
        _save(fig, path)


def bar_plot(path, labels, heights, ylabel=""):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(range(len(heights)), heights)
        ax.set_xticks(range(len(heights)), labels)
        ax.set_ylabel(ylabel)
        _save(fig, path)


def spectrum_plot(path, values, ylabel="log10 |lambda|"):
    """Eigenvalue magnitudes on a log scale, in canonical order."""
    mags = np.log10(np.maximum(np.abs(values), 1e-300))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(np.arange(1, len(mags) + 1), mags, "o")
        ax.set_xlabel("index")
        ax.set_ylabel(ylabel)
        _save(fig, path)
