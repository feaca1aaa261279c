"""Learning-curve figures rendered next to the CSV output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

matplotlib.rcParams["svg.hashsalt"] = "obliquetd"


def render_figures(result, out_dir) -> None:
    """One figure per metric: mean curve with a +-1 std band per learner.

    Writes <metric>.svg (self-contained vector graphics) and <metric>.png.
    """
    for col, label, fname in ((1, "RMSPBE", "rmspbe"), (3, "RMSE", "rmse")):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for lr in result.learners:
            steps = [row[0] for row in lr.aggregate]
            means = [row[col] for row in lr.aggregate]
            stds = [row[col + 1] for row in lr.aggregate]
            ax.plot(steps, means, label=lr.name, linewidth=1.5)
            lo = [m - s for m, s in zip(means, stds)]
            hi = [m + s for m, s in zip(means, stds)]
            ax.fill_between(steps, lo, hi, alpha=0.2)
        ax.set_xlabel("step")
        ax.set_ylabel(label)
        ax.set_title(f"{result.config.domain} ({result.config.sampling} sampling)")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"{fname}.svg"), metadata={"Date": None})
        fig.savefig(os.path.join(out_dir, f"{fname}.png"), dpi=150)
        plt.close(fig)
