"""Figures written next to CLI reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dataio import METRIC_COLUMNS  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

# PNG metadata is otherwise stamped with the matplotlib version only; keep it empty
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)


def metric_bars(rows, path, columns=METRIC_COLUMNS):
    """One panel per metric, one bar per image id."""
    rows = list(rows)
    cols = [c for c in columns if rows and c in rows[0].values]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, max(len(cols), 1), figsize=(2.0 * max(len(cols), 1), 2.4),
                                 squeeze=False)
        ids = [r.id for r in rows]
        x = np.arange(len(ids))
        for ax, col in zip(axes[0], cols):
            ax.bar(x, [r.values[col] for r in rows], color="0.35", width=0.6)
            ax.set_title(col)
            ax.set_xticks(x)
            ax.set_xticklabels(ids, rotation=45, ha="right")
        fig.tight_layout()
        _save(fig, path)


def schedule_curves(sched, steps, path):
    """Signal/noise coefficients across the schedule with the sampled levels marked."""
    t = np.arange(sched.T)
    alpha = np.sqrt(sched.alpha_bar)
    beta = np.sqrt(1.0 - sched.alpha_bar)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.0, 2.6))
        ax.plot(t, alpha, color="k", lw=1.2, label=r"$\alpha_t$")
        ax.plot(t, beta, color="0.5", lw=1.2, ls="--", label=r"$\beta_t$")
        marks = [now for now, _ in steps]
        ax.plot(marks, alpha[marks], "o", color="k", ms=4)
        ax.plot(marks, beta[marks], "o", color="0.5", ms=4)
        ax.set_xlabel("t")
        ax.set_ylabel("coefficient")
        ax.set_title(f"{sched.kind.value} schedule, T={sched.T}, {len(steps)} steps")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
