"""Figures for attack runs: estimate trajectories, answer histograms, cumulative runtime."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "naive": dict(color="tab:red", label="JL (naive)"),
    "robust": dict(color="tab:green", label="private median"),
    "baseline1": dict(color="tab:blue", label="baseline 1 (simplified)"),
    "baseline2": dict(color="tab:orange", label="baseline 2 (simplified)"),
}
RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _labels(records):
    present = records[0].estimates.keys() if records else ()
    return [k for k in STYLE if k in present]


def _save(fig, path):
    fig.tight_layout()
    # no timestamp in the metadata, so identical runs give identical files
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trajectory(records, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        it = np.array([r.iteration for r in records])
        for lab in _labels(records):
            ax.plot(it, [r.estimates[lab] for r in records], lw=0.8, **STYLE[lab])
        ax.plot(it, [r.truth for r in records], "k--", lw=0.8, label="truth")
        ax.set_xlabel("iteration")
        ax.set_ylabel("estimate")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_histogram(records, path, labels=("robust", "baseline1", "baseline2")):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        for lab in [lab for lab in labels if lab in _labels(records)]:
            vals = np.array([r.estimates[lab] / r.truth for r in records if r.truth > 0])
            ax.hist(vals, bins=60, alpha=0.45, **STYLE[lab])
        ax.axvline(1.0, color="k", lw=0.8, ls="--")
        ax.set_xlabel("estimate / truth")
        ax.set_ylabel("count")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_runtime(records, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        it = np.array([r.iteration for r in records])
        for lab in _labels(records):
            ax.plot(it, [r.seconds.get(lab, np.nan) for r in records], lw=1.0, **STYLE[lab])
        ax.set_xlabel("iteration")
        ax.set_ylabel("cumulative seconds")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_attack(records, outdir, prefix="attack"):
    """Write the three figures as PNG files into ``outdir``; return their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if not records:
        return []
    return [
        plot_trajectory(records, outdir / f"{prefix}_trajectory.png"),
        plot_histogram(records, outdir / f"{prefix}_histogram.png"),
        plot_runtime(records, outdir / f"{prefix}_runtime.png"),
    ]
