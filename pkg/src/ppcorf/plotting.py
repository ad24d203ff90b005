"""Report figures written next to the CLI's CSV/JSON outputs."""

import io
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ppcorf._io import atomic_write  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "figure.dpi": 100,
}


def _save(fig, path):
    buf = io.BytesIO()
    fig.savefig(buf, format="png", bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    with atomic_write(path) as fh:
        fh.write(buf.getvalue())


def noise_sweep_figure(curves: dict, path) -> None:
    """Mean feature stability against corrupted-pixel percentage, one line per noise std."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        for sigma_noise, pts in curves.items():
            p, s = zip(*pts)
            ax.plot(100 * np.asarray(p), s, marker="o", ms=3, label=f"noise std {sigma_noise:g}")
        ax.set_xlabel("corrupted pixels (%)")
        ax.set_ylabel("feature stability (cosine)")
        ax.legend(frameon=False)
        _save(fig, path)


def tuning_figure(degrees, peaks, path) -> None:
    peaks = np.asarray(peaks, dtype=float)
    rel = peaks / peaks.max() if peaks.max() > 0 else peaks
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ax.plot(degrees, rel, marker="o", ms=3, color="k")
        ax.axvline(45, color="0.6", lw=0.8, ls="--")
        ax.set_xlabel("orientation deviation (deg)")
        ax.set_ylabel("relative peak response")
        _save(fig, path)


def panel_figure(maps: dict, path, title: str | None = None) -> None:
    """Side-by-side grayscale panels, each scaled to its own maximum."""
    n = len(maps)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, n, figsize=(2.2 * n, 2.4), squeeze=False)
        for ax, (name, m) in zip(axes[0], maps.items()):
            m = np.asarray(m, dtype=float)
            ax.imshow(m, cmap="gray", vmin=0.0, vmax=max(float(m.max()), 1e-12))
            ax.set_title(f"{name}\nmax {m.max():.3g}")
            ax.set_xticks([])
            ax.set_yticks([])
        if title:
            fig.suptitle(title)
        _save(fig, path)


def channel_grid_figure(data: np.ndarray, sigmas, path) -> None:
    c = data.shape[0]
    cols = min(c, 6)
    rows = math.ceil(c / cols)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(rows, cols, figsize=(1.6 * cols, 1.7 * rows), squeeze=False)
        for i, ax in enumerate(axes.flat):
            ax.set_xticks([])
            ax.set_yticks([])
            if i >= c:
                ax.axis("off")
                continue
            ax.imshow(data[i], cmap="magma", vmin=0.0, vmax=max(float(data[i].max()), 1e-12))
            ax.set_title(f"sigma {sigmas[i]:g}", fontsize=7)
        _save(fig, path)


def training_figure(history: list, path) -> None:
    ep = [h["epoch"] for h in history]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ax.plot(ep, [h["train_loss"] for h in history], label="train")
        ax.plot(ep, [h["val_loss"] for h in history], label="validation")
        ax.set_xlabel("epoch")
        ax.set_ylabel("cross-entropy")
        ax.legend(frameon=False)
        _save(fig, path)
