"""Report figures rendered beside the delimited outputs.

All figures go through the Agg backend and a fixed PNG metadata block, so a
rerun with the same inputs and library versions writes identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .applications import AnomalyFlag, DecayReport
from .manifold_pyramid import ManifoldPyramid
from .masks import Mask

__all__ = [
    "save_mask_stems",
    "save_detail_norms",
    "save_denoise_panels",
    "save_decay_panels",
]

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": "geopyramid"}}


def _finish(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(Path(path), **_SAVE_KWARGS)
    plt.close(fig)


def save_mask_stems(path: str | Path, masks: dict[str, Mask]) -> None:
    """Stem plots of mask coefficients against their indices."""
    fig, axes = plt.subplots(1, len(masks), figsize=(4.0 * len(masks), 3.0))
    if len(masks) == 1:
        axes = [axes]
    for ax, (label, mask) in zip(axes, masks.items()):
        ax.stem(mask.indices, mask.array, basefmt="k-")
        ax.set_title(label)
        ax.set_xlabel("index")
        ax.grid(True, alpha=0.3)
    _finish(fig, path)


def _scatter_levels(ax, pyramid: ManifoldPyramid) -> None:
    for layer in pyramid.details:
        norms = layer.norms(pyramid.manifold)
        positions = np.arange(len(norms)) / len(norms)
        ax.semilogy(
            positions, norms, ".", markersize=4, label=f"level {layer.level}"
        )
    ax.set_xlabel("position (fraction of period)")
    ax.set_ylabel("detail norm")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)


def save_detail_norms(
    path: str | Path,
    pyramid: ManifoldPyramid,
    flags: list[AnomalyFlag] | None = None,
    title: str = "detail norms by level",
) -> None:
    """Per-level detail norm scatter on a log scale, flags circled."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    _scatter_levels(ax, pyramid)
    if flags:
        sizes = {layer.level: len(layer) for layer in pyramid.details}
        xs = [f.index / sizes[f.level] for f in flags]
        ys = [f.norm for f in flags]
        ax.plot(xs, ys, "o", markersize=9, fillstyle="none", color="red", label="flag")
        ax.legend(fontsize=8)
    ax.set_title(title)
    _finish(fig, path)


def save_denoise_panels(
    path: str | Path, noisy: ManifoldPyramid, denoised: ManifoldPyramid
) -> None:
    """Noisy and denoised detail norms side by side."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10.0, 4.0), sharey=True)
    _scatter_levels(ax0, noisy)
    ax0.set_title("noisy")
    _scatter_levels(ax1, denoised)
    ax1.set_title("denoised")
    _finish(fig, path)


def save_decay_panels(path: str | Path, report: DecayReport) -> None:
    """Per-level max decay and the contraction-constant series."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    levels = np.arange(1, len(report.per_level_max) + 1)
    ax0.semilogy(levels, report.per_level_max, "o-")
    ax0.set_xlabel("level")
    ax0.set_ylabel("max detail norm")
    ax0.set_title(f"decay (fitted ratio {report.fitted_ratio:.3f})")
    ax0.grid(True, alpha=0.3)
    ax1.semilogx(report.delta_series, report.p_min_series, "o-")
    ax1.invert_xaxis()
    ax1.axhline(1.0, color="k", linewidth=0.8, alpha=0.5)
    ax1.set_xlabel("largest consecutive distance")
    ax1.set_ylabel("contraction constant")
    ax1.set_title("decimation contraction")
    ax1.grid(True, alpha=0.3)
    _finish(fig, path)
