"""SVG figure emission; every figure writes its plot data as CSV alongside.

Figures carry no timestamps and use a fixed hash salt, so reruns produce
stable output files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .analysis import kde_fit  # noqa: E402
from .bandgap import BandGap  # noqa: E402
from .fem import DispersionResult, write_dispersion_csv  # noqa: E402

plt.rcParams["svg.hashsalt"] = "phonon-uq"

_SAVE_OPTS = {"format": "svg", "metadata": {"Date": None}}


def _data_csv_path(svg_path) -> Path:
    svg_path = Path(svg_path)
    return svg_path.with_name(svg_path.stem + "_data.csv")


def band_diagram(result: DispersionResult, gaps: list[BandGap], svg_path) -> None:
    """Dispersion bands over path arclength with shaded gaps."""
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for b in range(result.n_bands):
        ax.plot(result.arclength, result.frequencies[:, b], color="tab:blue", lw=1.0)
    for gap in gaps:
        ax.axhspan(gap.bottom, gap.top, color="tab:orange", alpha=0.3, lw=0)
    ax.set_xlabel("k-path arclength (1/m)")
    ax.set_ylabel("frequency (Hz)")
    ax.set_xlim(result.arclength[0], result.arclength[-1])
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(svg_path, **_SAVE_OPTS)
    plt.close(fig)
    write_dispersion_csv(result, _data_csv_path(svg_path))


def kde_overlay(
    reference: np.ndarray,
    surrogate_samples: np.ndarray,
    label: str,
    svg_path,
    bins: int = 40,
) -> None:
    """Reference histogram (density) with the surrogate-sample KDE curve."""
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    kde = kde_fit(surrogate_samples)
    grid, density = kde.grid()
    fig, ax = plt.subplots(figsize=(5, 3.75))
    counts, edges, _ = ax.hist(
        reference, bins=bins, density=True, color="tab:gray", alpha=0.6, label="ground truth"
    )
    ax.plot(grid, density, color="tab:red", lw=1.5, label="surrogate KDE")
    ax.set_xlabel(label)
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(svg_path, **_SAVE_OPTS)
    plt.close(fig)
    with _data_csv_path(svg_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "x", "value"])
        for x, v in zip(grid, density):
            writer.writerow(["kde", repr(float(x)), repr(float(v))])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            writer.writerow(["hist", repr(float((lo + hi) / 2)), repr(float(c))])


def hist2d_quartet(
    reference_xy: np.ndarray,
    surrogate_xy: np.ndarray,
    svg_path,
    bins: int = 40,
    labels=("gap size (Hz)", "gap center (Hz)"),
) -> None:
    """2x2 figure: reference and surrogate 2D histograms over shared bins,
    plus the per-output KDE overlays underneath."""
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    both = np.vstack([reference_xy, surrogate_xy])
    x_edges = np.linspace(both[:, 0].min(), both[:, 0].max(), bins + 1)
    y_edges = np.linspace(both[:, 1].min(), both[:, 1].max(), bins + 1)

    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    panels = []
    for ax, xy, title in (
        (axes[0, 0], reference_xy, "ground truth"),
        (axes[0, 1], surrogate_xy, "surrogate draws"),
    ):
        counts, _, _ = np.histogram2d(xy[:, 0], xy[:, 1], bins=(x_edges, y_edges))
        ax.pcolormesh(x_edges, y_edges, counts.T, cmap="viridis")
        ax.set_title(title)
        ax.set_xlabel(labels[0])
        ax.set_ylabel(labels[1])
        panels.append((title, counts))
    for col, (ax, label) in enumerate(zip(axes[1], labels)):
        kde = kde_fit(surrogate_xy[:, col])
        grid, density = kde.grid()
        ax.hist(reference_xy[:, col], bins=bins, density=True, color="tab:gray", alpha=0.6)
        ax.plot(grid, density, color="tab:red", lw=1.5)
        ax.set_xlabel(label)
        ax.set_ylabel("density")
    fig.tight_layout()
    fig.savefig(svg_path, **_SAVE_OPTS)
    plt.close(fig)

    with _data_csv_path(svg_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["panel", "i", "j", "x_lo", "x_hi", "y_lo", "y_hi", "count"])
        for title, counts in panels:
            for i in range(bins):
                for j in range(bins):
                    writer.writerow(
                        [
                            title, i, j,
                            repr(float(x_edges[i])), repr(float(x_edges[i + 1])),
                            repr(float(y_edges[j])), repr(float(y_edges[j + 1])),
                            repr(float(counts[i, j])),
                        ]
                    )


def line_chart(rows: list[dict], x_key: str, y_keys: list[str], svg_path, x_label=None, y_label=None) -> None:
    """Simple multi-series line chart from a list of dict rows."""
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [row[x_key] for row in rows]
    for key in y_keys:
        ax.plot(xs, [row[key] for row in rows], marker="o", label=key)
    ax.set_xlabel(x_label or x_key)
    if y_label:
        ax.set_ylabel(y_label)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(svg_path, **_SAVE_OPTS)
    plt.close(fig)
    with _data_csv_path(svg_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([x_key, *y_keys])
        for row in rows:
            writer.writerow([row[x_key], *[repr(float(row[k])) for k in y_keys]])
