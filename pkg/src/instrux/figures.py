"""Matplotlib renderers for the CLI report paths.

The metrics and scoring libraries stay machine-readable; these helpers
turn their outputs into figures written next to the delimited reports.
All rendering goes through the Agg backend so output files are
deterministic for identical inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import PerformanceCurve, Saturation  # noqa: E402
from .metrics import FamilyStats  # noqa: E402
from .scoring import ScoreReport  # noqa: E402

_FIGSIZE = (8.0, 4.0)
_DPI = 120


def _bar_with_error(ax, labels, means, sds, ylabel, title):
    x = range(len(labels))
    ax.bar(x, means, yerr=sds, capsize=3, color="#4878a8", edgecolor="black", linewidth=0.4)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.margins(x=0.01)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_family_stats(stats: Sequence[FamilyStats], out_dir: Path) -> list[Path]:
    """Three charts per stats report: STS, word dissimilarity, length spread."""
    labels = [s.family_id for s in stats]
    written = []

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    _bar_with_error(ax, labels, [s.sts_mean for s in stats], [s.sts_sd for s in stats],
                    "STS score", "Semantic similarity across variants (mean and SD)")
    ax.set_ylim(0.0, 1.05)
    fig.tight_layout()
    written.append(_save(fig, out_dir / "sts_similarity.png"))

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    _bar_with_error(ax, labels, [s.dissim_mean for s in stats], [s.dissim_sd for s in stats],
                    "Normalized edit distance", "Word-level dissimilarity across variants")
    ax.set_ylim(0.0, 1.05)
    fig.tight_layout()
    written.append(_save(fig, out_dir / "word_dissimilarity.png"))

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    _bar_with_error(ax, labels, [s.length_diversity_pct for s in stats], None,
                    "Length spread (%)", "Definition length variation across variants")
    fig.tight_layout()
    written.append(_save(fig, out_dir / "length_diversity.png"))
    return written


def render_worth_curve(
    curve: PerformanceCurve,
    target: float,
    matched: float | Saturation,
    base_fraction: float,
    path: Path,
) -> Path:
    """SI performance curve with the MVI score and its interpolated fraction."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = [p.fraction for p in curve.points]
    ys = [p.score for p in curve.points]
    ax.plot(xs, ys, marker="o", color="#4878a8", label="SI performance")
    ax.axhline(target, color="#a83838", linestyle="--", linewidth=1.0, label="MVI score")
    ax.axvline(base_fraction, color="#888888", linestyle=":", linewidth=1.0, label="MVI base fraction")
    if not isinstance(matched, Saturation):
        ax.plot([matched], [target], marker="x", markersize=10, color="#a83838",
                label=f"matched fraction {matched:.4f}")
    ax.set_xlabel("instance fraction")
    ax.set_ylabel("score")
    ax.set_title("Instances needed in SI to match the MVI score")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_per_family_scores(report: ScoreReport, path: Path) -> Path:
    """Bar chart of per-family mean Rouge-L with the macro average line."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    families = sorted(report.per_family)
    values = [report.per_family[f] for f in families]
    _bar_with_error(ax, families, values, None, "Rouge-L", "Per-family mean Rouge-L")
    ax.axhline(report.macro, color="#a83838", linestyle="--", linewidth=1.0,
               label=f"macro {report.macro:.4f}")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
