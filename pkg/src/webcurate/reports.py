"""Figure rendering for the reporting paths.

Every report-producing command writes figures next to its CSV/JSON output:
corpus statistics (length density, per-split comparisons), annotation
consistency (per-annotator histograms, group consensus), safety threshold
sweeps (retention curves), and benchmark metric distributions.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DPI = 150


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def corpus_figures(entries, stats_rows, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    written: list[Path] = []
    kept = [e for e in entries if e.split != "excluded"]

    lengths = [e.token_len for e in kept]
    if lengths:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        ax.hist(lengths, bins=min(40, max(10, len(set(lengths)) // 2)), color="#4878a8", edgecolor="white")
        for threshold in (2048, 4096):
            ax.axvline(threshold, color="#a84848", linestyle="--", linewidth=1)
        ax.set_xlabel("token length")
        ax.set_ylabel("entries")
        ax.set_title("Corpus length density")
        written.append(_save(fig, out / "length_density.png"))

    named = {r.split: r for r in stats_rows if r.count > 0 and r.split != "all"}
    if named:
        metrics = ("token_len", "tag_count", "unique_tag_count", "dom_depth")
        labels = {"token_len": "tokens", "tag_count": "tags", "unique_tag_count": "unique tags", "dom_depth": "depth"}
        fig, axes = plt.subplots(1, len(metrics), figsize=(3.2 * len(metrics), 3.0))
        splits = list(named)
        for ax, metric in zip(axes, metrics):
            means = [named[s].stats[metric][0] for s in splits]
            stds = [named[s].stats[metric][1] for s in splits]
            ax.bar(range(len(splits)), means, yerr=stds, capsize=3, color="#6a9f58")
            ax.set_xticks(range(len(splits)))
            ax.set_xticklabels(splits, rotation=30)
            ax.set_title(labels[metric])
        fig.suptitle("Per-split statistics (mean ± std)")
        written.append(_save(fig, out / "split_stats.png"))
    return written


def consistency_figures(report, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    written: list[Path] = []
    histograms = report.annotator_histograms
    if histograms:
        count = len(histograms)
        cols = min(count, 3)
        rows = math.ceil(count / cols)
        fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.6 * rows), squeeze=False)
        for index, (annotator, histogram) in enumerate(sorted(histograms.items())):
            ax = axes[index // cols][index % cols]
            ax.bar(range(6), histogram, color="#4878a8")
            ax.set_xticks(range(6))
            ax.set_title(f"{annotator} (group {report.annotator_groups[annotator]})", fontsize=9)
        for index in range(count, rows * cols):
            axes[index // cols][index % cols].axis("off")
        fig.suptitle("Score distributions per annotator")
        written.append(_save(fig, out / "annotator_histograms.png"))
    if report.group_consensus:
        fig, ax = plt.subplots(figsize=(5, 3))
        for group_id, means in sorted(report.group_consensus.items()):
            ax.hist(means, bins=11, range=(0, 5.5), alpha=0.6, label=f"group {group_id}")
        ax.set_xlabel("consensus mean score")
        ax.set_ylabel("samples")
        ax.legend()
        ax.set_title("Consensus score distribution")
        written.append(_save(fig, out / "group_consensus.png"))
    return written


def sweep_figures(rows, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    if not rows:
        return []
    thresholds = [r.threshold for r in rows]
    image_retention = [100.0 * r.retained_after_image_gate / r.total if r.total else 0.0 for r in rows]
    joint_retention = [100.0 * r.retained_after_both / r.total if r.total else 0.0 for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(thresholds, image_retention, marker="o", label="image gate only")
    ax.plot(thresholds, joint_retention, marker="s", label="joint with word gate")
    ax.set_xlabel("threshold")
    ax.set_ylabel("retention (%)")
    ax.set_ylim(0, 105)
    ax.legend()
    ax.set_title("Safety-filter retention sweep")
    return [_save(fig, out / "threshold_sweep.png")]


def benchmark_figures(report, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    usable = [s for s in report.per_sample if not s.failed]
    written: list[Path] = []
    metrics = ("visual", "clip", "treebleu")
    values = {m: [getattr(s, m) for s in usable if getattr(s, m) is not None] for m in metrics}
    if any(values.values()):
        fig, axes = plt.subplots(1, 3, figsize=(10, 3))
        for ax, metric in zip(axes, metrics):
            if values[metric]:
                ax.hist(values[metric], bins=20, range=(0, 1), color="#4878a8")
            ax.set_title(metric)
            ax.set_xlim(0, 1)
        fig.suptitle(f"{report.model_name} on {report.split_name} (excluded: {report.excluded})")
        written.append(_save(fig, out / "metric_distributions.png"))
    if report.aggregate:
        fig, ax = plt.subplots(figsize=(4, 3))
        names = list(report.aggregate)
        means = [report.aggregate[m]["mean"] for m in names]
        stds = [report.aggregate[m]["std"] for m in names]
        ax.bar(range(len(names)), means, yerr=stds, capsize=4, color="#6a9f58")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names)
        ax.set_ylim(0, 1.05)
        ax.set_title("Aggregate (mean ± std)")
        written.append(_save(fig, out / "metric_aggregate.png"))
    return written
