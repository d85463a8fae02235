"""Dataset assembly: screenshot-hash dedup, embedding-similarity dedup,
high-score test sampling, token-length partition, and corpus statistics.

Dedup is greedy first-wins in ascending id order so runs are reproducible;
partition samples each length range uniformly under a fixed seed. Statistics
report population mean and std per split in the corpus-comparison shape.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from .services import EmbeddingClient, cosine

SHORT_MAX = 2048
MID_MAX = 4096
TEST_SCORE_THRESHOLD = 4.0
DEFAULT_PER_SPLIT = 256
DEFAULT_EMBED_THRESHOLD = 0.96

SPLITS = ("train", "short", "mid", "long", "excluded")
STAT_FIELDS = ("token_len", "tag_count", "unique_tag_count", "dom_depth")


@dataclass
class DatasetEntry:
    id: str
    html: str
    screenshot_ref: str
    layout_ref: str
    score: float
    token_len: int
    tag_count: int = 0
    unique_tag_count: int = 0
    dom_depth: int = 0
    split: str = "train"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "html": self.html,
            "screenshot_ref": self.screenshot_ref,
            "layout_ref": self.layout_ref,
            "score": self.score,
            "token_len": self.token_len,
            "tag_count": self.tag_count,
            "unique_tag_count": self.unique_tag_count,
            "dom_depth": self.dom_depth,
            "split": self.split,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DatasetEntry":
        return cls(
            id=data["id"],
            html=data.get("html", ""),
            screenshot_ref=data.get("screenshot_ref", ""),
            layout_ref=data.get("layout_ref", ""),
            score=float(data.get("score", 0.0)),
            token_len=int(data.get("token_len", 0)),
            tag_count=int(data.get("tag_count", 0)),
            unique_tag_count=int(data.get("unique_tag_count", 0)),
            dom_depth=int(data.get("dom_depth", 0)),
            split=data.get("split", "train"),
        )


@dataclass
class DedupReport:
    exact_duplicates: int = 0
    near_duplicates: int = 0
    unreadable: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _default_reader(path: str) -> bytes:
    return Path(path).read_bytes()


def hash_dedup(
    entries: Iterable[DatasetEntry],
    report: Optional[DedupReport] = None,
    read_bytes: Callable[[str], bytes] = _default_reader,
) -> list[DatasetEntry]:
    """Keep the first entry (ascending id) per exact screenshot digest."""
    report = report if report is not None else DedupReport()
    survivors: list[DatasetEntry] = []
    seen: dict[str, str] = {}
    for entry in sorted(entries, key=lambda e: e.id):
        try:
            digest = hashlib.sha256(read_bytes(entry.screenshot_ref)).hexdigest()
        except OSError:
            report.unreadable += 1
            continue
        if digest in seen:
            report.exact_duplicates += 1
            continue
        seen[digest] = entry.id
        survivors.append(entry)
    return survivors


def embedding_dedup(
    entries: Iterable[DatasetEntry],
    client: EmbeddingClient,
    threshold: float = DEFAULT_EMBED_THRESHOLD,
    report: Optional[DedupReport] = None,
    read_bytes: Callable[[str], bytes] = _default_reader,
) -> list[DatasetEntry]:
    """Greedy scan in id order; drop entries whose embedding is within
    ``threshold`` cosine of any retained entry."""
    report = report if report is not None else DedupReport()
    survivors: list[DatasetEntry] = []
    kept_vectors: list[list[float]] = []
    for entry in sorted(entries, key=lambda e: e.id):
        try:
            vector = client.embed_image(read_bytes(entry.screenshot_ref))
        except OSError:
            report.unreadable += 1
            continue
        if any(cosine(vector, kept) >= threshold for kept in kept_vectors):
            report.near_duplicates += 1
            continue
        survivors.append(entry)
        kept_vectors.append(vector)
    return survivors


def length_range(token_len: int) -> str:
    if token_len <= SHORT_MAX:
        return "short"
    if token_len <= MID_MAX:
        return "mid"
    return "long"


@dataclass
class PartitionReport:
    per_split: dict[str, int] = field(default_factory=dict)
    underfull: dict[str, int] = field(default_factory=dict)  # split -> candidates found
    ranges: dict[str, tuple[int, int]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "per_split": self.per_split,
            "underfull": self.underfull,
            "ranges": {k: list(v) for k, v in self.ranges.items()},
        }


def partition(
    entries: Iterable[DatasetEntry],
    per_split: int = DEFAULT_PER_SPLIT,
    seed: int = 0,
    excluded_test_ids: Optional[set[str]] = None,
) -> tuple[list[DatasetEntry], PartitionReport]:
    """Assign splits: seeded uniform test sampling per length range among
    high-score entries; everything else trains. Review-rejected ids never
    enter a test split."""
    entry_list = sorted(entries, key=lambda e: e.id)
    report = PartitionReport()
    excluded_test_ids = excluded_test_ids or set()
    buckets: dict[str, list[DatasetEntry]] = {"short": [], "mid": [], "long": []}
    for entry in entry_list:
        if entry.split == "excluded":
            continue
        entry.split = "train"
        if entry.score > TEST_SCORE_THRESHOLD and entry.id not in excluded_test_ids:
            buckets[length_range(entry.token_len)].append(entry)
    rng = random.Random(seed)
    for split_name in ("short", "mid", "long"):
        candidates = buckets[split_name]
        if len(candidates) < per_split:
            report.underfull[split_name] = len(candidates)
            chosen = list(candidates)
        else:
            chosen = rng.sample(candidates, per_split)
        for entry in chosen:
            entry.split = split_name
    for split_name in SPLITS:
        members = [e for e in entry_list if e.split == split_name]
        report.per_split[split_name] = len(members)
        tested = [e.token_len for e in members if split_name in ("short", "mid", "long")]
        if tested:
            report.ranges[split_name] = (min(tested), max(tested))
    return entry_list, report


def mean_std(values: list[float]) -> tuple[float, float]:
    """Population statistics (the ± convention over a full corpus)."""
    n = len(values)
    if n == 0:
        return (float("nan"), float("nan"))
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(variance)


@dataclass
class SplitStats:
    split: str
    count: int
    stats: dict[str, tuple[float, float]]  # field -> (mean, std)

    def to_json(self) -> dict:
        return {
            "split": self.split,
            "count": self.count,
            **{
                f: {"mean": m, "std": s}
                for f, (m, s) in self.stats.items()
                if not math.isnan(m)
            },
        }


def corpus_stats(entries: Iterable[DatasetEntry]) -> list[SplitStats]:
    """Per-split mean±std of the four code statistics (train/test splits plus
    an 'all' row)."""
    entry_list = list(entries)
    groups: dict[str, list[DatasetEntry]] = {"all": [e for e in entry_list if e.split != "excluded"]}
    for split_name in SPLITS:
        groups[split_name] = [e for e in entry_list if e.split == split_name]
    out: list[SplitStats] = []
    for name in ("all", "train", "short", "mid", "long", "excluded"):
        members = groups[name]
        stats = {
            field_name: mean_std([float(getattr(e, field_name)) for e in members])
            for field_name in STAT_FIELDS
        }
        out.append(SplitStats(name, len(members), stats))
    return out


_LABELS = {
    "token_len": "Avg. Len (#tokens)",
    "tag_count": "Avg. Tags",
    "unique_tag_count": "Avg. Unique Tags",
    "dom_depth": "Avg. DOM Depth",
}


def stats_table(rows: list[SplitStats]) -> str:
    """Aligned text table: metric rows, split columns, mean±std cells."""
    columns = [r for r in rows if r.count > 0 or r.split == "all"]
    header = ["Metric"] + [f"{r.split} (n={r.count})" for r in columns]
    body: list[list[str]] = []
    for field_name in STAT_FIELDS:
        line = [_LABELS[field_name]]
        for r in columns:
            mean, std = r.stats[field_name]
            line.append("n/a" if math.isnan(mean) else f"{mean:.0f}±{std:.0f}")
        body.append(line)
    table = [header] + body
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in table)


def stats_csv(rows: list[SplitStats]) -> str:
    lines = ["split,count," + ",".join(f"{f}_mean,{f}_std" for f in STAT_FIELDS)]
    for r in rows:
        cells = [r.split, str(r.count)]
        for field_name in STAT_FIELDS:
            mean, std = r.stats[field_name]
            cells.append("" if math.isnan(mean) else f"{mean:.6f}")
            cells.append("" if math.isnan(std) else f"{std:.6f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
