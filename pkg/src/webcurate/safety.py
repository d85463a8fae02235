"""Ethical filtering: image-safety gate and multilingual bad-word gate.

Retention semantics are pinned to the rule constants: an image passes when
its unsafe score is strictly below the threshold (default 0.04); text passes
unless listed words occur more than 20 times. The sweep report tabulates
retention across candidate thresholds, with joint and image-only columns.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import ConfigError
from .htmlparse import RAW_TEXT, Text, parse_document

DEFAULT_NSFW_THRESHOLD = 0.04
DEFAULT_BAD_WORD_CAP = 20
MATCH_LIST_CAP = 50


@dataclass
class SafetyVerdict:
    sample_id: str
    nsfw_score: float
    bad_word_count: int
    keep: bool
    matched_words: list[tuple[str, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "nsfw_score": self.nsfw_score,
            "bad_word_count": self.bad_word_count,
            "keep": self.keep,
            "matched_words": [[w, c] for w, c in self.matched_words],
        }


def nsfw_gate(screenshot: bytes, client, threshold: float = DEFAULT_NSFW_THRESHOLD) -> tuple[float, bool]:
    """Score from the detector service; pass iff strictly below threshold."""
    score = float(client.score(screenshot))
    return score, score < threshold


def visible_text(html: str) -> str:
    """Concatenated text nodes, script/style excluded, whitespace collapsed."""
    doc = parse_document(html)
    if doc.html is None:
        return ""
    parts: list[str] = []

    def walk(el) -> None:
        if el.tag in RAW_TEXT:
            return
        for child in el.children:
            if isinstance(child, Text):
                parts.append(child.data)
            elif hasattr(child, "children"):
                walk(child)

    walk(doc.html)
    return " ".join(" ".join(parts).split())


def _has_undelimited_script(word: str) -> bool:
    """True for scripts written without spaces (CJK, kana, Thai...)."""
    for ch in word:
        code = ord(ch)
        if (
            0x2E80 <= code <= 0x9FFF  # CJK radicals .. unified ideographs
            or 0x3040 <= code <= 0x30FF  # kana
            or 0xAC00 <= code <= 0xD7AF  # hangul
            or 0x0E00 <= code <= 0x0E7F  # thai
            or 0xF900 <= code <= 0xFAFF
        ):
            return True
    return False


class WordLists:
    """Bad-word lists compiled for counting; one entry per line, # comments."""

    def __init__(self, entries: Iterable[str]):
        seen = set()
        self.boundary_patterns: list[tuple[str, re.Pattern]] = []
        self.substring_entries: list[str] = []
        for raw in entries:
            entry = unicodedata.normalize("NFC", raw.strip())
            if not entry or entry.startswith("#"):
                continue
            key = entry.lower()
            if key in seen:
                continue
            seen.add(key)
            if _has_undelimited_script(entry):
                self.substring_entries.append(key)
            else:
                pattern = re.compile(
                    r"(?<!\w)" + re.escape(key).replace(r"\ ", r"\s+") + r"(?!\w)",
                    re.IGNORECASE,
                )
                self.boundary_patterns.append((key, pattern))

    @classmethod
    def from_files(cls, *paths: str | Path) -> "WordLists":
        entries: list[str] = []
        for path in paths:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f"word list not found: {path}")
            entries.extend(path.read_text(encoding="utf-8").splitlines())
        return cls(entries)

    def count(self, text: str) -> tuple[int, list[tuple[str, int]]]:
        normalized = unicodedata.normalize("NFC", text)
        lower = normalized.lower()
        matches: list[tuple[str, int]] = []
        total = 0
        for key, pattern in self.boundary_patterns:
            n = len(pattern.findall(normalized))
            if n:
                total += n
                matches.append((key, n))
        for key in self.substring_entries:
            n = lower.count(key)
            if n:
                total += n
                matches.append((key, n))
        matches.sort(key=lambda m: (-m[1], m[0]))
        return total, matches[:MATCH_LIST_CAP]


def bad_word_count(text: str, lists: WordLists) -> tuple[int, list[tuple[str, int]]]:
    """Total occurrences across the lists with per-word multiplicities."""
    return lists.count(text)


def safety_verdict(
    sample_id: str,
    nsfw_score: float,
    bad_words: int,
    matched: Optional[list[tuple[str, int]]] = None,
    nsfw_threshold: float = DEFAULT_NSFW_THRESHOLD,
    bad_word_cap: int = DEFAULT_BAD_WORD_CAP,
) -> SafetyVerdict:
    keep = (nsfw_score < nsfw_threshold) and (bad_words <= bad_word_cap)
    return SafetyVerdict(sample_id, nsfw_score, bad_words, keep, (matched or [])[:MATCH_LIST_CAP])


@dataclass
class SweepRow:
    threshold: float
    total: int
    removed_by_image_gate: int
    retained_after_image_gate: int
    image_retention_pct: str
    retained_after_both: int
    joint_retention_pct: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _pct(numerator: int, denominator: int) -> str:
    if denominator == 0:
        return "n/a"
    return f"{100.0 * numerator / denominator:.2f}%"


def threshold_sweep(
    samples: Iterable[dict],
    thresholds: Iterable[float],
    bad_word_cap: int = DEFAULT_BAD_WORD_CAP,
) -> list[SweepRow]:
    """Retention table across thresholds; needs nsfw_score and bad_word_count
    on every sample."""
    rows: list[SweepRow] = []
    sample_list = list(samples)
    total = len(sample_list)
    for threshold in thresholds:
        kept_image = [s for s in sample_list if float(s["nsfw_score"]) < threshold]
        kept_both = [s for s in kept_image if int(s["bad_word_count"]) <= bad_word_cap]
        rows.append(
            SweepRow(
                threshold=threshold,
                total=total,
                removed_by_image_gate=total - len(kept_image),
                retained_after_image_gate=len(kept_image),
                image_retention_pct=_pct(len(kept_image), total),
                retained_after_both=len(kept_both),
                joint_retention_pct=_pct(len(kept_both), total),
            )
        )
    return rows


def sweep_table(rows: list[SweepRow]) -> str:
    """Aligned text table in the shape of the threshold-sweep report."""
    headers = [
        "Threshold",
        "Total",
        "Removed(img)",
        "Retained(img)",
        "Retention(img)",
        "Retained(both)",
        "Retention(both)",
    ]
    table = [headers]
    for row in rows:
        table.append(
            [
                f"{row.threshold:.2f}",
                str(row.total),
                str(row.removed_by_image_gate),
                str(row.retained_after_image_gate),
                row.image_retention_pct,
                str(row.retained_after_both),
                row.joint_retention_pct,
            ]
        )
    widths = [max(len(line[i]) for line in table) for i in range(len(headers))]
    lines = ["  ".join(cell.rjust(widths[i]) for i, cell in enumerate(line)) for line in table]
    return "\n".join(lines)
