"""Annotation workflow and score-threshold filtering.

Five one-point criteria per sample; annotators work in two groups and the
group mean is the sample's human score. A neural-scorer service supplies
scores at scale; samples scoring below 2 are dropped. The store is a single
sqlite file: concurrent readers, serialized writers, safe across processes.
"""

from __future__ import annotations

import shutil
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import NoAnnotations, NotFound, ProtocolError, ScoreUnavailable, Unregistered

CRITERIA_KEYS = (
    "layout_normal",
    "styling_normal",
    "no_excess_blank",
    "rich_color",
    "aesthetic",
)

KEEP_THRESHOLD = 2.0
TEST_CANDIDATE_THRESHOLD = 4.0


@dataclass
class Annotation:
    sample_id: str
    annotator_id: str
    group_id: int
    criteria: dict[str, bool]
    score: int = 0
    annotated_at: float = 0.0

    def __post_init__(self) -> None:
        self.criteria = {k: bool(self.criteria.get(k, False)) for k in CRITERIA_KEYS}
        self.score = sum(self.criteria.values())

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "annotator_id": self.annotator_id,
            "group_id": self.group_id,
            "criteria": self.criteria,
            "score": self.score,
            "annotated_at": self.annotated_at,
        }


@dataclass
class ConsensusScore:
    sample_id: str
    group_id: int
    mean_score: float
    annotator_count: int


@dataclass
class ScoreVerdict:
    sample_id: str
    score: float
    source: str  # human | model
    keep: bool = field(init=False)

    def __post_init__(self) -> None:
        self.keep = self.score >= KEEP_THRESHOLD

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "score": self.score,
            "source": self.source,
            "keep": self.keep,
        }


_SCHEMA = """
CREATE TABLE IF NOT EXISTS annotators (
    annotator_id TEXT PRIMARY KEY,
    group_id INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS samples (
    sample_id TEXT PRIMARY KEY,
    screenshot_path TEXT
);
CREATE TABLE IF NOT EXISTS annotations (
    sample_id TEXT NOT NULL,
    annotator_id TEXT NOT NULL,
    group_id INTEGER NOT NULL,
    criteria TEXT NOT NULL,
    score INTEGER NOT NULL,
    annotated_at REAL NOT NULL,
    PRIMARY KEY (sample_id, annotator_id)
);
CREATE TABLE IF NOT EXISTS reviews (
    sample_id TEXT PRIMARY KEY,
    keep INTEGER NOT NULL,
    decided_at REAL NOT NULL
);
"""


class AnnotationStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._lock = threading.Lock()
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.commit()
            self._conn.close()

    # -- annotators ---------------------------------------------------------

    def register_annotator(self, annotator_id: str, group_id: Optional[int] = None) -> int:
        """Idempotent; new annotators without a group are split round-robin."""
        with self._lock:
            row = self._conn.execute(
                "SELECT group_id FROM annotators WHERE annotator_id=?", (annotator_id,)
            ).fetchone()
            if row is not None:
                return int(row[0])
            if group_id is None:
                count = self._conn.execute("SELECT COUNT(*) FROM annotators").fetchone()[0]
                group_id = count % 2 + 1
            self._conn.execute(
                "INSERT INTO annotators (annotator_id, group_id) VALUES (?, ?)",
                (annotator_id, int(group_id)),
            )
            self._conn.commit()
            return int(group_id)

    def group_of(self, annotator_id: str) -> Optional[int]:
        row = self._conn.execute(
            "SELECT group_id FROM annotators WHERE annotator_id=?", (annotator_id,)
        ).fetchone()
        return int(row[0]) if row else None

    # -- samples --------------------------------------------------------------

    def add_sample(self, sample_id: str, screenshot_path: Optional[str] = None) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO samples (sample_id, screenshot_path) VALUES (?, ?)",
                (sample_id, screenshot_path),
            )
            self._conn.commit()

    def sample_screenshot(self, sample_id: str) -> Optional[str]:
        row = self._conn.execute(
            "SELECT screenshot_path FROM samples WHERE sample_id=?", (sample_id,)
        ).fetchone()
        if row is None:
            raise NotFound(f"unknown sample: {sample_id}")
        return row[0]

    def sample_count(self) -> int:
        return int(self._conn.execute("SELECT COUNT(*) FROM samples").fetchone()[0])

    # -- annotations -----------------------------------------------------------

    def record(self, annotation: Annotation, replace: bool = True) -> Annotation:
        """Upsert keyed by (sample, annotator); score recomputed, never trusted."""
        import json as _json

        sample = self._conn.execute(
            "SELECT 1 FROM samples WHERE sample_id=?", (annotation.sample_id,)
        ).fetchone()
        if sample is None:
            raise NotFound(f"unknown sample: {annotation.sample_id}")
        group = self.group_of(annotation.annotator_id)
        if group is None:
            raise Unregistered(f"annotator not in any group: {annotation.annotator_id}")
        annotation.group_id = group
        if annotation.annotated_at == 0.0:
            annotation.annotated_at = time.time()
        with self._lock:
            if not replace:
                existing = self._conn.execute(
                    "SELECT 1 FROM annotations WHERE sample_id=? AND annotator_id=?",
                    (annotation.sample_id, annotation.annotator_id),
                ).fetchone()
                if existing is not None:
                    raise FileExistsError("already annotated")
            self._conn.execute(
                "INSERT OR REPLACE INTO annotations "
                "(sample_id, annotator_id, group_id, criteria, score, annotated_at) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (
                    annotation.sample_id,
                    annotation.annotator_id,
                    group,
                    _json.dumps(annotation.criteria, sort_keys=True),
                    annotation.score,
                    annotation.annotated_at,
                ),
            )
            self._conn.commit()
        return annotation

    def record_many(self, annotations: list[Annotation]) -> int:
        """Bulk upsert in one transaction (imports, synthetic stores)."""
        import json as _json

        groups = {
            row[0]: int(row[1])
            for row in self._conn.execute("SELECT annotator_id, group_id FROM annotators")
        }
        rows = []
        for annotation in annotations:
            group = groups.get(annotation.annotator_id)
            if group is None:
                raise Unregistered(f"annotator not in any group: {annotation.annotator_id}")
            rows.append(
                (
                    annotation.sample_id,
                    annotation.annotator_id,
                    group,
                    _json.dumps(annotation.criteria, sort_keys=True),
                    annotation.score,
                    annotation.annotated_at or time.time(),
                )
            )
        with self._lock:
            self._conn.executemany(
                "INSERT OR REPLACE INTO annotations "
                "(sample_id, annotator_id, group_id, criteria, score, annotated_at) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                rows,
            )
            self._conn.commit()
        return len(rows)

    def add_samples(self, sample_ids: list[str]) -> None:
        with self._lock:
            self._conn.executemany(
                "INSERT OR REPLACE INTO samples (sample_id, screenshot_path) VALUES (?, NULL)",
                [(s,) for s in sample_ids],
            )
            self._conn.commit()

    def get(self, sample_id: str, annotator_id: str) -> Optional[Annotation]:
        import json as _json

        row = self._conn.execute(
            "SELECT group_id, criteria, annotated_at FROM annotations "
            "WHERE sample_id=? AND annotator_id=?",
            (sample_id, annotator_id),
        ).fetchone()
        if row is None:
            return None
        return Annotation(sample_id, annotator_id, int(row[0]), _json.loads(row[1]), annotated_at=row[2])

    def annotation_count(self) -> int:
        return int(self._conn.execute("SELECT COUNT(*) FROM annotations").fetchone()[0])

    def next_task(self, annotator_id: str) -> Optional[str]:
        """First sample (by id) this annotator has not annotated yet."""
        if self.group_of(annotator_id) is None:
            raise Unregistered(f"annotator not in any group: {annotator_id}")
        row = self._conn.execute(
            "SELECT s.sample_id FROM samples s WHERE NOT EXISTS ("
            " SELECT 1 FROM annotations a WHERE a.sample_id=s.sample_id AND a.annotator_id=?)"
            " ORDER BY s.sample_id LIMIT 1",
            (annotator_id,),
        ).fetchone()
        return row[0] if row else None

    def progress(self, annotator_id: str) -> tuple[int, int]:
        done = self._conn.execute(
            "SELECT COUNT(*) FROM annotations WHERE annotator_id=?", (annotator_id,)
        ).fetchone()[0]
        return int(done), self.sample_count()

    # -- consensus ---------------------------------------------------------------

    def consensus(self, sample_id: str, group_id: Optional[int] = None) -> ConsensusScore:
        """Group mean for the sample. With group unspecified, the group that
        annotated the sample is used (lowest id when both did)."""
        if group_id is None:
            row = self._conn.execute(
                "SELECT group_id FROM annotations WHERE sample_id=? ORDER BY group_id LIMIT 1",
                (sample_id,),
            ).fetchone()
            if row is None:
                raise NoAnnotations(f"no annotations for sample {sample_id}")
            group_id = int(row[0])
        rows = self._conn.execute(
            "SELECT score FROM annotations WHERE sample_id=? AND group_id=?",
            (sample_id, group_id),
        ).fetchall()
        if not rows:
            raise NoAnnotations(f"no annotations for sample {sample_id} in group {group_id}")
        scores = [int(r[0]) for r in rows]
        return ConsensusScore(sample_id, group_id, sum(scores) / len(scores), len(scores))

    def all_consensus(self) -> list[ConsensusScore]:
        rows = self._conn.execute(
            "SELECT sample_id, group_id, AVG(score), COUNT(*) FROM annotations "
            "GROUP BY sample_id, group_id ORDER BY sample_id, group_id"
        ).fetchall()
        out: list[ConsensusScore] = []
        seen: set[str] = set()
        for sample_id, group_id, mean, count in rows:
            if sample_id in seen:
                continue  # lowest group id wins, matching consensus()
            seen.add(sample_id)
            out.append(ConsensusScore(sample_id, int(group_id), float(mean), int(count)))
        return out

    # -- review queue ---------------------------------------------------------

    def record_review(self, sample_id: str, keep: bool) -> None:
        if self._conn.execute("SELECT 1 FROM samples WHERE sample_id=?", (sample_id,)).fetchone() is None:
            raise NotFound(f"unknown sample: {sample_id}")
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO reviews (sample_id, keep, decided_at) VALUES (?, ?, ?)",
                (sample_id, int(keep), time.time()),
            )
            self._conn.commit()

    def rejected_samples(self) -> set[str]:
        rows = self._conn.execute("SELECT sample_id FROM reviews WHERE keep=0").fetchall()
        return {r[0] for r in rows}

    def review_decisions(self) -> dict[str, bool]:
        rows = self._conn.execute("SELECT sample_id, keep FROM reviews").fetchall()
        return {r[0]: bool(r[1]) for r in rows}


# -- scoring -------------------------------------------------------------------


def score_with_model(artifact, client) -> ScoreVerdict:
    """Run the scorer service on a rendered sample; parks on unavailability."""
    if not artifact.render_ok or artifact.screenshot is None:
        raise ValueError(f"sample {artifact.id} was not rendered")
    value = client.score(artifact.screenshot)
    if not (0.0 <= value <= 5.0):
        raise ProtocolError(f"score {value} outside [0, 5]")
    return ScoreVerdict(sample_id=artifact.id, score=float(value), source="model")


def human_or_model_verdict(
    sample_id: str, store: Optional[AnnotationStore], model_score: Optional[float]
) -> Optional[ScoreVerdict]:
    """Human consensus overrides the model score when both exist."""
    if store is not None:
        try:
            consensus = store.consensus(sample_id)
            return ScoreVerdict(sample_id=sample_id, score=consensus.mean_score, source="human")
        except NoAnnotations:
            pass
    if model_score is not None:
        return ScoreVerdict(sample_id=sample_id, score=model_score, source="model")
    return None


# -- reporting -------------------------------------------------------------------


@dataclass
class ConsistencyReport:
    annotator_histograms: dict[str, list[int]]  # 6 bins, scores 0..5
    annotator_groups: dict[str, int]
    group_consensus: dict[int, list[float]]
    group_stats: dict[int, dict[str, float]]

    def to_json(self) -> dict:
        return {
            "annotators": {
                a: {"group": self.annotator_groups[a], "histogram": h}
                for a, h in self.annotator_histograms.items()
            },
            "groups": {
                str(g): {
                    "consensus_means": self.group_consensus[g],
                    **self.group_stats[g],
                }
                for g in sorted(self.group_consensus)
            },
        }


def consistency_report(store: AnnotationStore) -> ConsistencyReport:
    rows = store._conn.execute(
        "SELECT annotator_id, group_id, score FROM annotations ORDER BY annotator_id"
    ).fetchall()
    histograms: dict[str, list[int]] = {}
    groups: dict[str, int] = {}
    for annotator_id, group_id, score in rows:
        histograms.setdefault(annotator_id, [0] * 6)[int(score)] += 1
        groups[annotator_id] = int(group_id)
    group_consensus: dict[int, list[float]] = {}
    for consensus in store.all_consensus():
        group_consensus.setdefault(consensus.group_id, []).append(consensus.mean_score)
    group_stats: dict[int, dict[str, float]] = {}
    for group_id, means in group_consensus.items():
        n = len(means)
        mean = sum(means) / n
        variance = sum((m - mean) ** 2 for m in means) / n
        group_stats[group_id] = {"mean": mean, "variance": variance, "samples": n}
    return ConsistencyReport(histograms, groups, group_consensus, group_stats)


def export_training_set(
    store: AnnotationStore, out_dir: str | Path, round_digits: Optional[int] = None
) -> tuple[int, int]:
    """Write (screenshot, consensus score) pairs; returns (written, skipped)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[tuple[str, float]] = []
    skipped = 0
    for consensus in store.all_consensus():
        try:
            src = store.sample_screenshot(consensus.sample_id)
        except NotFound:
            src = None
        if src is None or not Path(src).is_file():
            skipped += 1
            continue
        score = consensus.mean_score if round_digits is None else round(consensus.mean_score, round_digits)
        shutil.copyfile(src, out / f"{consensus.sample_id}.png")
        rows.append((consensus.sample_id, score))
    rows.sort()
    with open(out / "labels.csv", "w", encoding="utf-8") as fh:
        fh.write("sample_id,score\n")
        for sample_id, score in rows:
            fh.write(f"{sample_id},{score}\n")
    return len(rows), skipped
