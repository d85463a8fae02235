"""Stage chaining with checkpoints and a per-stage removal funnel.

Stages run in order: length-filter, cleanse, render, score-filter, safety,
dedup, partition, stats. Each stage writes a checkpoint manifest named by
its chained config hash; rerunning with the same config resumes from the
checkpoints, and changing a parameter invalidates exactly the stages at and
after it. Per-sample errors (including unavailable scoring services) park
samples rather than aborting the run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .bpe import ByteLevelBpe
from .config import PipelineConfig
from .curate import (
    DatasetEntry,
    DedupReport,
    corpus_stats,
    embedding_dedup,
    hash_dedup,
    partition,
    stats_csv,
    stats_table,
)
from .dom import code_stats
from .errors import EmptyDocument, ProtocolError, PurifyError, ScoreUnavailable
from .ingest import RawPage
from .manifest import read_jsonl, write_jsonl
from .purify import LengthGate, PurifyConfig, cleanse, length_filter
from .quality import AnnotationStore, ScoreVerdict, human_or_model_verdict
from .render import RenderConfig, render_batch
from .safety import WordLists, safety_verdict, visible_text
from .services import make_embedding_client, make_score_client


@dataclass
class StageOutcome:
    stage: str
    input_count: int
    output_count: int
    removed: int
    parked: int = 0
    resumed: bool = False

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class PipelineResult:
    dataset_path: Optional[Path]
    funnel: list[StageOutcome] = field(default_factory=list)
    parked_total: int = 0

    def conservation_holds(self) -> bool:
        for outcome in self.funnel:
            if outcome.input_count != outcome.output_count + outcome.removed:
                return False
        return True


class PipelineRunner:
    def __init__(self, cfg: PipelineConfig, out_dir: str | Path):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.checkpoints = self.out / "checkpoints"
        self.checkpoints.mkdir(exist_ok=True)
        self.hashes = cfg.stage_hashes()
        self.funnel: list[StageOutcome] = []
        self.parked = 0

    def _resolve(self, ref: str) -> Path:
        path = Path(ref)
        return path if path.is_absolute() else self.out / path

    def _checkpoint(self, stage: str) -> Path:
        return self.checkpoints / f"{stage}-{self.hashes[stage]}.jsonl"

    def _outcome_path(self, stage: str) -> Path:
        return self.checkpoints / f"{stage}-{self.hashes[stage]}.outcome.json"

    def _resume(self, stage: str) -> Optional[list[dict]]:
        path = self._checkpoint(stage)
        outcome_path = self._outcome_path(stage)
        if path.is_file() and outcome_path.is_file():
            outcome = StageOutcome(**json.loads(outcome_path.read_text(encoding="utf-8")))
            outcome.resumed = True
            self.funnel.append(outcome)
            self.parked += outcome.parked
            return list(read_jsonl(path))
        return None

    def _commit(self, stage: str, rows: list[dict], input_count: int, parked: int = 0) -> list[dict]:
        write_jsonl(self._checkpoint(stage), rows)
        outcome = StageOutcome(
            stage=stage,
            input_count=input_count,
            output_count=len(rows),
            removed=input_count - len(rows),
            parked=parked,
        )
        self._outcome_path(stage).write_text(
            json.dumps(outcome.to_json(), sort_keys=True), encoding="utf-8"
        )
        self.funnel.append(outcome)
        self.parked += parked
        return rows

    # -- stages ---------------------------------------------------------------

    def run(self, raw_manifest: str | Path) -> PipelineResult:
        rows = [dict(r) for r in read_jsonl(raw_manifest)]
        rows.sort(key=lambda r: r["id"])

        rows = self._stage_length_filter(rows)
        rows = self._stage_cleanse(rows)
        rows = self._stage_render(rows)
        rows = self._stage_score(rows)
        rows = self._stage_safety(rows)
        entries = self._stage_dedup(rows)
        entries = self._stage_partition(entries)
        dataset_path = self._write_dataset(entries)
        self._stage_stats(entries)

        result = PipelineResult(dataset_path=dataset_path, funnel=self.funnel, parked_total=self.parked)
        (self.out / "funnel.json").write_text(
            json.dumps([o.to_json() for o in self.funnel], indent=2, sort_keys=True),
            encoding="utf-8",
        )
        return result

    def _stage_length_filter(self, rows: list[dict]) -> list[dict]:
        if not self.cfg.length_filter_enabled:
            return rows
        resumed = self._resume("length_filter")
        if resumed is not None:
            return resumed
        gate = LengthGate(self.cfg.html_range, self.cfg.css_range)
        kept = []
        for row in rows:
            page = RawPage.from_json(row)
            if length_filter(page, gate).passed:
                kept.append(row)
        return self._commit("length_filter", kept, len(rows))

    def _stage_cleanse(self, rows: list[dict]) -> list[dict]:
        if not self.cfg.cleanse_enabled:
            return rows
        resumed = self._resume("cleanse")
        if resumed is not None:
            return resumed
        purify_cfg = PurifyConfig(viewport=self.cfg.purify_viewport)
        kept = []
        for row in rows:
            page = RawPage.from_json(row)
            try:
                kept.append(cleanse(page, purify_cfg).to_json())
            except PurifyError:
                continue
        return self._commit("cleanse", kept, len(rows))

    def _stage_render(self, rows: list[dict]) -> list[dict]:
        if not self.cfg.render_enabled:
            return rows
        resumed = self._resume("render")
        if resumed is not None:
            return resumed
        render_cfg = RenderConfig(
            viewport_width=self.cfg.viewport_width,
            viewport_height=self.cfg.viewport_height,
            max_height=self.cfg.max_height,
            timeout_ms=self.cfg.timeout_ms,
            backend=self.cfg.render_backend,
        )
        shots = self.out / "shots"
        layouts = self.out / "layouts"
        shots.mkdir(exist_ok=True)
        layouts.mkdir(exist_ok=True)
        pages = [(row["id"], row["html"]) for row in rows]
        artifacts = render_batch(pages, render_cfg, pool_size=self.cfg.render_pool)
        by_id = {row["id"]: row for row in rows}
        kept = []
        for artifact in artifacts:
            if not artifact.render_ok:
                continue
            shot_path = shots / f"{artifact.id}.png"
            layout_path = layouts / f"{artifact.id}.json"
            shot_path.write_bytes(artifact.screenshot)
            layout_path.write_text(
                json.dumps(artifact.layout.to_json(), sort_keys=True), encoding="utf-8"
            )
            row = dict(by_id[artifact.id])
            # Refs are relative to the output directory, keeping manifests
            # byte-identical regardless of where a run lands.
            row["screenshot_ref"] = f"shots/{artifact.id}.png"
            row["layout_ref"] = f"layouts/{artifact.id}.json"
            row["clipped"] = artifact.clipped
            kept.append(row)
        return self._commit("render", kept, len(rows))

    def _stage_score(self, rows: list[dict]) -> list[dict]:
        if not self.cfg.score_enabled:
            for row in rows:
                row.setdefault("score", 0.0)
            return rows
        resumed = self._resume("score")
        if resumed is not None:
            return resumed
        from .errors import ConfigError

        if not self.cfg.scorer_url and not self.cfg.annotation_store:
            raise ConfigError("score stage enabled but neither scorer_url nor annotation_store set")
        client = make_score_client(self.cfg.scorer_url, (0.0, 5.0)) if self.cfg.scorer_url else None
        store = AnnotationStore(self.cfg.annotation_store) if self.cfg.annotation_store else None
        kept = []
        parked_rows = []
        for row in rows:
            model_score: Optional[float] = None
            if client is not None:
                try:
                    png = self._resolve(row["screenshot_ref"]).read_bytes()
                    model_score = client.score(png)
                except (ScoreUnavailable, ProtocolError, OSError):
                    parked_rows.append(row)
                    continue
            verdict = human_or_model_verdict(row["id"], store, model_score)
            if verdict is None:
                parked_rows.append(row)
                continue
            if verdict.score >= self.cfg.score_threshold:
                row = dict(row)
                row["score"] = verdict.score
                row["score_source"] = verdict.source
                kept.append(row)
        if store is not None:
            store.close()
        if parked_rows:
            write_jsonl(self.out / "parked.jsonl", parked_rows)
        return self._commit("score", kept, len(rows), parked=len(parked_rows))

    def _stage_safety(self, rows: list[dict]) -> list[dict]:
        if not self.cfg.safety_enabled:
            return rows
        resumed = self._resume("safety")
        if resumed is not None:
            return resumed
        nsfw_client = (
            make_score_client(self.cfg.nsfw_url, (0.0, 1.0)) if self.cfg.nsfw_url else None
        )
        lists = WordLists.from_files(*self.cfg.badword_lists) if self.cfg.badword_lists else None
        kept = []
        parked_rows = []
        for row in rows:
            nsfw_score = 0.0
            if nsfw_client is not None:
                try:
                    nsfw_score = nsfw_client.score(self._resolve(row["screenshot_ref"]).read_bytes())
                except (ScoreUnavailable, ProtocolError, OSError):
                    parked_rows.append(row)
                    continue
            words = 0
            matched: list[tuple[str, int]] = []
            if lists is not None:
                words, matched = lists.count(visible_text(row["html"]))
            verdict = safety_verdict(
                row["id"],
                nsfw_score,
                words,
                matched,
                nsfw_threshold=self.cfg.nsfw_threshold,
                bad_word_cap=self.cfg.bad_word_cap,
            )
            if verdict.keep:
                row = dict(row)
                row["nsfw_score"] = nsfw_score
                row["bad_word_count"] = words
                kept.append(row)
        if parked_rows:
            write_jsonl(self.out / "parked_safety.jsonl", parked_rows)
        return self._commit("safety", kept, len(rows), parked=len(parked_rows))

    def _entry_from_row(self, row: dict, tokenizer) -> Optional[DatasetEntry]:
        html = row["html"]
        try:
            stats = code_stats(html, tokenizer)
        except EmptyDocument:
            return None
        return DatasetEntry(
            id=row["id"],
            html=html,
            screenshot_ref=row.get("screenshot_ref", ""),
            layout_ref=row.get("layout_ref", ""),
            score=float(row.get("score", 0.0)),
            token_len=stats.token_len,
            tag_count=stats.tag_count,
            unique_tag_count=stats.unique_tag_count,
            dom_depth=stats.dom_depth,
        )

    def _tokenizer(self):
        if self.cfg.bpe_dir == "bundled":
            return ByteLevelBpe.bundled()
        base = Path(self.cfg.bpe_dir)
        return ByteLevelBpe.from_files(base / "vocab.json", base / "merges.txt")

    def _stage_dedup(self, rows: list[dict]) -> list[DatasetEntry]:
        tokenizer = self._tokenizer()
        resumed = self._resume("dedup")
        if resumed is not None:
            return [DatasetEntry.from_json(r) for r in resumed]
        entries = []
        for row in rows:
            entry = self._entry_from_row(row, tokenizer)
            if entry is not None:
                entries.append(entry)
        if not self.cfg.dedup_enabled:
            return entries
        report = DedupReport()
        reader = lambda ref: self._resolve(ref).read_bytes()  # noqa: E731
        survivors = hash_dedup(entries, report, read_bytes=reader)
        embed_client = make_embedding_client(self.cfg.embedding_url)
        survivors = embedding_dedup(
            survivors, embed_client, self.cfg.embedding_threshold, report, read_bytes=reader
        )
        (self.out / "dedup_report.json").write_text(
            json.dumps(report.to_json(), sort_keys=True), encoding="utf-8"
        )
        rows_out = self._commit("dedup", [e.to_json() for e in survivors], len(rows))
        return [DatasetEntry.from_json(r) for r in rows_out]

    def _stage_partition(self, entries: list[DatasetEntry]) -> list[DatasetEntry]:
        if not self.cfg.partition_enabled:
            return entries
        resumed = self._resume("partition")
        if resumed is not None:
            return [DatasetEntry.from_json(r) for r in resumed]
        excluded: set[str] = set()
        if self.cfg.annotation_store:
            store = AnnotationStore(self.cfg.annotation_store)
            excluded = store.rejected_samples()
            store.close()
        assigned, report = partition(
            entries, per_split=self.cfg.per_split, seed=self.cfg.seed, excluded_test_ids=excluded
        )
        (self.out / "partition_report.json").write_text(
            json.dumps(report.to_json(), sort_keys=True), encoding="utf-8"
        )
        rows_out = self._commit("partition", [e.to_json() for e in assigned], len(entries))
        return [DatasetEntry.from_json(r) for r in rows_out]

    def _write_dataset(self, entries: list[DatasetEntry]) -> Path:
        path = self.out / "dataset.jsonl"
        write_jsonl(path, (e.to_json() for e in sorted(entries, key=lambda e: e.id)))
        return path

    def _stage_stats(self, entries: list[DatasetEntry]) -> None:
        if not self.cfg.stats_enabled:
            return
        if self._resume("stats") is not None:
            return
        rows = corpus_stats(entries)
        (self.out / "stats.txt").write_text(stats_table(rows) + "\n", encoding="utf-8")
        (self.out / "stats.csv").write_text(stats_csv(rows), encoding="utf-8")
        from .reports import corpus_figures

        corpus_figures(entries, rows, self.out / "figures")
        self._commit("stats", [r.to_json() for r in rows], len(rows))


def run_pipeline(cfg: PipelineConfig, raw_manifest: str | Path, out_dir: str | Path) -> PipelineResult:
    return PipelineRunner(cfg, out_dir).run(raw_manifest)
