"""Command-line interface: stage commands, the chained pipeline, reports,
and the annotation server.

Exit codes: 0 ok, 1 input error, 2 configuration error, 3 partial failure
(some samples parked for a later retry).
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__
from .config import PipelineConfig, load_config
from .errors import ConfigError, InputError, RenderStartupError, WebcurateError
from .manifest import read_jsonl, write_jsonl

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _resolve_ref(base: Path, ref: str) -> Path:
    path = Path(ref)
    return path if path.is_absolute() else base / path


def _rebase_refs(row: dict, src_base: Path, dst_base: Path) -> dict:
    """Relative artifact refs stay relative to the manifest holding them."""
    import os

    row = dict(row)
    for key in ("screenshot_ref", "layout_ref"):
        ref = row.get(key)
        if ref and not Path(ref).is_absolute():
            row[key] = os.path.relpath(_resolve_ref(src_base, ref), dst_base)
    return row


def stage_command(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except (ConfigError, RenderStartupError) as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except InputError as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except WebcurateError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        sys.exit(code or EXIT_OK)

    return wrapper


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Design-to-code corpus curation and evaluation toolkit."""


@main.command()
@click.option("--warc", type=click.Path(), help="WARC archive to ingest")
@click.option("--dir", "directory", type=click.Path(), help="directory of HTML files")
@click.option("--out", required=True, type=click.Path(), help="raw manifest (JSONL)")
@click.option("--limit", type=int, default=None, help="cap on ingested pages")
@stage_command
def ingest(warc, directory, out, limit) -> int:
    """Turn raw inputs into a manifest of pages with attached CSS."""
    from .ingest import IngestReport, ingest_dir, ingest_warc, sorted_pages

    if bool(warc) == bool(directory):
        raise ConfigError("pass exactly one of --warc or --dir")
    report = IngestReport()
    if warc:
        pages = ingest_warc(warc, limit=limit, report=report)
    else:
        pages = ingest_dir(directory, report=report)
        if limit is not None:
            import itertools

            pages = itertools.islice(pages, limit)
    count = write_jsonl(out, (p.to_json() for p in sorted_pages(pages)))
    click.echo(f"ingested {count} pages -> {out} (skips: {report.to_json()})")
    return EXIT_OK


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--html-range", default="640:10240", show_default=True)
@click.option("--css-range", default="640:20480", show_default=True)
@click.option("--viewport", default="1280x10000", show_default=True, help="hidden-element display range")
@click.option("--skip-length-gate", is_flag=True, default=False)
@stage_command
def purify(in_path, out, html_range, css_range, viewport, skip_length_gate) -> int:
    """Length-gate and cleanse pages; merge CSS into one style tag."""
    from .ingest import RawPage
    from .purify import LengthGate, PurifyConfig, cleanse, length_filter
    from .errors import PurifyError

    def parse_pair(raw, sep):
        lo, _, hi = raw.partition(sep)
        try:
            return (int(lo), int(hi))
        except ValueError as exc:
            raise ConfigError(f"bad range {raw!r}") from exc

    gate = LengthGate(parse_pair(html_range, ":"), parse_pair(css_range, ":"))
    cfg = PurifyConfig(viewport=parse_pair(viewport, "x"))
    kept = []
    gated = failed = 0
    for row in read_jsonl(in_path):
        page = RawPage.from_json(row)
        if not skip_length_gate and not length_filter(page, gate).passed:
            gated += 1
            continue
        try:
            kept.append(cleanse(page, cfg).to_json())
        except PurifyError:
            failed += 1
    count = write_jsonl(out, kept)
    click.echo(f"purified {count} pages -> {out} (length-gated: {gated}, unparseable: {failed})")
    return EXIT_OK


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--viewport", default=1280, show_default=True, type=int)
@click.option("--pool", default=4, show_default=True, type=int)
@click.option("--timeout-ms", default=15000, show_default=True, type=int)
@click.option("--backend", default="static", show_default=True, type=click.Choice(["static", "cdp", "auto"]))
@stage_command
def render(in_path, out_dir, viewport, pool, timeout_ms, backend) -> int:
    """Render purified pages to screenshots plus layout trees."""
    from .render import RenderConfig, render_batch

    out = Path(out_dir)
    (out / "shots").mkdir(parents=True, exist_ok=True)
    (out / "layouts").mkdir(parents=True, exist_ok=True)
    cfg = RenderConfig(viewport_width=viewport, timeout_ms=timeout_ms, backend=backend)
    rows = list(read_jsonl(in_path))
    artifacts = render_batch([(r["id"], r["html"]) for r in rows], cfg, pool_size=pool)
    by_id = {r["id"]: r for r in rows}
    manifest = []
    failed = 0
    for artifact in artifacts:
        if not artifact.render_ok:
            failed += 1
            manifest.append(
                {"id": artifact.id, "render_ok": False, "failure_reason": artifact.failure_reason}
            )
            continue
        shot = out / "shots" / f"{artifact.id}.png"
        layout = out / "layouts" / f"{artifact.id}.json"
        shot.write_bytes(artifact.screenshot)
        layout.write_text(json.dumps(artifact.layout.to_json(), sort_keys=True), encoding="utf-8")
        row = dict(by_id[artifact.id])
        row.update(
            {
                "render_ok": True,
                "screenshot_ref": f"shots/{artifact.id}.png",
                "layout_ref": f"layouts/{artifact.id}.json",
                "clipped": artifact.clipped,
            }
        )
        manifest.append(row)
    write_jsonl(out / "rendered.jsonl", manifest)
    click.echo(f"rendered {len(manifest) - failed}/{len(manifest)} pages -> {out}/rendered.jsonl")
    return EXIT_PARTIAL if failed else EXIT_OK


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--scorer-url", required=True, help="scorer service (http://... or const:X)")
@click.option("--out", required=True, type=click.Path())
@click.option("--threshold", default=2.0, show_default=True, type=float)
@click.option("--store", "store_path", type=click.Path(), help="annotation store; human consensus overrides")
@stage_command
def score(in_path, scorer_url, out, threshold, store_path) -> int:
    """Filter rendered samples through the quality scorer."""
    from .errors import ProtocolError, ScoreUnavailable
    from .quality import AnnotationStore, human_or_model_verdict
    from .services import make_score_client

    client = make_score_client(scorer_url, (0.0, 5.0))
    store = AnnotationStore(store_path) if store_path else None
    base = Path(in_path).parent
    kept, parked = [], []
    for row in read_jsonl(in_path):
        if not row.get("render_ok", True):
            continue
        try:
            model_score = client.score(_resolve_ref(base, row["screenshot_ref"]).read_bytes())
        except (ScoreUnavailable, ProtocolError, OSError):
            parked.append(row)
            continue
        verdict = human_or_model_verdict(row["id"], store, model_score)
        if verdict.score >= threshold:
            row = _rebase_refs(row, base, Path(out).parent)
            row["score"] = verdict.score
            row["score_source"] = verdict.source
            kept.append(row)
    if store is not None:
        store.close()
    write_jsonl(out, kept)
    if parked:
        write_jsonl(
            Path(out).with_suffix(".parked.jsonl"),
            (_rebase_refs(r, base, Path(out).parent) for r in parked),
        )
    click.echo(f"kept {len(kept)} scored samples -> {out} (parked: {len(parked)})")
    return EXIT_PARTIAL if parked else EXIT_OK


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--nsfw-url", default="", help="image-safety service (http://... or const:X)")
@click.option("--badwords", multiple=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--nsfw-threshold", default=0.04, show_default=True, type=float)
@click.option("--bad-word-cap", default=20, show_default=True, type=int)
@click.option("--sweep", default="", help="comma-separated thresholds for a retention report")
@click.option("--report-dir", type=click.Path(), help="where sweep CSV/figures go")
@stage_command
def safety(in_path, nsfw_url, badwords, out, nsfw_threshold, bad_word_cap, sweep, report_dir) -> int:
    """Apply the image-safety and bad-word gates."""
    from .errors import ProtocolError, ScoreUnavailable
    from .safety import WordLists, safety_verdict, sweep_table, threshold_sweep, visible_text
    from .services import make_score_client

    nsfw_client = make_score_client(nsfw_url, (0.0, 1.0)) if nsfw_url else None
    lists = WordLists.from_files(*badwords) if badwords else None
    base = Path(in_path).parent
    kept, parked, verdicts = [], [], []
    for row in read_jsonl(in_path):
        nsfw_score = 0.0
        if nsfw_client is not None:
            try:
                nsfw_score = nsfw_client.score(_resolve_ref(base, row["screenshot_ref"]).read_bytes())
            except (ScoreUnavailable, ProtocolError, OSError):
                parked.append(row)
                continue
        words, matched = lists.count(visible_text(row["html"])) if lists else (0, [])
        verdict = safety_verdict(
            row["id"], nsfw_score, words, matched,
            nsfw_threshold=nsfw_threshold, bad_word_cap=bad_word_cap,
        )
        verdicts.append({"nsfw_score": nsfw_score, "bad_word_count": words})
        if verdict.keep:
            row = _rebase_refs(row, base, Path(out).parent)
            row["nsfw_score"] = nsfw_score
            row["bad_word_count"] = words
            kept.append(row)
    write_jsonl(out, kept)
    if parked:
        write_jsonl(
            Path(out).with_suffix(".parked.jsonl"),
            (_rebase_refs(r, base, Path(out).parent) for r in parked),
        )
    if sweep:
        thresholds = [float(t) for t in sweep.split(",") if t.strip()]
        rows = threshold_sweep(verdicts, thresholds, bad_word_cap)
        target = Path(report_dir) if report_dir else Path(out).parent
        target.mkdir(parents=True, exist_ok=True)
        (target / "threshold_sweep.csv").write_text(
            "\n".join(
                ["threshold,total,removed_img,retained_img,retention_img,retained_both,retention_both"]
                + [
                    f"{r.threshold},{r.total},{r.removed_by_image_gate},{r.retained_after_image_gate},"
                    f"{r.image_retention_pct},{r.retained_after_both},{r.joint_retention_pct}"
                    for r in rows
                ]
            )
            + "\n",
            encoding="utf-8",
        )
        from .reports import sweep_figures

        sweep_figures(rows, target)
        click.echo(sweep_table(rows))
    click.echo(f"kept {len(kept)} safe samples -> {out} (parked: {len(parked)})")
    return EXIT_PARTIAL if parked else EXIT_OK


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--per-split", default=256, show_default=True, type=int)
@click.option("--seed", default=17, show_default=True, type=int)
@click.option("--emb-url", default="local:", show_default=True)
@click.option("--emb-threshold", default=0.96, show_default=True, type=float)
@click.option("--bpe-dir", default="bundled", show_default=True)
@click.option("--store", "store_path", type=click.Path(), help="annotation store with review decisions")
@stage_command
def curate(in_path, out, per_split, seed, emb_url, emb_threshold, bpe_dir, store_path) -> int:
    """De-duplicate, sample test splits, and assign partitions."""
    from .bpe import ByteLevelBpe
    from .curate import DedupReport, embedding_dedup, hash_dedup, partition
    from .dom import code_stats
    from .errors import EmptyDocument
    from .curate import DatasetEntry
    from .quality import AnnotationStore
    from .services import make_embedding_client

    tokenizer = (
        ByteLevelBpe.bundled()
        if bpe_dir == "bundled"
        else ByteLevelBpe.from_files(Path(bpe_dir) / "vocab.json", Path(bpe_dir) / "merges.txt")
    )
    entries = []
    curate_base = Path(in_path).parent
    out_base = Path(out).parent
    for raw_row in read_jsonl(in_path):
        row = _rebase_refs(raw_row, curate_base, out_base)
        try:
            stats = code_stats(row["html"], tokenizer)
        except EmptyDocument:
            continue
        entries.append(
            DatasetEntry(
                id=row["id"],
                html=row["html"],
                screenshot_ref=row.get("screenshot_ref", ""),
                layout_ref=row.get("layout_ref", ""),
                score=float(row.get("score", 0.0)),
                token_len=stats.token_len,
                tag_count=stats.tag_count,
                unique_tag_count=stats.unique_tag_count,
                dom_depth=stats.dom_depth,
            )
        )
    reader = lambda ref: _resolve_ref(out_base, ref).read_bytes()  # noqa: E731
    report = DedupReport()
    survivors = hash_dedup(entries, report, read_bytes=reader)
    survivors = embedding_dedup(
        survivors, make_embedding_client(emb_url), emb_threshold, report, read_bytes=reader
    )
    excluded = set()
    if store_path:
        store = AnnotationStore(store_path)
        excluded = store.rejected_samples()
        store.close()
    assigned, part_report = partition(survivors, per_split=per_split, seed=seed, excluded_test_ids=excluded)
    write_jsonl(out, (e.to_json() for e in assigned))
    click.echo(
        f"dataset -> {out} (dedup: {report.to_json()}, splits: {part_report.per_split}, "
        f"underfull: {part_report.underfull})"
    )
    return EXIT_OK


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--store", "store_path", type=click.Path(), help="also report annotation consistency")
@stage_command
def stats(in_path, out_dir, store_path) -> int:
    """Corpus statistics: aligned table, CSV, and figures."""
    from .curate import DatasetEntry, corpus_stats, stats_csv, stats_table
    from .reports import consistency_figures, corpus_figures

    entries = [DatasetEntry.from_json(r) for r in read_jsonl(in_path)]
    rows = corpus_stats(entries)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = stats_table(rows)
    (out / "stats.txt").write_text(table + "\n", encoding="utf-8")
    (out / "stats.csv").write_text(stats_csv(rows), encoding="utf-8")
    corpus_figures(entries, rows, out)
    if store_path:
        from .quality import AnnotationStore, consistency_report

        store = AnnotationStore(store_path)
        report = consistency_report(store)
        (out / "consistency.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )
        consistency_figures(report, out)
        store.close()
    click.echo(table)
    return EXIT_OK


@main.command(name="eval")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--split", default="short", show_default=True, type=click.Choice(["short", "mid", "long", "train"]))
@click.option("--generator", "generator_spec", default="echo", show_default=True, help="echo | empty | http(s)://URL")
@click.option("--emb-url", default="local:", show_default=True)
@click.option("--out", required=True, type=click.Path(), help="report JSON path")
@click.option("--checkpoint", type=click.Path(), help="resume file for long runs")
@click.option("--viewport", default=1280, show_default=True, type=int)
@click.option("--backend", default="static", show_default=True, type=click.Choice(["static", "cdp", "auto"]))
@stage_command
def eval_cmd(dataset, split, generator_spec, emb_url, out, checkpoint, viewport, backend) -> int:
    """Run the one-pass benchmark over a test split."""
    from .curate import DatasetEntry
    from .evaluate import BenchmarkConfig, run_benchmark
    from .render import RenderConfig
    from .reports import benchmark_figures
    from .services import make_embedding_client, make_generator

    base = Path(dataset).parent
    entries = []
    for r in read_jsonl(dataset):
        if r.get("split") != split:
            continue
        entry = DatasetEntry.from_json(r)
        entry.screenshot_ref = str(_resolve_ref(base, entry.screenshot_ref))
        entry.layout_ref = str(_resolve_ref(base, entry.layout_ref))
        entries.append(entry)
    if not entries:
        raise InputError(f"no entries with split={split!r} in {dataset}")
    cfg = BenchmarkConfig(
        render=RenderConfig(viewport_width=viewport, backend=backend),
        checkpoint_path=Path(checkpoint) if checkpoint else None,
    )
    report = run_benchmark(
        entries, make_generator(generator_spec), make_embedding_client(emb_url), cfg, split_name=split
    )
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True), encoding="utf-8")
    out_path.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8")
    benchmark_figures(report, out_path.parent / "figures")
    for metric, agg in sorted(report.aggregate.items()):
        click.echo(f"{metric}: {agg['mean']:.3f} ± {agg['std']:.3f} (n={agg['n']})")
    click.echo(f"excluded: {report.excluded}; report -> {out_path}")
    return EXIT_PARTIAL if report.excluded else EXIT_OK


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--dataset", type=click.Path(), help="dataset manifest feeding the review queue")
@click.option("--samples", type=click.Path(), help="rendered manifest to load samples from")
@click.option("--ui", "ui_dir", type=click.Path(), help="static UI bundle directory")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@stage_command
def serve(store_path, dataset, samples, ui_dir, host, port) -> int:
    """Serve the annotation endpoints (and UI bundle when provided)."""
    import uvicorn

    from .quality import AnnotationStore
    from .webapp import create_app

    store = AnnotationStore(store_path)
    if samples:
        base = Path(samples).parent
        for row in read_jsonl(samples):
            if row.get("screenshot_ref"):
                store.add_sample(row["id"], str(_resolve_ref(base, row["screenshot_ref"])))
    default_ui = Path(__file__).parent / "assets" / "ui"
    ui = Path(ui_dir) if ui_dir else (default_ui if default_ui.is_dir() else None)
    app = create_app(store, Path(dataset) if dataset else None, ui)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise InputError(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        store.close()
    return EXIT_OK


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="key = value config file")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="raw manifest")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--set", "overrides", multiple=True, help="key=value config override")
@stage_command
def pipeline(config_path, in_path, out_dir, overrides) -> int:
    """Run all enabled stages in order with checkpoints and a funnel report."""
    from .pipeline import run_pipeline

    parsed = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        parsed[key.strip().replace(".", "_").replace("-", "_")] = value.strip()
    cfg = load_config(config_path, parsed)
    result = run_pipeline(cfg, in_path, out_dir)
    for outcome in result.funnel:
        suffix = " (resumed)" if outcome.resumed else ""
        click.echo(
            f"{outcome.stage}: {outcome.input_count} -> {outcome.output_count} "
            f"(removed {outcome.removed}, parked {outcome.parked}){suffix}"
        )
    click.echo(f"dataset -> {result.dataset_path}")
    if not result.conservation_holds():
        click.echo("warning: funnel conservation violated", err=True)
    return EXIT_PARTIAL if result.parked_total else EXIT_OK


if __name__ == "__main__":
    main()
