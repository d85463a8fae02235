"""Evaluation metrics and the one-pass benchmark harness.

Per sample: whole-image embedding similarity, block-level visual score, and
subtree recall over simplified DOM trees. The visual score variant here is
pinned (visual-score/v1): blocks are matched by maximal text similarity via
optimal assignment, pairs under 0.5 text similarity are discarded, and the
final value averages the match ratio with the color, text, crop-embedding,
and position sub-scores of matched pairs.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from PIL import Image
from scipy.optimize import linear_sum_assignment

from .curate import DatasetEntry, mean_std
from .dom import parse_tag_tree, tree_bleu
from .errors import EmptyDocument
from .htmlparse import parse_document, serialize
from .render import LayoutNode, RenderArtifact, RenderConfig, render_page
from .services import EmbeddingClient, Generator, cosine, strip_markdown_fences

TEXT_MATCH_THRESHOLD = 0.5
VISUAL_SCORE_VERSION = "visual-score/v1"

_COLOR_NORM = math.sqrt(3 * 255.0**2)
_POSITION_NORM = math.sqrt(2.0)


@dataclass
class Block:
    text: str
    bbox: tuple[float, float, float, float]  # normalized [0,1] x,y,w,h
    color: tuple[int, int, int]
    crop_png: Optional[bytes] = None

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


def levenshtein(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, 1):
        current = [i]
        for j, ch_b in enumerate(b, 1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ch_a != ch_b),
                )
            )
        previous = current
    return previous[-1]


def text_similarity(a: str, b: str) -> float:
    """Normalized character-level edit similarity in [0, 1]."""
    if not a and not b:
        return 1.0
    longest = max(len(a), len(b))
    return 1.0 - levenshtein(a, b) / longest


def color_similarity(a: tuple[int, int, int], b: tuple[int, int, int]) -> float:
    distance = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    return 1.0 - distance / _COLOR_NORM


def position_similarity(a: Block, b: Block) -> float:
    ax, ay = a.center
    bx, by = b.center
    return 1.0 - math.sqrt((ax - bx) ** 2 + (ay - by) ** 2) / _POSITION_NORM


def extract_blocks(artifact: RenderArtifact) -> list[Block]:
    """One block per layout element carrying direct text, with normalized
    geometry and render-time text color; crops cut from the screenshot."""
    if not artifact.render_ok or artifact.layout is None or artifact.screenshot is None:
        return []
    image = Image.open(io.BytesIO(artifact.screenshot)).convert("RGB")
    page_w, page_h = image.size
    blocks: list[Block] = []
    for node in artifact.layout.iter_nodes():
        if not node.text:
            continue
        x, y, w, h = node.bbox
        norm = (
            min(max(x / page_w, 0.0), 1.0),
            min(max(y / page_h, 0.0), 1.0),
            min(max(w / page_w, 0.0), 1.0),
            min(max(h / page_h, 0.0), 1.0),
        )
        left = int(max(x, 0))
        top = int(max(y, 0))
        right = int(min(max(x + w, left + 1), page_w))
        bottom = int(min(max(y + h, top + 1), page_h))
        crop = image.crop((left, top, right, bottom))
        buffer = io.BytesIO()
        crop.save(buffer, format="PNG")
        blocks.append(
            Block(
                text=node.text,
                bbox=norm,
                color=tuple(node.color) if node.color else (0, 0, 0),
                crop_png=buffer.getvalue(),
            )
        )
    return blocks


@dataclass
class VisualScore:
    value: Optional[float]
    match_ratio: float = 0.0
    color: float = 0.0
    text: float = 0.0
    clip: float = 0.0
    position: float = 0.0
    matched: int = 0
    undefined: bool = False

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "match_ratio": self.match_ratio,
            "color": self.color,
            "text": self.text,
            "clip": self.clip,
            "position": self.position,
            "matched": self.matched,
            "undefined": self.undefined,
            "version": VISUAL_SCORE_VERSION,
        }


def visual_score(
    reference: list[Block],
    candidate: list[Block],
    embed_client: Optional[EmbeddingClient] = None,
) -> VisualScore:
    """Block-matching appearance score; undefined for a blockless reference."""
    if not reference:
        return VisualScore(value=None, undefined=True)
    if not candidate:
        return VisualScore(value=0.0)
    sim = np.zeros((len(candidate), len(reference)))
    for i, cand in enumerate(candidate):
        for j, ref in enumerate(reference):
            sim[i, j] = text_similarity(cand.text, ref.text)
    rows, cols = linear_sum_assignment(-sim)
    pairs = [(i, j) for i, j in zip(rows, cols) if sim[i, j] >= TEXT_MATCH_THRESHOLD]
    match_ratio = 2.0 * len(pairs) / (len(reference) + len(candidate))
    if not pairs:
        return VisualScore(value=match_ratio / 5.0, match_ratio=match_ratio)
    colors: list[float] = []
    texts: list[float] = []
    clips: list[float] = []
    positions: list[float] = []
    for i, j in pairs:
        cand, ref = candidate[i], reference[j]
        colors.append(color_similarity(cand.color, ref.color))
        texts.append(float(sim[i, j]))
        positions.append(position_similarity(cand, ref))
        if embed_client is not None and cand.crop_png and ref.crop_png:
            value = cosine(
                embed_client.embed_image(cand.crop_png),
                embed_client.embed_image(ref.crop_png),
            )
            clips.append(max(0.0, min(1.0, value)))
        else:
            clips.append(0.0)
    sub = {
        "color": sum(colors) / len(colors),
        "text": sum(texts) / len(texts),
        "clip": sum(clips) / len(clips),
        "position": sum(positions) / len(positions),
    }
    final = (match_ratio + sub["color"] + sub["text"] + sub["clip"] + sub["position"]) / 5.0
    return VisualScore(
        value=final,
        match_ratio=match_ratio,
        matched=len(pairs),
        **sub,
    )


def clip_similarity(png_a: bytes, png_b: bytes, client: EmbeddingClient) -> float:
    """Cosine of whole-image embeddings, clamped to [0, 1] for reporting."""
    value = cosine(client.embed_image(png_a), client.embed_image(png_b))
    return max(0.0, min(1.0, value))


# -- benchmark harness ---------------------------------------------------------


def load_prompt() -> str:
    from importlib import resources

    return resources.files("webcurate").joinpath("assets/prompt.txt").read_text(encoding="utf-8")


@dataclass
class SampleResult:
    id: str
    visual: Optional[float]
    clip: Optional[float]
    treebleu: Optional[float]
    failed: bool = False
    failure_reason: Optional[str] = None
    visual_detail: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "visual": self.visual,
            "clip": self.clip,
            "treebleu": self.treebleu,
            "failed": self.failed,
            "failure_reason": self.failure_reason,
            "visual_detail": self.visual_detail,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SampleResult":
        return cls(
            id=data["id"],
            visual=data.get("visual"),
            clip=data.get("clip"),
            treebleu=data.get("treebleu"),
            failed=bool(data.get("failed")),
            failure_reason=data.get("failure_reason"),
            visual_detail=data.get("visual_detail"),
        )


@dataclass
class MetricReport:
    model_name: str
    split_name: str
    per_sample: list[SampleResult]
    aggregate: dict[str, dict[str, float]] = field(default_factory=dict)
    excluded: int = 0

    def recompute(self) -> None:
        self.aggregate = {}
        usable = [s for s in self.per_sample if not s.failed]
        self.excluded = len(self.per_sample) - len(usable)
        for metric in ("visual", "clip", "treebleu"):
            values = [getattr(s, metric) for s in usable if getattr(s, metric) is not None]
            if values:
                mean, std = mean_std([float(v) for v in values])
                self.aggregate[metric] = {"mean": mean, "std": std, "n": len(values)}

    def to_json(self) -> dict:
        return {
            "model_name": self.model_name,
            "split_name": self.split_name,
            "per_sample": [s.to_json() for s in self.per_sample],
            "aggregate": self.aggregate,
            "excluded": self.excluded,
        }

    def to_csv(self) -> str:
        lines = ["id,visual,clip,treebleu,failed"]
        for s in self.per_sample:
            def cell(v):
                return "" if v is None else f"{v:.6f}"

            lines.append(f"{s.id},{cell(s.visual)},{cell(s.clip)},{cell(s.treebleu)},{int(s.failed)}")
        return "\n".join(lines) + "\n"


@dataclass
class BenchmarkConfig:
    render: RenderConfig = field(default_factory=RenderConfig)
    checkpoint_path: Optional[Path] = None
    prompt: Optional[str] = None


def _reference_artifact(entry: DatasetEntry) -> RenderArtifact:
    screenshot = Path(entry.screenshot_ref).read_bytes()
    layout = LayoutNode.from_json(json.loads(Path(entry.layout_ref).read_text(encoding="utf-8")))
    return RenderArtifact(id=entry.id, screenshot=screenshot, layout=layout, render_ok=True)


def evaluate_candidate(
    entry: DatasetEntry,
    candidate_html: str,
    embed_client: EmbeddingClient,
    render_cfg: RenderConfig,
    reference: Optional[RenderArtifact] = None,
) -> SampleResult:
    """All three metrics for one generated page against its reference."""
    reference = reference if reference is not None else _reference_artifact(entry)
    normalized = _normalize_candidate(candidate_html)
    if normalized is None:
        return SampleResult(entry.id, None, None, None, failed=True, failure_reason="unparseable output")
    artifact = render_page((entry.id + ":cand", normalized), render_cfg)
    if not artifact.render_ok:
        return SampleResult(
            entry.id, None, None, None, failed=True, failure_reason=artifact.failure_reason
        )
    try:
        bleu = tree_bleu(parse_tag_tree(normalized), parse_tag_tree(entry.html))
    except EmptyDocument:
        bleu = 0.0
    clip = clip_similarity(artifact.screenshot, reference.screenshot, embed_client)
    score = visual_score(extract_blocks(reference), extract_blocks(artifact), embed_client)
    return SampleResult(
        id=entry.id,
        visual=score.value,
        clip=clip,
        treebleu=bleu,
        visual_detail=score.to_json(),
    )


def _normalize_candidate(html: str) -> Optional[str]:
    """Standard parser recovery for model output (no cleansing)."""
    html = strip_markdown_fences(html).strip()
    if not html:
        return None
    doc = parse_document(html)
    if doc.html is None or doc.is_empty:
        return None
    return serialize(doc.html)


def run_benchmark(
    entries: Iterable[DatasetEntry],
    generator: Generator,
    embed_client: EmbeddingClient,
    cfg: BenchmarkConfig = BenchmarkConfig(),
    split_name: str = "test",
) -> MetricReport:
    """One-pass protocol: a single prompt+screenshot exchange per sample, no
    self-correction; failures are excluded from aggregates and counted."""
    prompt = cfg.prompt if cfg.prompt is not None else load_prompt()
    done: dict[str, SampleResult] = {}
    if cfg.checkpoint_path is not None and cfg.checkpoint_path.is_file():
        for line in cfg.checkpoint_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                result = SampleResult.from_json(json.loads(line))
                done[result.id] = result
    results: list[SampleResult] = []
    checkpoint_fh = None
    if cfg.checkpoint_path is not None:
        cfg.checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
        checkpoint_fh = open(cfg.checkpoint_path, "a", encoding="utf-8")
    try:
        for entry in sorted(entries, key=lambda e: e.id):
            if entry.id in done:
                results.append(done[entry.id])
                continue
            try:
                reference = _reference_artifact(entry)
                raw = generator.generate(prompt, reference.screenshot, entry.html)
                result = evaluate_candidate(
                    entry, raw, embed_client, cfg.render, reference=reference
                )
            except Exception as exc:
                result = SampleResult(
                    entry.id, None, None, None, failed=True, failure_reason=str(exc)
                )
            results.append(result)
            if checkpoint_fh is not None:
                checkpoint_fh.write(json.dumps(result.to_json(), sort_keys=True) + "\n")
                checkpoint_fh.flush()
    finally:
        if checkpoint_fh is not None:
            checkpoint_fh.close()
    report = MetricReport(model_name=generator.name, split_name=split_name, per_sample=results)
    report.recompute()
    return report
