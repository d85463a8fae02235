"""Page rendering: full-page screenshot plus bounding-box layout tree.

Two backends share one contract:

* ``static``: the built-in deterministic layout engine and rasterizer;
  hermetic, used by default and by the test suite.
* ``cdp``: drives an external Chromium-family browser over the DevTools
  wire protocol (see ``cdp.py``); requires a browser binary.

Artifacts carry PNG bytes and a LayoutNode tree; batch rendering isolates
per-page failures and orders output by page id.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from ..errors import ConfigError, RenderStartupError
from ..purify import PurifiedPage
from .layout import LayoutBox, LayoutEngine
from .paint import paint, to_png_bytes


@dataclass(frozen=True)
class RenderConfig:
    viewport_width: int = 1280
    viewport_height: int = 720
    max_height: int = 40000
    timeout_ms: int = 15000
    backend: str = "static"  # static | cdp | auto
    browser_binary: Optional[str] = None


@dataclass
class LayoutNode:
    """Serializable rendered-element node: tag, border-box, children."""

    tag: str
    bbox: tuple[float, float, float, float]
    children: list["LayoutNode"] = field(default_factory=list)
    zero_area: bool = False
    substituted: bool = False
    text: str = ""
    color: Optional[tuple[int, int, int]] = None

    def to_json(self) -> dict:
        record: dict = {
            "tag": self.tag,
            "bbox": list(self.bbox),
            "children": [c.to_json() for c in self.children],
        }
        if self.zero_area:
            record["zero_area"] = True
        if self.substituted:
            record["substituted"] = True
        if self.text:
            record["text"] = self.text
            record["color"] = list(self.color) if self.color else [0, 0, 0]
        return record

    @classmethod
    def from_json(cls, data: dict) -> "LayoutNode":
        return cls(
            tag=data["tag"],
            bbox=tuple(data["bbox"]),
            children=[cls.from_json(c) for c in data.get("children", [])],
            zero_area=bool(data.get("zero_area")),
            substituted=bool(data.get("substituted")),
            text=data.get("text", ""),
            color=tuple(data["color"]) if "color" in data else None,
        )

    def iter_nodes(self):
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def tag_projection(self) -> tuple:
        return (self.tag, tuple(c.tag_projection() for c in self.children))


@dataclass
class RenderArtifact:
    id: str
    screenshot: Optional[bytes]
    layout: Optional[LayoutNode]
    render_ok: bool
    failure_reason: Optional[str] = None
    clipped: bool = False


def layout_node_from_box(box: LayoutBox) -> LayoutNode:
    node = LayoutNode(
        tag=box.tag,
        bbox=(box.x, box.y, box.width, box.height),
        children=[layout_node_from_box(c) for c in box.children],
        substituted=box.substituted,
        text=box.direct_text,
        color=box.text_color if box.direct_text else None,
    )
    node.zero_area = box.zero_area
    return node


PageLike = Union[PurifiedPage, tuple[str, str]]


def _page_fields(page: PageLike) -> tuple[str, str]:
    if isinstance(page, PurifiedPage):
        return page.id, page.html
    page_id, html = page
    return page_id, html


def render_page(page: PageLike, cfg: RenderConfig = RenderConfig()) -> RenderArtifact:
    """Render one page to (screenshot, layout) with the configured backend."""
    page_id, html = _page_fields(page)
    backend = _select_backend(cfg)
    try:
        return backend.render(page_id, html, cfg)
    except RenderStartupError:
        raise
    except Exception as exc:  # per-page isolation: a bad page never poisons a run
        return RenderArtifact(page_id, None, None, render_ok=False, failure_reason=str(exc))


def render_batch(
    pages: Iterable[PageLike],
    cfg: RenderConfig = RenderConfig(),
    pool_size: int = 1,
) -> list[RenderArtifact]:
    """Render many pages; output sorted by id, one artifact per input."""
    if pool_size < 1:
        raise ConfigError(f"pool_size must be >= 1, got {pool_size}")
    backend = _select_backend(cfg)  # startup errors surface before any work
    page_list = list(pages)
    artifacts: list[RenderArtifact] = []
    if pool_size == 1:
        for page in page_list:
            artifacts.append(_safe_render(backend, page, cfg))
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=pool_size) as pool:
            futures = [pool.submit(_safe_render, backend, page, cfg) for page in page_list]
            artifacts = [f.result() for f in futures]
    artifacts.sort(key=lambda a: a.id)
    return artifacts


def _safe_render(backend, page: PageLike, cfg: RenderConfig) -> RenderArtifact:
    page_id, html = _page_fields(page)
    try:
        artifact = backend.render(page_id, html, cfg)
    except Exception as exc:
        return RenderArtifact(page_id, None, None, render_ok=False, failure_reason=str(exc))
    return artifact


class StaticBackend:
    """Hermetic renderer: layout engine + rasterizer, no external processes."""

    def render(self, page_id: str, html: str, cfg: RenderConfig) -> RenderArtifact:
        engine = LayoutEngine(cfg.viewport_width, cfg.viewport_height)
        box = engine.layout(html)
        image, clipped = paint(box, cfg.viewport_width, cfg.viewport_height, cfg.max_height)
        return RenderArtifact(
            id=page_id,
            screenshot=to_png_bytes(image),
            layout=layout_node_from_box(box),
            render_ok=True,
            clipped=clipped,
        )


def _select_backend(cfg: RenderConfig):
    if cfg.backend == "static":
        return StaticBackend()
    if cfg.backend in ("cdp", "auto"):
        from .cdp import CdpBackend, find_browser

        binary = cfg.browser_binary or find_browser()
        if binary is None:
            if cfg.backend == "auto":
                return StaticBackend()
            raise RenderStartupError("no browser binary found for the cdp backend")
        return CdpBackend(binary)
    raise ConfigError(f"unknown render backend: {cfg.backend!r}")
