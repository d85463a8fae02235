"""Code purification: length gate, redundant-element cleansing, attribute
whitelisting, dead-CSS pruning, and merging all CSS into one style tag.

The output document contains no comments, meta, or script elements; every
attribute is whitelisted; exactly one style element holds the surviving CSS.
Cleansing is idempotent: running it on its own output is a byte-level no-op.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .csstool import (
    AtRule,
    StyleRule,
    match_selector,
    matching_elements,
    parse_declarations,
    parse_selector_group,
    parse_stylesheet,
    strip_css_comments,
)
from .errors import PurifyError, SelectorUnsupported
from .htmlparse import Comment, Document, Element, parse_document, serialize
from .ingest import ORIGIN_STYLE_ATTR, RawPage

ALLOWED_ATTRIBUTES = frozenset(("class", "id", "width", "height", "style", "src"))

# Paper-quoted products: 128*5 and 2048*5 for HTML, 128*5 and 4096*5 for CSS.
DEFAULT_HTML_RANGE = (640, 10240)
DEFAULT_CSS_RANGE = (640, 20480)

DEFAULT_VIEWPORT = (1280, 10000)


@dataclass(frozen=True)
class LengthGate:
    html_range: tuple[int, int] = DEFAULT_HTML_RANGE
    css_range: tuple[int, int] = DEFAULT_CSS_RANGE

    def __post_init__(self) -> None:
        if self.html_range[0] > self.html_range[1] or self.css_range[0] > self.css_range[1]:
            raise ValueError("length gate lower bound exceeds upper bound")


@dataclass(frozen=True)
class LengthVerdict:
    passed: bool
    html_len: int
    css_len: int


def length_filter(page: RawPage, gate: LengthGate = LengthGate()) -> LengthVerdict:
    """Inclusive character-range gate over raw HTML and summed CSS sources."""
    html_len = len(page.html)
    css_len = sum(len(s.text) for s in page.css_sources)
    lo_h, hi_h = gate.html_range
    lo_c, hi_c = gate.css_range
    passed = lo_h <= html_len <= hi_h and lo_c <= css_len <= hi_c
    return LengthVerdict(passed, html_len, css_len)


@dataclass
class RemovedReport:
    comments: int = 0
    meta: int = 0
    script: int = 0
    hidden: int = 0
    attributes: int = 0
    dead_css_rules: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, data: dict) -> "RemovedReport":
        return cls(**{k: int(data.get(k, 0)) for k in cls().__dict__})


@dataclass
class PurifiedPage:
    id: str
    html: str
    removed_report: RemovedReport
    html_char_len: int
    css_char_len: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "html": self.html,
            "removed_report": self.removed_report.to_json(),
            "html_char_len": self.html_char_len,
            "css_char_len": self.css_char_len,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PurifiedPage":
        return cls(
            id=data["id"],
            html=data["html"],
            removed_report=RemovedReport.from_json(data.get("removed_report", {})),
            html_char_len=int(data.get("html_char_len", 0)),
            css_char_len=int(data.get("css_char_len", 0)),
        )


@dataclass(frozen=True)
class PurifyConfig:
    viewport: tuple[int, int] = DEFAULT_VIEWPORT


_ZERO = re.compile(r"^0(?:\.0*)?(?:px|em|rem|%|pt|vh|vw)?$")
_PX = re.compile(r"^(-?\d+(?:\.\d+)?)px$")


def _is_zero_length(value: str) -> bool:
    return bool(_ZERO.match(value.strip().lower()))


def _px(value: str) -> float | None:
    match = _PX.match(value.strip().lower())
    return float(match.group(1)) if match else None


def _inline_hidden(el: Element, viewport: tuple[int, int]) -> bool:
    if "hidden" in el.attrs:
        return True
    for attr in ("width", "height"):
        raw = el.attrs.get(attr)
        if raw is not None and raw.strip() in ("0", "0px"):
            return True
    style = el.attrs.get("style")
    if not style:
        return False
    decls = {p: v for p, v, _ in parse_declarations(style)}
    if decls.get("display", "").strip().lower() == "none":
        return True
    if decls.get("visibility", "").strip().lower() == "hidden":
        return True
    for prop in ("width", "height"):
        if prop in decls and _is_zero_length(decls[prop]):
            return True
    if decls.get("position", "").strip().lower() in ("absolute", "fixed"):
        left = _px(decls.get("left", ""))
        top = _px(decls.get("top", ""))
        vw, vh = viewport
        if left is not None and (left >= vw or left <= -vw):
            return True
        if top is not None and (top >= vh or top <= -vh):
            return True
    return False


def _css_hidden_elements(root: Element, rules: list[StyleRule]) -> set[int]:
    """Elements matched by unconditional rules declaring display:none or
    visibility:hidden. Media-conditional blocks are ignored here."""
    hidden: set[int] = set()
    for rule in rules:
        decls = {p: v.strip().lower() for p, v, _ in parse_declarations(rule.body)}
        if decls.get("display") != "none" and decls.get("visibility") != "hidden":
            continue
        try:
            for el in matching_elements(rule.selector_text, root):
                hidden.add(id(el))
        except SelectorUnsupported:
            continue
    return hidden


def _walk_remove(doc: Document, report: RemovedReport, cfg: PurifyConfig, css_rules: list[StyleRule]) -> None:
    root = doc.html
    assert root is not None
    # Comments outside <html> count too; they never reach the output.
    report.comments += sum(1 for n in doc.leading if isinstance(n, Comment))
    doc.leading = []

    css_hidden = _css_hidden_elements(root, css_rules)

    def clean(el: Element) -> None:
        kept: list = []
        for child in el.children:
            if isinstance(child, Comment):
                report.comments += 1
                continue
            if isinstance(child, Element):
                if child.tag == "meta":
                    report.meta += 1
                    continue
                if child.tag == "script":
                    report.script += 1
                    continue
                if child.tag == "style":
                    continue  # replaced by the merged style element
                if child.tag == "link" and "stylesheet" in (child.attrs.get("rel") or "").lower().split():
                    continue  # merged into the style element
                if _inline_hidden(child, cfg.viewport) or id(child) in css_hidden:
                    report.hidden += 1
                    continue
                clean(child)
            kept.append(child)
        el.children = kept
        for child in kept:
            child.parent = el

    clean(root)


def _strip_attributes(root: Element, report: RemovedReport) -> None:
    for el in root.iter_elements():
        removed = [name for name in el.attrs if name not in ALLOWED_ATTRIBUTES]
        for name in removed:
            del el.attrs[name]
            report.attributes += 1


def _rule_is_alive(rule: StyleRule, root: Element) -> bool:
    """A rule survives when any selector matches, or when its selector text
    falls outside the supported subset (conservative keep)."""
    try:
        return match_selector(rule.selector_text, root)
    except SelectorUnsupported:
        return True


_NAME_TOKEN = re.compile(r"[-\w]+")


def _declared_names(rules_text: str, props: tuple[str, ...]) -> set[str]:
    names: set[str] = set()
    for item in parse_stylesheet(rules_text):
        bodies: list[str] = []
        if isinstance(item, StyleRule):
            bodies.append(item.body)
        elif isinstance(item, AtRule) and item.raw_body is not None and item.name in ("media", "supports"):
            bodies.extend(r.body for r in item.rules)
        for body in bodies:
            for prop, value, _ in parse_declarations(body):
                if prop in props:
                    names.update(t.lower() for t in _NAME_TOKEN.findall(value))
    return names


def prune_css(css_text: str, root: Element, report: RemovedReport) -> str:
    """Keep rules whose selectors match the document; preserve live @media
    blocks verbatim; keep @font-face/@keyframes only when referenced."""
    items = parse_stylesheet(css_text)
    survivors: list[str] = []
    deferred: list[AtRule] = []
    for item in items:
        if isinstance(item, StyleRule):
            if _rule_is_alive(item, root):
                survivors.append(item.text)
            else:
                report.dead_css_rules += 1
        elif isinstance(item, AtRule):
            if item.name in ("media", "supports"):
                if any(_rule_is_alive(rule, root) for rule in item.rules):
                    survivors.append(item.text)
                else:
                    report.dead_css_rules += 1
            elif item.name in ("font-face", "keyframes", "-webkit-keyframes"):
                deferred.append(item)
            else:
                # @import/@charset/@namespace: unresolvable or irrelevant once merged.
                report.dead_css_rules += 1
    surviving_text = "\n".join(survivors)
    font_names = _declared_names(surviving_text, ("font-family", "font"))
    animation_names = _declared_names(surviving_text, ("animation", "animation-name"))
    for item in deferred:
        if item.name == "font-face":
            families = {
                token.lower()
                for prop, value, _ in parse_declarations(item.raw_body or "")
                if prop == "font-family"
                for token in _NAME_TOKEN.findall(value)
            }
            if families & font_names:
                survivors.append(item.text)
            else:
                report.dead_css_rules += 1
        else:  # keyframes
            name = item.prelude.strip().strip("\"'").lower()
            if name and name in animation_names:
                survivors.append(item.text)
            else:
                report.dead_css_rules += 1
    return "\n".join(survivors)


def cleanse(page: RawPage, cfg: PurifyConfig = PurifyConfig()) -> PurifiedPage:
    """Remove redundant content and merge CSS into a single head style tag."""
    doc = parse_document(page.html)
    if doc.html is None or doc.is_empty:
        raise PurifyError(f"page {page.id}: no elements after parsing")

    report = RemovedReport()
    html_char_len = len(page.html)
    css_char_len = sum(len(s.text) for s in page.css_sources)

    merged_parts: list[str] = []
    for source in page.css_sources:
        if source.origin == ORIGIN_STYLE_ATTR or source.unresolved or not source.text.strip():
            continue
        merged_parts.append(source.text)
    merged_css, css_comments = strip_css_comments("\n".join(merged_parts))
    report.comments += css_comments

    top_rules = [i for i in parse_stylesheet(merged_css) if isinstance(i, StyleRule)]
    _walk_remove(doc, report, cfg, top_rules)
    _strip_attributes(doc.html, report)
    final_css = prune_css(merged_css, doc.html, report)

    style_el = Element("style")
    if final_css:
        from .htmlparse import Text

        # A literal close tag inside CSS would truncate the element.
        style_el.append(Text(final_css.replace("</style", r"\3c/style")))
    head = next((c for c in doc.html.child_elements() if c.tag == "head"), None)
    if head is not None:
        head.children.insert(0, style_el)
        style_el.parent = head
    else:
        # No head in the source: adding one would grow the tag hierarchy, so
        # the style leads the body instead (same cascade effect).
        body = next((c for c in doc.html.child_elements() if c.tag == "body"), None)
        target = body if body is not None else doc.html
        target.children.insert(0, style_el)
        style_el.parent = target

    return PurifiedPage(
        id=page.id,
        html=serialize(doc.html),
        removed_report=report,
        html_char_len=html_char_len,
        css_char_len=css_char_len,
    )


def repage(purified_html: str, page_id: str) -> RawPage:
    """Wrap already-purified HTML as a RawPage (CSS re-read from the style tag)."""
    from .ingest import extract_css_sources

    return RawPage(
        id=page_id,
        url=f"purified:{page_id}",
        html=purified_html,
        css_sources=extract_css_sources(purified_html, "", lambda _u: None),
        fetched_at=0,
    )
