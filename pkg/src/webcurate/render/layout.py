"""Deterministic block/inline layout for the built-in render backend.

Implements enough of the CSS box model to place purified pages: block
stacking, greedy inline text flow with fixed character metrics, margins,
padding, borders, absolute/relative positioning, and attribute sizing for
images. Fixed metrics (0.5em character width, 1.2 line height) replace font
measurement so identical input always yields identical geometry.

Unsupported styling (floats, flex/grid, tables beyond block stacking,
media-conditional rules) degrades to block flow; fidelity is approximate by
design, determinism is not.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..csstool import (
    ComplexSelector,
    StyleRule,
    parse_declarations,
    parse_selector_group,
    parse_stylesheet,
    strip_css_comments,
)
from ..errors import SelectorUnsupported
from ..htmlparse import Document, Element, Text, parse_document

DEFAULT_FONT_SIZE = 16.0
CHAR_WIDTH_EM = 0.5
LINE_HEIGHT = 1.2

BLOCK_TAGS = frozenset(
    (
        "html body div p h1 h2 h3 h4 h5 h6 ul ol li dl dt dd section article "
        "header footer nav main aside blockquote pre form fieldset hr address "
        "figure figcaption table thead tbody tfoot tr caption center dir menu"
    ).split()
)

UNRENDERED_TAGS = frozenset("head meta link style script title template base noscript".split())

INHERITED = ("color", "font-size", "text-align", "visibility", "line-height")

# tag -> extra default declarations
_UA_SHEET: dict[str, dict[str, str]] = {
    "body": {"margin": "8px"},
    "h1": {"font-size": "32px", "margin": "21px 0"},
    "h2": {"font-size": "24px", "margin": "20px 0"},
    "h3": {"font-size": "19px", "margin": "19px 0"},
    "h4": {"font-size": "16px", "margin": "21px 0"},
    "h5": {"font-size": "13px", "margin": "22px 0"},
    "h6": {"font-size": "11px", "margin": "25px 0"},
    "p": {"margin": "16px 0"},
    "ul": {"margin": "16px 0", "padding": "0 0 0 40px"},
    "ol": {"margin": "16px 0", "padding": "0 0 0 40px"},
    "dl": {"margin": "16px 0"},
    "dd": {"margin": "0 0 0 40px"},
    "blockquote": {"margin": "16px 40px"},
    "pre": {"margin": "16px 0"},
    "hr": {"margin": "8px 0", "height": "2px", "background-color": "#808080"},
    "figure": {"margin": "16px 40px"},
    "b": {},
    "a": {"color": "#0000ee"},
}

_HEX = re.compile(r"^#([0-9a-fA-F]{3}|[0-9a-fA-F]{6})$")
_RGB = re.compile(r"^rgba?\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)")

NAMED_COLORS = {
    "black": (0, 0, 0),
    "white": (255, 255, 255),
    "red": (255, 0, 0),
    "green": (0, 128, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
    "gray": (128, 128, 128),
    "grey": (128, 128, 128),
    "silver": (192, 192, 192),
    "orange": (255, 165, 0),
    "purple": (128, 0, 128),
    "brown": (165, 42, 42),
    "pink": (255, 192, 203),
    "navy": (0, 0, 128),
    "teal": (0, 128, 128),
    "olive": (128, 128, 0),
    "maroon": (128, 0, 0),
    "lime": (0, 255, 0),
    "aqua": (0, 255, 255),
    "fuchsia": (255, 0, 255),
    "transparent": None,
}


def parse_color(value: str) -> Optional[tuple[int, int, int]]:
    value = value.strip().lower()
    match = _HEX.match(value)
    if match:
        hexpart = match.group(1)
        if len(hexpart) == 3:
            hexpart = "".join(c * 2 for c in hexpart)
        return tuple(int(hexpart[i : i + 2], 16) for i in (0, 2, 4))  # type: ignore[return-value]
    match = _RGB.match(value)
    if match:
        return tuple(min(255, int(match.group(i))) for i in (1, 2, 3))  # type: ignore[return-value]
    if value in NAMED_COLORS:
        return NAMED_COLORS[value]
    return None


@dataclass
class Style:
    """Computed style for one element (px units resolved at use sites)."""

    display: str = "inline"
    position: str = "static"
    declarations: dict[str, str] = field(default_factory=dict)
    font_size: float = DEFAULT_FONT_SIZE
    color: tuple[int, int, int] = (0, 0, 0)
    visibility: str = "visible"

    def get(self, prop: str) -> Optional[str]:
        return self.declarations.get(prop)


class StyleResolver:
    """Cascades UA defaults, document rules, and inline style per element."""

    def __init__(self, document: Document, viewport_width: int):
        self.viewport_width = viewport_width
        self._rules: list[tuple[ComplexSelector, int, dict[str, tuple[str, bool]]]] = []
        css_text = self._collect_css(document)
        order = 0
        for item in parse_stylesheet(css_text):
            if not isinstance(item, StyleRule):
                continue  # media-conditional styling is ignored in static layout
            decls = {p: (v, imp) for p, v, imp in parse_declarations(item.body)}
            if not decls:
                continue
            try:
                group = parse_selector_group(item.selector_text)
            except SelectorUnsupported:
                continue
            for sel in group:
                self._rules.append((sel, order, decls))
                order += 1
        self._parents: dict[int, Optional[Element]] = {}
        if document.html is not None:
            self._parents[id(document.html)] = None
            for el in document.html.iter_elements():
                for child in el.child_elements():
                    self._parents[id(child)] = el

    @staticmethod
    def _collect_css(document: Document) -> str:
        if document.html is None:
            return ""
        chunks = []
        for el in document.html.iter_elements():
            if el.tag == "style":
                chunks.append(el.raw_text())
        text, _ = strip_css_comments("\n".join(chunks))
        return text

    def _matching_declarations(self, el: Element) -> dict[str, str]:
        collected: list[tuple[tuple[int, int, int], int, int, dict]] = []
        for sel, order, decls in self._rules:
            if self._matches(sel, el):
                collected.append((sel.specificity(), order, 0, decls))
        collected.sort(key=lambda item: (item[0], item[1]))
        merged: dict[str, str] = {}
        important: dict[str, str] = {}
        for _, _, _, decls in collected:
            for prop, (value, imp) in decls.items():
                if imp:
                    important[prop] = value
                else:
                    merged[prop] = value
        merged.update(important)
        return merged

    def _matches(self, sel: ComplexSelector, el: Element) -> bool:
        idx = len(sel.compounds) - 1
        if not sel.compounds[idx].matches(el):
            return False

        def walk(compound_idx: int, node: Element) -> bool:
            if compound_idx == 0:
                return True
            combinator = sel.combinators[compound_idx - 1]
            target = sel.compounds[compound_idx - 1]
            ancestor = self._parents.get(id(node))
            if combinator == ">":
                return (
                    ancestor is not None
                    and target.matches(ancestor)
                    and walk(compound_idx - 1, ancestor)
                )
            while ancestor is not None:
                if target.matches(ancestor) and walk(compound_idx - 1, ancestor):
                    return True
                ancestor = self._parents.get(id(ancestor))
            return False

        return walk(idx, el)

    def computed(self, el: Element, parent: Optional[Style]) -> Style:
        decls: dict[str, str] = dict(_UA_SHEET.get(el.tag, {}))
        decls.update(self._matching_declarations(el))
        # width/height presentation attributes act as pixel sizes
        for attr in ("width", "height"):
            raw = el.attrs.get(attr)
            if raw and attr not in decls:
                raw = raw.strip()
                decls[attr] = raw if raw.endswith(("%", "px")) else f"{raw}px"
        inline = el.attrs.get("style")
        if inline:
            decls.update({p: v for p, v, _ in parse_declarations(inline)})

        style = Style(declarations=decls)
        base_fs = parent.font_size if parent else DEFAULT_FONT_SIZE
        style.font_size = self._font_size(decls.get("font-size"), base_fs)
        style.color = parent.color if parent else (0, 0, 0)
        color = decls.get("color")
        if color:
            parsed = parse_color(color)
            if parsed:
                style.color = parsed
        style.visibility = decls.get(
            "visibility", parent.visibility if parent else "visible"
        ).strip().lower()

        display = decls.get("display", "").strip().lower()
        if not display:
            display = "block" if el.tag in BLOCK_TAGS else "inline"
        style.display = display
        position = decls.get("position", "").strip().lower()
        style.position = position if position in ("absolute", "fixed", "relative") else "static"
        return style

    def _font_size(self, value: Optional[str], parent_px: float) -> float:
        if not value:
            return parent_px
        px = resolve_length(value, parent_px, parent_px, self.viewport_width)
        return px if px is not None and px > 0 else parent_px


_LENGTH = re.compile(r"^(-?\d+(?:\.\d+)?)(px|em|rem|%|vw|vh|pt)?$")


def resolve_length(
    value: str,
    reference: float,
    font_size: float,
    viewport_width: int,
    viewport_height: int = 10000,
) -> Optional[float]:
    """Resolve a CSS length to px; None for auto/unsupported values."""
    value = value.strip().lower()
    if not value or value == "auto":
        return None
    match = _LENGTH.match(value)
    if not match:
        return None
    number = float(match.group(1))
    unit = match.group(2) or ("" if number == 0 else "px")
    if unit in ("px", ""):
        return number
    if unit == "em":
        return number * font_size
    if unit == "rem":
        return number * DEFAULT_FONT_SIZE
    if unit == "%":
        return number * reference / 100.0
    if unit == "vw":
        return number * viewport_width / 100.0
    if unit == "vh":
        return number * viewport_height / 100.0
    if unit == "pt":
        return number * 4 / 3
    return None


def _expand_box(decls: dict[str, str], base: str) -> dict[str, str]:
    """Expand margin/padding shorthand into per-side values."""
    sides = {}
    short = decls.get(base)
    if short:
        parts = short.split()
        if len(parts) == 1:
            top = right = bottom = left = parts[0]
        elif len(parts) == 2:
            top, right = parts
            bottom, left = parts
        elif len(parts) == 3:
            top, right, bottom = parts
            left = parts[1]
        else:
            top, right, bottom, left = parts[:4]
        sides = {"top": top, "right": right, "bottom": bottom, "left": left}
    for side in ("top", "right", "bottom", "left"):
        explicit = decls.get(f"{base}-{side}")
        if explicit:
            sides[side] = explicit
    return sides


_BORDER_WIDTH = re.compile(r"(?:^|\s)(\d+(?:\.\d+)?)(px)?(?:\s|$)")


def _border_widths(decls: dict[str, str]) -> dict[str, float]:
    widths = {"top": 0.0, "right": 0.0, "bottom": 0.0, "left": 0.0}
    shorthand = decls.get("border")
    if shorthand:
        if "none" in shorthand or "hidden" in shorthand:
            pass
        else:
            match = _BORDER_WIDTH.search(shorthand)
            width = float(match.group(1)) if match else 3.0  # medium
            widths = {k: width for k in widths}
    bw = decls.get("border-width")
    if bw:
        parts = bw.split()
        vals = [float(m.group(1)) if (m := _BORDER_WIDTH.search(p)) else 0.0 for p in parts]
        if len(vals) == 1:
            widths = {k: vals[0] for k in widths}
        elif len(vals) >= 4:
            widths = {"top": vals[0], "right": vals[1], "bottom": vals[2], "left": vals[3]}
        elif len(vals) == 2:
            widths = {"top": vals[0], "bottom": vals[0], "right": vals[1], "left": vals[1]}
    for side in widths:
        specific = decls.get(f"border-{side}") or decls.get(f"border-{side}-width")
        if specific:
            if "none" in specific:
                widths[side] = 0.0
            else:
                match = _BORDER_WIDTH.search(specific)
                if match:
                    widths[side] = float(match.group(1))
    return widths


def _border_color(decls: dict[str, str], fallback: tuple[int, int, int]) -> tuple[int, int, int]:
    for prop in ("border-color", "border"):
        value = decls.get(prop)
        if value:
            for token in value.split():
                parsed = parse_color(token)
                if parsed:
                    return parsed
    return fallback


@dataclass
class TextFragment:
    text: str
    x: float
    y: float
    width: float
    height: float
    color: tuple[int, int, int]
    font_size: float


@dataclass
class LayoutBox:
    """One rendered element: border-box geometry plus paint metadata."""

    tag: str
    x: float = 0.0
    y: float = 0.0
    width: float = 0.0
    height: float = 0.0
    children: list["LayoutBox"] = field(default_factory=list)
    text_color: tuple[int, int, int] = (0, 0, 0)
    background: Optional[tuple[int, int, int]] = None
    border_widths: dict[str, float] = field(default_factory=dict)
    border_color: tuple[int, int, int] = (0, 0, 0)
    fragments: list[TextFragment] = field(default_factory=list)
    direct_text: str = ""
    font_size: float = DEFAULT_FONT_SIZE
    substituted: bool = False
    visible: bool = True

    @property
    def zero_area(self) -> bool:
        return self.width <= 0 or self.height <= 0

    def iter_boxes(self):
        yield self
        for child in self.children:
            yield from child.iter_boxes()


class _InlineContext:
    """Greedy word flow inside one block container."""

    def __init__(self, x: float, y: float, width: float):
        self.origin_x = x
        self.width = max(width, 0.0)
        self.cursor_x = x
        self.line_top = y
        self.line_height = 0.0

    @property
    def line_used(self) -> bool:
        return self.cursor_x > self.origin_x + 1e-9

    def fits(self, width: float) -> bool:
        return self.cursor_x + width <= self.origin_x + self.width + 1e-6

    def put(self, width: float, height: float) -> tuple[float, float]:
        """Place at the cursor without wrapping; returns the (x, y) used."""
        x, y = self.cursor_x, self.line_top
        self.cursor_x += width
        self.line_height = max(self.line_height, height)
        return x, y

    def ensure_line(self, height: float) -> None:
        self.line_height = max(self.line_height, height)

    def newline(self) -> None:
        self.line_top += self.line_height
        self.cursor_x = self.origin_x
        self.line_height = 0.0

    def finish(self) -> float:
        return self.line_top + self.line_height


class LayoutEngine:
    def __init__(self, viewport_width: int = 1280, viewport_height: int = 720):
        self.viewport_width = viewport_width
        self.viewport_height = viewport_height

    def layout(self, html: str) -> LayoutBox:
        document = parse_document(html)
        if document.html is None:
            root = LayoutBox(tag="html", width=float(self.viewport_width), height=0.0)
            return root
        resolver = StyleResolver(document, self.viewport_width)
        root_style = resolver.computed(document.html, None)
        root = LayoutBox(tag="html", text_color=root_style.color, font_size=root_style.font_size)
        root.x = 0.0
        root.y = 0.0
        root.width = float(self.viewport_width)
        bg = root_style.get("background-color") or root_style.get("background")
        if bg:
            root.background = parse_color(bg)
        height = self._layout_block_children(
            document.html, root, resolver, root_style, 0.0, 0.0, float(self.viewport_width)
        )
        explicit = root_style.get("height")
        resolved = (
            resolve_length(explicit, float(self.viewport_height), root_style.font_size, self.viewport_width)
            if explicit
            else None
        )
        root.height = max(resolved if resolved is not None else height, height)
        # Overflowing and absolutely-positioned content extends the document,
        # the way scroll bounds do in a browser.
        for child in root.children:
            for box in child.iter_boxes():
                root.height = max(root.height, box.y + box.height)
                for frag in box.fragments:
                    root.height = max(root.height, frag.y + frag.height)
        _round_boxes(root)
        return root

    # -- block flow --------------------------------------------------------

    def _layout_block_children(
        self,
        el: Element,
        box: LayoutBox,
        resolver: StyleResolver,
        style: Style,
        content_x: float,
        content_y: float,
        content_width: float,
    ) -> float:
        """Lay out ``el``'s children into ``box``; returns content height."""
        cursor_y = content_y
        inline: Optional[_InlineContext] = None
        color = style.color

        def flush_inline() -> None:
            nonlocal cursor_y, inline
            if inline is not None:
                cursor_y = inline.finish()
                inline = None

        for child in el.children:
            if isinstance(child, Text):
                words = child.data.split()
                if not words:
                    continue
                if inline is None:
                    inline = _InlineContext(content_x, cursor_y, content_width)
                frags = self._flow_words(words, inline, style, color)
                box.fragments.extend(frags)
                box.direct_text = (box.direct_text + " " + " ".join(words)).strip()
                continue
            if not isinstance(child, Element):
                continue
            if child.tag in UNRENDERED_TAGS:
                continue
            child_style = resolver.computed(child, style)
            if child_style.display == "none":
                continue
            if child.tag == "br":
                if inline is None:
                    inline = _InlineContext(content_x, cursor_y, content_width)
                inline.ensure_line(style.font_size * LINE_HEIGHT)
                inline.newline()
                continue
            if child_style.position in ("absolute", "fixed"):
                child_box = LayoutBox(
                    tag=child.tag, text_color=child_style.color, font_size=child_style.font_size
                )
                box.children.append(child_box)
                self._prepare_absolute(child, child_box, child_style, resolver, content_width)
                continue
            if child_style.display in ("inline", "inline-block") and child.tag != "img":
                if child_style.display == "inline-block":
                    flush_inline()  # simplified: inline-blocks start a new line
                    used = self._layout_block(
                        child, child_style, resolver, box, content_x, cursor_y, content_width, shrink=True
                    )
                    cursor_y = used
                    continue
                if inline is None:
                    inline = _InlineContext(content_x, cursor_y, content_width)
                self._layout_inline(child, child_style, resolver, box, inline)
                continue
            if child.tag == "img":
                if inline is None:
                    inline = _InlineContext(content_x, cursor_y, content_width)
                self._layout_image(child, child_style, box, inline, content_width)
                continue
            flush_inline()
            cursor_y = self._layout_block(
                child, child_style, resolver, box, content_x, cursor_y, content_width
            )
        flush_inline()
        return max(cursor_y - content_y, 0.0)

    def _layout_block(
        self,
        el: Element,
        style: Style,
        resolver: StyleResolver,
        parent_box: LayoutBox,
        avail_x: float,
        avail_y: float,
        avail_width: float,
        shrink: bool = False,
    ) -> float:
        """Place a block-level element; returns the y after its margin box."""
        decls = style.declarations
        fs = style.font_size
        vw = self.viewport_width

        def length(prop_value: Optional[str], reference: float) -> Optional[float]:
            if prop_value is None:
                return None
            return resolve_length(prop_value, reference, fs, vw, self.viewport_height)

        margins = {
            side: length(value, avail_width) or 0.0
            for side, value in _expand_box(decls, "margin").items()
        }
        margin_auto = {
            side: value.strip().lower() == "auto"
            for side, value in _expand_box(decls, "margin").items()
        }
        paddings = {side: 0.0 for side in ("top", "right", "bottom", "left")}
        paddings.update(
            {
                side: max(length(value, avail_width) or 0.0, 0.0)
                for side, value in _expand_box(decls, "padding").items()
            }
        )
        margins.setdefault("top", 0.0)
        margins.setdefault("right", 0.0)
        margins.setdefault("bottom", 0.0)
        margins.setdefault("left", 0.0)
        borders = _border_widths(decls)

        border_box = self._border_box_width(decls, style, avail_width, margins, paddings, borders)
        if border_box is None:
            if shrink:
                border_box = None  # measured after children
            else:
                border_box = max(
                    avail_width - margins["left"] - margins["right"], 0.0
                )
        elif margin_auto.get("left") and margin_auto.get("right"):
            free = avail_width - border_box
            if free > 0:
                margins["left"] = margins["right"] = free / 2.0

        box = LayoutBox(
            tag=el.tag,
            text_color=style.color,
            font_size=fs,
            border_widths=borders,
            border_color=_border_color(decls, style.color),
            visible=style.visibility != "hidden",
        )
        bg = decls.get("background-color") or decls.get("background")
        if bg:
            box.background = parse_color(bg)
        parent_box.children.append(box)

        box.x = avail_x + margins["left"]
        box.y = avail_y + margins["top"]
        inner_width = (
            (border_box - borders["left"] - borders["right"] - paddings["left"] - paddings["right"])
            if border_box is not None
            else max(avail_width - margins["left"] - margins["right"], 0.0)
        )
        inner_width = max(inner_width, 0.0)
        content_x = box.x + borders["left"] + paddings["left"]
        content_y = box.y + borders["top"] + paddings["top"]

        content_height = self._layout_block_children(
            el, box, resolver, style, content_x, content_y, inner_width
        )

        if border_box is None:  # shrink-to-fit: widest child/fragment
            widest = 0.0
            for child in box.children:
                widest = max(widest, child.x + child.width - content_x)
            for frag in box.fragments:
                widest = max(widest, frag.x + frag.width - content_x)
            border_box = min(widest, inner_width) + borders["left"] + borders["right"] + paddings["left"] + paddings["right"]

        explicit_height = length(decls.get("height"), 0.0)
        if explicit_height is not None and "%" in (decls.get("height") or ""):
            explicit_height = None  # percentage heights need an explicit parent chain
        if explicit_height is not None:
            content_height = max(explicit_height, 0.0)
        min_height = length(decls.get("min-height"), 0.0)
        if min_height is not None:
            content_height = max(content_height, min_height)

        box.width = border_box
        box.height = (
            content_height
            + paddings["top"]
            + paddings["bottom"]
            + borders["top"]
            + borders["bottom"]
        )
        if style.position == "relative":
            dx = length(decls.get("left"), avail_width) or 0.0
            dy = length(decls.get("top"), 0.0) or 0.0
            _shift(box, dx, dy)
        return box.y + box.height + margins["bottom"]

    def _border_box_width(
        self,
        decls: dict[str, str],
        style: Style,
        avail_width: float,
        margins: dict[str, float],
        paddings: dict[str, float],
        borders: dict[str, float],
    ) -> Optional[float]:
        raw = decls.get("width")
        if raw is None:
            return None
        resolved = resolve_length(raw, avail_width, style.font_size, self.viewport_width)
        if resolved is None:
            return None
        box_sizing = (decls.get("box-sizing") or "content-box").strip().lower()
        if box_sizing == "border-box":
            return max(resolved, 0.0)
        return max(
            resolved + paddings["left"] + paddings["right"] + borders["left"] + borders["right"],
            0.0,
        )

    # -- inline flow ---------------------------------------------------------

    def _flow_words(
        self,
        words: list[str],
        inline: _InlineContext,
        style: Style,
        color: tuple[int, int, int],
    ) -> list[TextFragment]:
        frags: list[TextFragment] = []
        fs = style.font_size
        char_w = fs * CHAR_WIDTH_EM
        line_h = fs * LINE_HEIGHT
        for word in words:
            width = len(word) * char_w
            lead = char_w if inline.line_used else 0.0
            if inline.line_used and not inline.fits(lead + width):
                inline.newline()
                lead = 0.0
            inline.cursor_x += lead
            x, y = inline.put(width, line_h)
            frags.append(TextFragment(word, x, y, width, line_h, color, fs))
        return frags

    def _layout_inline(
        self,
        el: Element,
        style: Style,
        resolver: StyleResolver,
        container: LayoutBox,
        inline: _InlineContext,
    ) -> None:
        """Flow an inline element; its box is the union of its fragments."""
        box = LayoutBox(
            tag=el.tag,
            text_color=style.color,
            font_size=style.font_size,
            visible=style.visibility != "hidden",
        )
        bg = style.get("background-color") or style.get("background")
        if bg:
            box.background = parse_color(bg)
        container.children.append(box)
        own_frags: list[TextFragment] = []
        for child in el.children:
            if isinstance(child, Text):
                words = child.data.split()
                if not words:
                    continue
                frags = self._flow_words(words, inline, style, style.color)
                own_frags.extend(frags)
                box.fragments.extend(frags)
                box.direct_text = (box.direct_text + " " + " ".join(words)).strip()
            elif isinstance(child, Element):
                if child.tag in UNRENDERED_TAGS:
                    continue
                child_style = resolver.computed(child, style)
                if child_style.display == "none":
                    continue
                if child.tag == "br":
                    inline.newline()
                    continue
                if child.tag == "img":
                    self._layout_image(child, child_style, box, inline, inline.width)
                    continue
                self._layout_inline(child, child_style, resolver, box, inline)
        extents: list[tuple[float, float, float, float]] = [
            (f.x, f.y, f.width, f.height) for c in box.iter_boxes() for f in c.fragments
        ]
        extents.extend(
            (c.x, c.y, c.width, c.height) for c in box.children if not c.zero_area
        )
        if extents:
            box.x = min(e[0] for e in extents)
            box.y = min(e[1] for e in extents)
            box.width = max(e[0] + e[2] for e in extents) - box.x
            box.height = max(e[1] + e[3] for e in extents) - box.y
        else:
            box.x = inline.cursor_x
            box.y = inline.line_top

    def _layout_image(
        self,
        el: Element,
        style: Style,
        container: LayoutBox,
        inline: _InlineContext,
        avail_width: float,
    ) -> None:
        decls = style.declarations
        fs = style.font_size
        width = resolve_length(decls.get("width", ""), avail_width, fs, self.viewport_width)
        height = resolve_length(decls.get("height", ""), 0.0, fs, self.viewport_width)
        if width is None and height is not None:
            width = height
        if height is None and width is not None:
            height = width
        width = max(width or 0.0, 0.0)
        height = max(height or 0.0, 0.0)
        box = LayoutBox(
            tag="img",
            text_color=style.color,
            font_size=fs,
            visible=style.visibility != "hidden",
        )
        src = el.attrs.get("src") or ""
        box.substituted = src.startswith(("http:", "https:", "//"))
        container.children.append(box)
        if width > 0:
            if inline.line_used and not inline.fits(width):
                inline.newline()
            box.x, box.y = inline.put(width, height)
        else:
            box.x, box.y = inline.cursor_x, inline.line_top
        box.width = width
        box.height = height
        box.background = (204, 204, 204) if width > 0 and height > 0 else None

    # -- absolute positioning ------------------------------------------------

    def _prepare_absolute(
        self,
        el: Element,
        box: LayoutBox,
        style: Style,
        resolver: StyleResolver,
        avail_width: float,
    ) -> None:
        decls = style.declarations
        fs = style.font_size
        width = resolve_length(decls.get("width", ""), avail_width, fs, self.viewport_width)
        inner_width = width if width is not None else avail_width
        content_height = self._layout_block_children(
            el, box, resolver, style, 0.0, 0.0, inner_width
        )
        height = resolve_length(decls.get("height", ""), 0.0, fs, self.viewport_width)
        box.width = width if width is not None else min(inner_width, avail_width)
        box.height = height if height is not None else content_height
        bg = decls.get("background-color") or decls.get("background")
        if bg:
            box.background = parse_color(bg)
        box.border_widths = _border_widths(decls)
        left = resolve_length(decls.get("left", ""), avail_width, fs, self.viewport_width)
        top = resolve_length(decls.get("top", ""), 0.0, fs, self.viewport_width)
        box.x = left if left is not None else 0.0
        box.y = top if top is not None else 0.0
        dx, dy = box.x, box.y
        for child in box.children:
            _shift(child, dx, dy)
        for frag in box.fragments:
            frag.x += dx
            frag.y += dy


def _shift(box: LayoutBox, dx: float, dy: float) -> None:
    box.x += dx
    box.y += dy
    for frag in box.fragments:
        frag.x += dx
        frag.y += dy
    for child in box.children:
        _shift(child, dx, dy)


def _round_boxes(box: LayoutBox) -> None:
    box.x = round(box.x, 2)
    box.y = round(box.y, 2)
    box.width = round(box.width, 2)
    box.height = round(box.height, 2)
    for child in box.children:
        _round_boxes(child)
