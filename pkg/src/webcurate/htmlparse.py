"""Tolerant HTML tree construction on top of the stdlib tokenizer.

Builds an element tree with standard-recovery behavior:

* fragment input (no explicit ``<html>``) is wrapped in a full
  ``html > head + body`` skeleton;
* explicitly structured input (source carries ``<html>``) gets containers
  synthesized only when content demands them (``head`` for head-only tags,
  ``body`` for everything else), so ``<html><body>...`` stays two levels;
* void elements never take children, ``p``/``li``/``td``-style implied end
  tags are honored, stray end tags are ignored.

Tables are parsed by nesting alone (no foster parenting) and misnested
formatting tags close without the adoption agency; both are acceptable for
corpus work and keep the builder small.
"""

from __future__ import annotations

from html.parser import HTMLParser
from typing import Iterator, Optional

VOID_ELEMENTS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)

HEAD_ONLY = frozenset("base basefont bgsound link meta noscript script style template title".split())

RAW_TEXT = frozenset(("script", "style"))

# Start tags that implicitly close an open <p>.
P_CLOSERS = frozenset(
    (
        "address article aside blockquote center details dialog dir div dl "
        "fieldset figcaption figure footer form h1 h2 h3 h4 h5 h6 header hgroup "
        "hr main menu nav ol p pre section summary table ul"
    ).split()
)

# tag -> (tags it closes, scope boundary tags)
_SIBLING_CLOSERS = {
    "li": ({"li"}, {"ul", "ol", "menu"}),
    "dt": ({"dt", "dd"}, {"dl"}),
    "dd": ({"dt", "dd"}, {"dl"}),
    "option": ({"option"}, {"select", "optgroup", "datalist"}),
    "optgroup": ({"option", "optgroup"}, {"select"}),
    "tr": ({"tr", "td", "th"}, {"table", "thead", "tbody", "tfoot"}),
    "td": ({"td", "th"}, {"tr", "table"}),
    "th": ({"td", "th"}, {"tr", "table"}),
    "thead": ({"tr", "td", "th", "caption", "colgroup"}, {"table"}),
    "tbody": ({"tr", "td", "th", "thead", "caption", "colgroup"}, {"table"}),
    "tfoot": ({"tr", "td", "th", "tbody", "thead", "caption", "colgroup"}, {"table"}),
}


class Node:
    __slots__ = ("parent",)

    def __init__(self) -> None:
        self.parent: Optional[Element] = None


class Text(Node):
    __slots__ = ("data",)

    def __init__(self, data: str) -> None:
        super().__init__()
        self.data = data

    def __repr__(self) -> str:
        return f"Text({self.data!r})"


class Comment(Node):
    __slots__ = ("data",)

    def __init__(self, data: str) -> None:
        super().__init__()
        self.data = data

    def __repr__(self) -> str:
        return f"Comment({self.data!r})"


class Element(Node):
    __slots__ = ("tag", "attrs", "children", "synthesized")

    def __init__(self, tag: str, attrs: Optional[dict[str, str]] = None, *, synthesized: bool = False) -> None:
        super().__init__()
        self.tag = tag
        self.attrs: dict[str, str] = attrs or {}
        self.children: list[Node] = []
        self.synthesized = synthesized

    def append(self, node: Node) -> None:
        node.parent = self
        self.children.append(node)

    def remove(self, node: Node) -> None:
        self.children.remove(node)
        node.parent = None

    def child_elements(self) -> list["Element"]:
        return [c for c in self.children if isinstance(c, Element)]

    def iter_elements(self) -> Iterator["Element"]:
        """Yield this element and all element descendants in document order."""
        yield self
        for child in self.children:
            if isinstance(child, Element):
                yield from child.iter_elements()

    def direct_text(self) -> str:
        """Concatenated immediate text children, whitespace-collapsed."""
        parts = [c.data for c in self.children if isinstance(c, Text)]
        return " ".join(" ".join(parts).split())

    def raw_text(self) -> str:
        """Immediate text children verbatim (for style/script content)."""
        return "".join(c.data for c in self.children if isinstance(c, Text))

    def all_text(self) -> str:
        """All descendant text in document order, whitespace-collapsed."""
        parts: list[str] = []

        def walk(el: Element) -> None:
            for child in el.children:
                if isinstance(child, Text):
                    parts.append(child.data)
                elif isinstance(child, Element):
                    walk(child)

        walk(self)
        return " ".join(" ".join(parts).split())

    def __repr__(self) -> str:
        return f"<{self.tag} {self.attrs!r} children={len(self.children)}>"


class Document:
    """Parse result: the html root plus document-level stray nodes."""

    def __init__(self) -> None:
        self.html: Optional[Element] = None
        self.leading: list[Node] = []  # comments/doctype junk outside <html>
        self.source_element_count = 0
        self.has_source_text = False

    @property
    def is_empty(self) -> bool:
        return self.source_element_count == 0 and not self.has_source_text


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.doc = Document()
        self.stack: list[Element] = []
        self.explicit_html = False
        self.head_el: Optional[Element] = None
        self.body_el: Optional[Element] = None
        self._head_closed = False

    # -- insertion helpers -------------------------------------------------

    def _top(self) -> Optional[Element]:
        return self.stack[-1] if self.stack else None

    def _ensure_html(self) -> Element:
        if self.doc.html is None:
            html = Element("html", synthesized=True)
            self.doc.html = html
            self.stack.append(html)
            # Fragment input gets the full standard skeleton.
            head = Element("head", synthesized=True)
            html.append(head)
            self.head_el = head
        elif not self.stack:
            # Content after </html>: re-enter the html element.
            self.stack.append(self.doc.html)
        return self.doc.html

    def _ensure_head(self) -> Element:
        self._ensure_html()
        if self.head_el is None:
            head = Element("head", synthesized=True)
            self.doc.html.append(head)
            self.head_el = head
        if self.head_el not in self.stack:
            while self.stack and self.stack[-1] is not self.doc.html:
                self.stack.pop()
            if not self.stack:
                self.stack.append(self.doc.html)
            self.stack.append(self.head_el)
        return self.head_el

    def _ensure_body(self) -> Element:
        self._ensure_html()
        if self._in_head():
            self._close_through(self.head_el)
        self._head_closed = True
        if self.body_el is None:
            body = Element("body", synthesized=True)
            self.doc.html.append(body)
            self.body_el = body
        if self.body_el not in self.stack:
            # Pop anything above html, then make body current again.
            while self.stack and self.stack[-1] is not self.doc.html:
                self.stack.pop()
            if not self.stack:
                self.stack.append(self.doc.html)
            self.stack.append(self.body_el)
        return self.body_el

    def _in_head(self) -> bool:
        return self.head_el is not None and self.head_el in self.stack

    def _close_through(self, el: Element) -> None:
        while self.stack:
            popped = self.stack.pop()
            if popped is el:
                return

    def _close_implied(self, tag: str) -> None:
        top = self._top()
        if top is not None and top.tag == "p" and tag in P_CLOSERS:
            self.stack.pop()
            top = self._top()
        closer = _SIBLING_CLOSERS.get(tag)
        if closer is None:
            return
        closes, scope = closer
        for i in range(len(self.stack) - 1, -1, -1):
            t = self.stack[i].tag
            if t in scope:
                break
            if t in closes:
                del self.stack[i:]
                break

    # -- tokenizer callbacks ----------------------------------------------

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        tag = tag.lower()
        attr_map: dict[str, str] = {}
        for name, value in attrs:
            name = name.lower()
            if name not in attr_map:  # first occurrence wins
                attr_map[name] = value if value is not None else ""

        self.doc.source_element_count += 1

        if tag == "html":
            if self.doc.html is None:
                html = Element("html", attr_map)
                self.doc.html = html
                self.stack.append(html)
                self.explicit_html = True
            return
        if tag == "head":
            self._ensure_html()
            if self.head_el is None:
                head = Element("head", attr_map)
                self.doc.html.append(head)
                self.head_el = head
                self.stack.append(head)
            return
        if tag == "body":
            self._ensure_html()
            if self._in_head():
                self._close_through(self.head_el)
                self._head_closed = True
            if self.body_el is None:
                body = Element("body", attr_map)
                self.doc.html.append(body)
                self.body_el = body
                while self.stack and self.stack[-1] is not self.doc.html:
                    self.stack.pop()
                self.stack.append(body)
            return

        self._ensure_html()

        if tag in HEAD_ONLY:
            if not self._in_head() and self.body_el is None and not self._head_closed:
                # Head-only content before the body: route it into the head.
                self._ensure_head()
            # Otherwise insert in place (script/style are legal in body).
            if not self._in_head() and (self.body_el is None or self.body_el not in self.stack):
                self._ensure_body()
        else:
            if self._in_head():
                self._close_through(self.head_el)
                self._head_closed = True
            if self.body_el is None or self.body_el not in self.stack:
                self._ensure_body()

        self._close_implied(tag)
        parent = self._top() or self._ensure_body()
        el = Element(tag, attr_map)
        parent.append(el)
        if tag not in VOID_ELEMENTS:
            self.stack.append(el)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        # <div/> has no special meaning in HTML for non-void elements.
        self.handle_starttag(tag, attrs)
        if tag.lower() not in VOID_ELEMENTS and tag.lower() not in ("html", "head", "body"):
            self.handle_endtag(tag)

    def handle_endtag(self, tag: str) -> None:
        tag = tag.lower()
        if tag == "html":
            while self.stack:
                self.stack.pop()
            return
        if tag == "head":
            if self.head_el is not None and self.head_el in self.stack:
                self._close_through(self.head_el)
            self._head_closed = True
            return
        if tag == "body":
            if self.body_el is not None and self.body_el in self.stack:
                self._close_through(self.body_el)
            return
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # No matching open tag: ignore.

    def handle_data(self, data: str) -> None:
        if not data:
            return
        top = self._top()
        if top is not None and top.tag in RAW_TEXT:
            top.append(Text(data))
            return
        if not data.strip():
            # Whitespace between structural tags is insignificant; inside
            # body content it is preserved.
            if top is None or top.tag in ("html", "head") or (top is self.body_el and not top.children):
                return
            top.append(Text(data))
            return
        self.doc.has_source_text = True
        if top is None or top.tag == "html" or top is self.head_el:
            self._ensure_body()
            top = self._top()
        top.append(Text(data))

    def handle_comment(self, data: str) -> None:
        top = self._top()
        if top is None:
            if self.doc.html is not None:
                self.doc.html.append(Comment(data))
            else:
                self.doc.leading.append(Comment(data))
            return
        top.append(Comment(data))

    def handle_decl(self, decl: str) -> None:  # <!DOCTYPE ...>
        pass

    def finish(self) -> Document:
        self.close()
        if self.doc.html is not None and not self.doc.is_empty:
            if self.head_el is None and not self.explicit_html:
                head = Element("head", synthesized=True)
                self.doc.html.children.insert(0, head)
                head.parent = self.doc.html
                self.head_el = head
            if self.body_el is None and not self.explicit_html:
                self._ensure_body()
        self.stack.clear()
        return self.doc


def parse_document(html: str) -> Document:
    """Parse HTML text into a Document with standard recovery."""
    builder = _TreeBuilder()
    builder.feed(html)
    return builder.finish()


_ESCAPE_TEXT = {"&": "&amp;", "<": "&lt;", ">": "&gt;"}
_ESCAPE_ATTR = {"&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;"}


def _escape(value: str, table: dict[str, str]) -> str:
    for ch, rep in table.items():
        value = value.replace(ch, rep)
    return value


def serialize(node: Node) -> str:
    """Render a node back to HTML text, byte-stable under re-parsing."""
    parts: list[str] = []
    _serialize_into(node, parts)
    return "".join(parts)


def _serialize_into(node: Node, out: list[str]) -> None:
    if isinstance(node, Text):
        parent = node.parent
        if parent is not None and parent.tag in RAW_TEXT:
            out.append(node.data)
        else:
            out.append(_escape(node.data, _ESCAPE_TEXT))
        return
    if isinstance(node, Comment):
        out.append(f"<!--{node.data}-->")
        return
    assert isinstance(node, Element)
    attrs = ""
    for name, value in node.attrs.items():
        if value == "":
            attrs += f" {name}"
        else:
            attrs += f' {name}="{_escape(value, _ESCAPE_ATTR)}"'
    out.append(f"<{node.tag}{attrs}>")
    if node.tag in VOID_ELEMENTS:
        return
    for child in node.children:
        _serialize_into(child, out)
    out.append(f"</{node.tag}>")
