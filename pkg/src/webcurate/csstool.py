"""CSS rule splitting, a selector-matching subset, and declaration parsing.

Supported selectors: type, ``*``, ``.class``, ``#id``, ``[attr]``,
``[attr=value]``, descendant and child combinators, and comma grouping.
Anything else (pseudo-classes/elements, sibling combinators, attribute
operators) raises SelectorUnsupported; callers decide what a non-answer
means (the purifier keeps such rules).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import SelectorUnsupported
from .htmlparse import Element

# -- stylesheet splitting ----------------------------------------------------


@dataclass
class StyleRule:
    selector_text: str
    body: str

    @property
    def text(self) -> str:
        return f"{self.selector_text} {{{self.body}}}"


@dataclass
class AtRule:
    """``@media``-style block (with nested rules) or ``@import``-style statement."""

    name: str
    prelude: str
    rules: list[StyleRule] = field(default_factory=list)
    raw_body: Optional[str] = None  # None for statements

    @property
    def text(self) -> str:
        head = f"@{self.name} {self.prelude}".rstrip()
        if self.raw_body is None:
            return head + ";"
        return f"{head} {{{self.raw_body}}}"


CssItem = Union[StyleRule, AtRule]


def strip_css_comments(css: str) -> tuple[str, int]:
    """Remove ``/* ... */`` comments; returns (clean text, removed count)."""
    out: list[str] = []
    i = 0
    n = len(css)
    removed = 0
    while i < n:
        ch = css[i]
        if ch == "/" and i + 1 < n and css[i + 1] == "*":
            end = css.find("*/", i + 2)
            removed += 1
            i = n if end == -1 else end + 2
            continue
        if ch in "\"'":
            j = _skip_string(css, i)
            out.append(css[i:j])
            i = j
            continue
        out.append(ch)
        i += 1
    return "".join(out), removed


def _skip_string(css: str, i: int) -> int:
    quote = css[i]
    j = i + 1
    n = len(css)
    while j < n:
        if css[j] == "\\":
            j += 2
            continue
        if css[j] == quote:
            return j + 1
        j += 1
    return n


def _find_balanced(css: str, start: int) -> int:
    """Index just past the ``}`` matching the ``{`` at ``start``."""
    depth = 0
    i = start
    n = len(css)
    while i < n:
        ch = css[i]
        if ch in "\"'":
            i = _skip_string(css, i)
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return n


def parse_stylesheet(css: str) -> list[CssItem]:
    """Split a stylesheet into rules and at-rules (comments must be gone)."""
    items: list[CssItem] = []
    i = 0
    n = len(css)
    while i < n:
        while i < n and css[i].isspace():
            i += 1
        if i >= n:
            break
        if css[i] == "@":
            j = i
            while j < n and css[j] not in "{;":
                if css[j] in "\"'":
                    j = _skip_string(css, j)
                else:
                    j += 1
            head = css[i:j].strip()
            match = re.match(r"@([\w-]+)\s*(.*)", head, re.S)
            name = match.group(1).lower() if match else ""
            prelude = match.group(2).strip() if match else ""
            if j >= n or css[j] == ";":
                items.append(AtRule(name, prelude))
                i = j + 1
                continue
            end = _find_balanced(css, j)
            body = css[j + 1 : end - 1]
            at = AtRule(name, prelude, raw_body=body.strip())
            if name in ("media", "supports"):
                at.rules = [r for r in parse_stylesheet(body) if isinstance(r, StyleRule)]
            items.append(at)
            i = end
            continue
        j = i
        while j < n and css[j] != "{":
            if css[j] in "\"'":
                j = _skip_string(css, j)
            else:
                j += 1
        if j >= n:
            break  # trailing junk without a block
        end = _find_balanced(css, j)
        selector = css[i:j].strip()
        body = css[j + 1 : end - 1].strip()
        if selector:
            items.append(StyleRule(selector, body))
        i = end
    return items


# -- declarations ------------------------------------------------------------


def parse_declarations(body: str) -> list[tuple[str, str, bool]]:
    """(property, value, important) triples, properties lowercased."""
    decls: list[tuple[str, str, bool]] = []
    for chunk in _split_outside_strings(body, ";"):
        chunk = chunk.strip()
        if not chunk or ":" not in chunk:
            continue
        prop, _, value = chunk.partition(":")
        value = value.strip()
        important = False
        if value.lower().endswith("!important"):
            important = True
            value = value[: -len("!important")].rstrip().rstrip("!").rstrip()
        decls.append((prop.strip().lower(), value, important))
    return decls


def _split_outside_strings(text: str, sep: str) -> list[str]:
    parts: list[str] = []
    buf: list[str] = []
    i = 0
    n = len(text)
    depth = 0
    while i < n:
        ch = text[i]
        if ch in "\"'":
            j = _skip_string(text, i)
            buf.append(text[i:j])
            i = j
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        if ch == sep and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    parts.append("".join(buf))
    return parts


# -- selector subset ---------------------------------------------------------


@dataclass
class Compound:
    type_name: Optional[str] = None  # None means no type constraint; "*" explicit
    classes: list[str] = field(default_factory=list)
    ids: list[str] = field(default_factory=list)
    attrs: list[tuple[str, Optional[str]]] = field(default_factory=list)

    def matches(self, el: Element) -> bool:
        if self.type_name not in (None, "*") and el.tag != self.type_name:
            return False
        if self.classes:
            have = set((el.attrs.get("class") or "").split())
            if not all(c in have for c in self.classes):
                return False
        for wanted in self.ids:
            if el.attrs.get("id") != wanted:
                return False
        for name, value in self.attrs:
            if name not in el.attrs:
                return False
            if value is not None and el.attrs.get(name) != value:
                return False
        return True


@dataclass
class ComplexSelector:
    # compounds right-to-left with the combinator that links each to the next
    # ancestor compound: " " (descendant) or ">" (child)
    compounds: list[Compound]
    combinators: list[str]  # len == len(compounds) - 1

    def specificity(self) -> tuple[int, int, int]:
        a = sum(len(c.ids) for c in self.compounds)
        b = sum(len(c.classes) + len(c.attrs) for c in self.compounds)
        c = sum(1 for c in self.compounds if c.type_name not in (None, "*"))
        return (a, b, c)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<child>>)
  | (?P<comma>,)
  | (?P<star>\*)
  | (?P<hash>\#[-\w-￿]+)
  | (?P<class>\.[-\w-￿]+)
  | (?P<attr>\[\s*[-\w]+\s*(?:=\s*(?:"[^"]*"|'[^']*'|[^\]\s]+)\s*)?\])
  | (?P<type>[a-zA-Z][-\w]*)
""",
    re.X,
)

_ATTR_INNER = re.compile(
    r"""\[\s*(?P<name>[-\w]+)\s*(?:=\s*(?P<val>"[^"]*"|'[^']*'|[^\]\s]+)\s*)?\]""",
    re.X,
)


def parse_selector_group(selector_text: str) -> list[ComplexSelector]:
    """Parse a comma-separated selector group within the supported subset."""
    selectors: list[ComplexSelector] = []
    for part in _split_outside_strings(selector_text, ","):
        part = part.strip()
        if not part:
            raise SelectorUnsupported(f"empty selector in group: {selector_text!r}")
        selectors.append(_parse_complex(part))
    return selectors


def _parse_complex(text: str) -> ComplexSelector:
    compounds: list[Compound] = []
    combinators: list[str] = []
    current: Optional[Compound] = None
    pending: Optional[str] = None  # combinator awaiting the next compound
    pos = 0
    n = len(text)
    while pos < n:
        match = _TOKEN.match(text, pos)
        if match is None:
            raise SelectorUnsupported(f"unsupported selector syntax at {text[pos:pos+12]!r} in {text!r}")
        pos = match.end()
        kind = match.lastgroup
        token = match.group()
        if kind == "ws":
            if current is not None:
                pending = " " if pending is None else pending
            continue
        if kind == "child":
            if current is None:
                raise SelectorUnsupported(f"combinator without left side in {text!r}")
            pending = ">"
            continue
        if kind == "comma":
            raise SelectorUnsupported("comma inside complex selector")
        # simple-selector tokens start or extend a compound
        if current is None or pending is not None:
            if current is not None:
                compounds.append(current)
                combinators.append(pending or " ")
            current = Compound()
            pending = None
        if kind == "star":
            current.type_name = "*"
        elif kind == "type":
            if current.type_name is not None:
                raise SelectorUnsupported(f"two type selectors in one compound: {text!r}")
            current.type_name = token.lower()
        elif kind == "hash":
            current.ids.append(token[1:])
        elif kind == "class":
            current.classes.append(token[1:])
        elif kind == "attr":
            inner = _ATTR_INNER.match(token)
            assert inner is not None
            value = inner.group("val")
            if value is not None and value[:1] in "\"'":
                value = value[1:-1]
            current.attrs.append((inner.group("name").lower(), value))
    if current is None:
        raise SelectorUnsupported(f"no compound selector in {text!r}")
    compounds.append(current)
    # stored left-to-right; matching walks right-to-left
    return ComplexSelector(compounds, combinators)


def _complex_matches(sel: ComplexSelector, el: Element, parents: dict[int, Optional[Element]]) -> bool:
    idx = len(sel.compounds) - 1
    if not sel.compounds[idx].matches(el):
        return False

    def walk(compound_idx: int, node: Element) -> bool:
        if compound_idx == 0:
            return True
        combinator = sel.combinators[compound_idx - 1]
        target = sel.compounds[compound_idx - 1]
        ancestor = parents.get(id(node))
        if combinator == ">":
            if ancestor is None:
                return False
            return target.matches(ancestor) and walk(compound_idx - 1, ancestor)
        while ancestor is not None:
            if target.matches(ancestor) and walk(compound_idx - 1, ancestor):
                return True
            ancestor = parents.get(id(ancestor))
        return False

    return walk(idx, el)


def _parent_map(root: Element) -> dict[int, Optional[Element]]:
    parents: dict[int, Optional[Element]] = {id(root): None}
    for el in root.iter_elements():
        for child in el.child_elements():
            parents[id(child)] = el
    return parents


def match_selector(selector_text: str, root: Element) -> bool:
    """True iff at least one element under root matches any selector in the group."""
    group = parse_selector_group(selector_text)
    parents = _parent_map(root)
    for el in root.iter_elements():
        for sel in group:
            if _complex_matches(sel, el, parents):
                return True
    return False


def matching_elements(selector_text: str, root: Element) -> list[Element]:
    group = parse_selector_group(selector_text)
    parents = _parent_map(root)
    out = []
    for el in root.iter_elements():
        if any(_complex_matches(sel, el, parents) for sel in group):
            out.append(el)
    return out


def iter_style_rules(items: Iterable[CssItem]) -> Iterable[StyleRule]:
    for item in items:
        if isinstance(item, StyleRule):
            yield item
        elif isinstance(item, AtRule):
            yield from item.rules
