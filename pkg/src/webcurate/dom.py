"""Simplified tag-only DOM model, subtree recall metric, and code statistics."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Protocol

from .errors import EmptyDocument
from .htmlparse import Element, parse_document

_NAME_JUNK = re.compile(r"[|,\x00-\x1f\x7f]")


def _clean_name(tag: str) -> str:
    return _NAME_JUNK.sub("", tag.lower())


@dataclass(frozen=True)
class TagTree:
    """Element tag names only; no text, comment, or attribute nodes."""

    name: str
    children: tuple["TagTree", ...] = ()

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def depth(self) -> int:
        """Longest root-to-leaf path, root counted as depth 1."""
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def to_json(self) -> dict:
        return {"name": self.name, "children": [c.to_json() for c in self.children]}

    @classmethod
    def from_json(cls, data: dict) -> "TagTree":
        return cls(data["name"], tuple(cls.from_json(c) for c in data.get("children", [])))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "TagTree":
        return cls.from_json(json.loads(text))


def tag_tree_from_element(el: Element) -> TagTree:
    children = tuple(
        tag_tree_from_element(c) for c in el.child_elements() if _clean_name(c.tag)
    )
    return TagTree(_clean_name(el.tag), children)


def parse_tag_tree(html: str) -> TagTree:
    """Parse HTML into the element-only tree rooted at the html element.

    Standard recovery supplies the html root (and, for fragment input, the
    head/body skeleton). Raises EmptyDocument when the source holds neither
    elements nor text.
    """
    doc = parse_document(html)
    if doc.html is None or doc.is_empty:
        raise EmptyDocument("no elements after recovery")
    return tag_tree_from_element(doc.html)


def subtree_key(node: TagTree) -> str:
    """Canonical string for the 1-height subtree rooted at ``node``.

    Parent name, a ``|``, then the ordered child names joined by ``,``.
    Names are pre-sanitized so neither separator can occur inside them.
    """
    return node.name + "|" + ",".join(c.name for c in node.children)


def one_height_subtrees(tree: TagTree) -> set[str]:
    """Deduplicated keys of every internal node's parent+children sequence."""
    keys: set[str] = set()

    def traverse(node: TagTree) -> None:
        if node.children:
            keys.add(subtree_key(node))
        for child in node.children:
            traverse(child)

    traverse(tree)
    return keys


def tree_bleu(candidate: TagTree, reference: TagTree) -> float:
    """Recall of the reference's 1-height subtrees in the candidate.

    |S(candidate) ∩ S(reference)| / |S(reference)|. An empty reference set
    scores 1.0 against an equally bare candidate and 0.0 otherwise.
    """
    cand = one_height_subtrees(candidate)
    ref = one_height_subtrees(reference)
    if not ref:
        return 1.0 if not cand else 0.0
    return len(cand & ref) / len(ref)


class TokenCounter(Protocol):
    def count(self, text: str) -> int: ...


@dataclass
class CodeStats:
    token_len: int
    tag_count: int
    unique_tag_count: int
    dom_depth: int

    def to_json(self) -> dict:
        return {
            "token_len": self.token_len,
            "tag_count": self.tag_count,
            "unique_tag_count": self.unique_tag_count,
            "dom_depth": self.dom_depth,
        }


def tree_stats(tree: TagTree) -> tuple[int, int, int]:
    """(tag_count, unique_tag_count, dom_depth) for a TagTree."""
    names: list[str] = []

    def walk(node: TagTree) -> None:
        names.append(node.name)
        for child in node.children:
            walk(child)

    walk(tree)
    return len(names), len(set(names)), tree.depth()


def code_stats(html: str, tokenizer: TokenCounter) -> CodeStats:
    """Element counts, distinct tag names, DOM depth, and token length."""
    tree = parse_tag_tree(html)
    tag_count, unique, depth = tree_stats(tree)
    return CodeStats(
        token_len=tokenizer.count(html),
        tag_count=tag_count,
        unique_tag_count=unique,
        dom_depth=depth,
    )
