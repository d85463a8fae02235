import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from webcurate.dom import (
    TagTree,
    code_stats,
    one_height_subtrees,
    parse_tag_tree,
    tree_bleu,
    tree_stats,
)
from webcurate.errors import EmptyDocument


def t(name, *children):
    return TagTree(name, tuple(children))


def brute_force_subtrees(tree):
    """Independent oracle: parent+children name sequences as tuples."""
    found = set()
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.children:
            found.add((node.name,) + tuple(c.name for c in node.children))
        stack.extend(node.children)
    return found


def brute_force_tree_bleu(candidate, reference):
    cand = brute_force_subtrees(candidate)
    ref = brute_force_subtrees(reference)
    if not ref:
        return 1.0 if not cand else 0.0
    return len(cand & ref) / len(ref)


def random_tree(rng, max_nodes=12):
    names = ["div", "p", "span", "a", "ul", "li"]
    budget = rng.randint(1, max_nodes)

    def build(remaining):
        node_name = rng.choice(names)
        children = []
        used = 1
        while remaining - used > 0 and rng.random() < 0.6:
            child, spent = build(remaining - used)
            children.append(child)
            used += spent
        return t(node_name, *children), used

    tree, _ = build(budget)
    return tree


class TestOneHeightSubtrees:
    def test_leaf_has_none(self):
        assert one_height_subtrees(t("div")) == set()

    def test_hand_run(self):
        tree = t("html", t("body", t("div", t("p")), t("div")))
        assert one_height_subtrees(tree) == {"html|body", "body|div,div", "div|p"}

    def test_duplicate_leaf_children_dedupe(self):
        tree = t("html", t("body", t("div"), t("div")))
        assert one_height_subtrees(tree) == {"html|body", "body|div,div"}

    def test_size_bounded_by_internal_nodes(self):
        rng = random.Random(7)
        for _ in range(200):
            tree = random_tree(rng)
            internal = len(brute_force_subtrees(tree))
            assert len(one_height_subtrees(tree)) <= max(internal, 1)

    def test_child_order_significant(self):
        ab = t("div", t("a"), t("b"))
        ba = t("div", t("b"), t("a"))
        assert one_height_subtrees(ab) != one_height_subtrees(ba)


class TestTreeBleu:
    def test_identity(self):
        tree = t("html", t("body", t("div", t("p"))))
        assert tree_bleu(tree, tree) == 1.0

    def test_worked_two_thirds(self):
        candidate = t("html", t("body", t("div", t("p")), t("div")))
        reference = t("html", t("body", t("div", t("p"))))
        assert one_height_subtrees(candidate) == {"html|body", "body|div,div", "div|p"}
        assert one_height_subtrees(reference) == {"html|body", "body|div", "div|p"}
        assert tree_bleu(candidate, reference) == pytest.approx(2 / 3)
        assert brute_force_tree_bleu(candidate, reference) == pytest.approx(2 / 3)

    def test_disjoint(self):
        assert tree_bleu(t("html", t("body")), t("div", t("span"))) == 0.0

    def test_empty_reference_cases(self):
        assert tree_bleu(t("div"), t("span")) == 1.0
        assert tree_bleu(t("div", t("p")), t("span")) == 0.0

    def test_oracle_equivalence_random_pairs(self):
        rng = random.Random(42)
        for _ in range(500):
            a, b = random_tree(rng), random_tree(rng)
            assert tree_bleu(a, b) == brute_force_tree_bleu(a, b)

    def test_unmatched_candidate_subtree_never_changes_score(self):
        rng = random.Random(3)
        checked = 0
        while checked < 100:
            a, b = random_tree(rng), random_tree(rng)
            if not brute_force_subtrees(b):
                continue  # the 0/0 convention is exercised separately
            base = tree_bleu(a, b)
            wider = t("zzz", a)  # grafts one new unmatched subtree above a
            assert tree_bleu(wider, b) == base
            checked += 1

    def test_range(self):
        rng = random.Random(11)
        for _ in range(200):
            a, b = random_tree(rng), random_tree(rng)
            assert 0.0 <= tree_bleu(a, b) <= 1.0


_names = st.sampled_from(["div", "p", "span", "a", "ul", "li"])
_trees = st.recursive(
    st.builds(TagTree, _names, st.just(())),
    lambda children: st.builds(TagTree, _names, st.lists(children, max_size=4).map(tuple)),
    max_leaves=12,
)


class TestTreeBleuProperties:
    @given(_trees, _trees)
    def test_matches_brute_force(self, a, b):
        assert tree_bleu(a, b) == brute_force_tree_bleu(a, b)

    @given(_trees)
    def test_identity_is_one(self, tree):
        assert tree_bleu(tree, tree) == 1.0

    @given(_trees, _trees)
    def test_within_unit_interval(self, a, b):
        assert 0.0 <= tree_bleu(a, b) <= 1.0


class TestParseTagTree:
    def test_direct_structure(self):
        tree = parse_tag_tree("<html><body><p>x</p></body></html>")
        assert tree == t("html", t("body", t("p")))

    def test_fragment_recovery_builds_skeleton(self):
        tree = parse_tag_tree("<p>x</p>")
        assert tree == t("html", t("head"), t("body", t("p")))

    def test_comment_only_is_empty(self):
        with pytest.raises(EmptyDocument):
            parse_tag_tree("<!-- c -->")

    def test_whitespace_only_is_empty(self):
        with pytest.raises(EmptyDocument):
            parse_tag_tree("   \n ")

    def test_tags_lowercased(self):
        tree = parse_tag_tree("<HTML><BODY><DIV></DIV></BODY></HTML>")
        assert tree == t("html", t("body", t("div")))

    def test_head_content_routed(self):
        tree = parse_tag_tree("<title>x</title><p>y</p>")
        assert tree == t("html", t("head", t("title")), t("body", t("p")))

    def test_depth_invariant_under_comments_and_text(self):
        plain = parse_tag_tree("<html><body><div><p>a</p></div></body></html>")
        noisy = parse_tag_tree(
            "<html><!-- x --><body>t1<div>t2<!-- y --><p>a<!-- z --></p>t3</div></body></html>"
        )
        assert plain.depth() == noisy.depth()
        assert plain == noisy

    def test_json_round_trip(self):
        tree = parse_tag_tree("<html><body><div><p>hi</p></div></body></html>")
        assert TagTree.loads(tree.dumps()) == tree


class TestCodeStats:
    class CharTokenizer:
        def count(self, text):
            return len(text)

    def test_hand_counted_fixture_one(self):
        html = "<html><head></head><body><div><p>hi</p></div></body></html>"
        stats = code_stats(html, self.CharTokenizer())
        assert (stats.tag_count, stats.unique_tag_count, stats.dom_depth) == (5, 5, 4)
        assert stats.token_len == len(html)

    def test_hand_counted_fixture_two(self):
        html = "<html><body><a></a><a></a></body></html>"
        stats = code_stats(html, self.CharTokenizer())
        assert (stats.tag_count, stats.unique_tag_count, stats.dom_depth) == (4, 3, 3)

    def test_unique_bounded_by_total(self):
        rng = random.Random(5)
        for _ in range(50):
            tree = random_tree(rng)
            total, unique, depth = tree_stats(tree)
            assert unique <= total
            assert depth >= 1

    def test_empty_propagates(self):
        with pytest.raises(EmptyDocument):
            code_stats("<!-- nothing -->", self.CharTokenizer())
