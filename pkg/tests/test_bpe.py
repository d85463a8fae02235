import json

from hypothesis import given
from hypothesis import strategies as st

from webcurate.bpe import ByteLevelBpe, bytes_to_unicode, pretokenize


def test_pretokenize_reference_cases():
    # Frozen from the canonical byte-level split behavior.
    assert pretokenize("Hello  world, don't!") == ["Hello", " ", " world", ",", " don", "'t", "!"]
    assert pretokenize("a b") == ["a", " b"]
    assert pretokenize("a\n\nb") == ["a", "\n", "\n", "b"]
    assert pretokenize("x42 7") == ["x", "42", " 7"]
    assert pretokenize("<div>") == ["<", "div", ">"]
    assert pretokenize("tail   ") == ["tail", "   "]
    assert pretokenize("") == []


def test_pretokenize_lossless():
    for text in ["<html><body>hi</body></html>", "  spaced\tout\n", "naïve café 123", "it's"]:
        assert "".join(pretokenize(text)) == text


@given(st.text(max_size=200))
def test_pretokenize_lossless_property(text):
    assert "".join(pretokenize(text)) == text


@given(st.text(alphabet=st.characters(codec="utf-8"), max_size=120))
def test_bundled_count_equals_utf8_length(text):
    # With no merges, every UTF-8 byte is exactly one token.
    assert ByteLevelBpe.bundled().count(text) == len(text.encode("utf-8"))


def test_byte_map_is_reversible():
    mapping = bytes_to_unicode()
    assert len(mapping) == 256
    assert len(set(mapping.values())) == 256
    assert mapping[ord("a")] == "a"
    assert mapping[ord(" ")] == "Ġ"


def _tiny_bpe(tmp_path, merges):
    symbols = sorted(bytes_to_unicode().values())
    vocab = {s: i for i, s in enumerate(symbols)}
    for a, b in merges:
        vocab.setdefault(a + b, len(vocab))
    (tmp_path / "vocab.json").write_text(json.dumps(vocab), encoding="utf-8")
    lines = ["#version: test"] + [f"{a} {b}" for a, b in merges]
    (tmp_path / "merges.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return ByteLevelBpe.from_files(tmp_path / "vocab.json", tmp_path / "merges.txt")


def test_merge_order_hand_computed(tmp_path):
    bpe = _tiny_bpe(tmp_path, [("h", "e"), ("he", "l"), ("l", "o")])
    # hello -> he l l o -> hel l o -> hel lo
    assert bpe.count("hello") == 2
    ids = bpe.encode("hello")
    assert ids == [bpe.vocab["hel"], bpe.vocab["lo"]]


def test_merge_priority_beats_position(tmp_path):
    # (l,o) ranks above (h,e): "helo" -> h e lo -> he lo? No: (h,e) still merges after.
    bpe = _tiny_bpe(tmp_path, [("l", "o"), ("h", "e")])
    assert bpe.encode("helo") == [bpe.vocab["he"], bpe.vocab["lo"]]


def test_space_prefixed_word_merges(tmp_path):
    space = "Ġ"
    bpe = _tiny_bpe(tmp_path, [(space, "h"), (space + "h", "i")])
    assert bpe.count("hi hi") == 3  # [h, i, Ġhi]


def test_bundled_counts_bytes():
    bpe = ByteLevelBpe.bundled()
    assert bpe.count("<html>") == 6
    assert bpe.count("é") == 2  # two UTF-8 bytes, no merges
    assert bpe.count("") == 0


def test_count_additive_over_pretokens():
    bpe = ByteLevelBpe.bundled()
    assert bpe.count("one two") == bpe.count("one") + bpe.count(" two")
