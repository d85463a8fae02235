"""Byte-level BPE token counting.

Loads the standard ``vocab.json`` + ``merges.txt`` file pair. The bundled
asset is a bare byte-level vocabulary (256 symbols, no merges), a stand-in
that keeps counts well-defined offline; point ``from_files`` at a real
vocabulary (for example the GPT-2 release files) to reproduce published
token lengths.
"""

from __future__ import annotations

import json
import unicodedata
from functools import lru_cache
from importlib import resources
from pathlib import Path


@lru_cache(maxsize=1)
def bytes_to_unicode() -> dict[int, str]:
    """Reversible byte -> printable-unicode mapping used by byte-level BPE."""
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch).startswith("L")


def _is_number(ch: str) -> bool:
    return unicodedata.category(ch).startswith("N")


_CONTRACTIONS = ("'s", "'t", "'re", "'ve", "'m", "'ll", "'d")


def _match_at(text: str, i: int, n: int) -> int:
    """End index of the pre-token starting at ``i``.

    Mirrors the byte-level BPE split pattern: contractions, then optionally
    space-prefixed letter/number/symbol runs, then whitespace runs whose
    last space (when one precedes a word) is left for the next token.
    """
    for con in _CONTRACTIONS:
        if text.startswith(con, i):
            return i + len(con)
    k = i + 1 if text[i] == " " and i + 1 < n else i
    ch = text[k] if k < n else ""
    if ch and _is_letter(ch):
        m = k
        while m < n and _is_letter(text[m]):
            m += 1
        return m
    if ch and _is_number(ch):
        m = k
        while m < n and _is_number(text[m]):
            m += 1
        return m
    if ch and not ch.isspace():
        m = k
        while m < n and not text[m].isspace() and not _is_letter(text[m]) and not _is_number(text[m]):
            m += 1
        return m
    m = i
    while m < n and text[m].isspace():
        m += 1
    if m < n and m - i > 1:
        return m - 1  # leave the final space for the following token
    return m


def pretokenize(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        j = _match_at(text, i, n)
        out.append(text[i:j])
        i = j
    return out


class ByteLevelBpe:
    """Byte-level BPE encoder over a vocab/merges pair."""

    def __init__(self, vocab: dict[str, int], merges: list[tuple[str, str]]):
        self.vocab = vocab
        self.ranks = {pair: i for i, pair in enumerate(merges)}
        self._byte_map = bytes_to_unicode()
        self._cache: dict[str, list[str]] = {}

    @classmethod
    def from_files(cls, vocab_path: str | Path, merges_path: str | Path) -> "ByteLevelBpe":
        with open(vocab_path, encoding="utf-8") as fh:
            vocab = json.load(fh)
        merges: list[tuple[str, str]] = []
        with open(merges_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                a, _, b = line.partition(" ")
                if b:
                    merges.append((a, b))
        return cls(vocab, merges)

    @classmethod
    def bundled(cls) -> "ByteLevelBpe":
        root = resources.files("webcurate").joinpath("assets/bpe")
        vocab = json.loads(root.joinpath("vocab.json").read_text(encoding="utf-8"))
        merges: list[tuple[str, str]] = []
        for line in root.joinpath("merges.txt").read_text(encoding="utf-8").splitlines():
            if not line or line.startswith("#"):
                continue
            a, _, b = line.partition(" ")
            if b:
                merges.append((a, b))
        return cls(vocab, merges)

    def _bpe(self, token: str) -> list[str]:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        word = list(token)
        while len(word) > 1:
            pairs = {(word[i], word[i + 1]) for i in range(len(word) - 1)}
            best = min(pairs, key=lambda p: self.ranks.get(p, float("inf")))
            if best not in self.ranks:
                break
            merged: list[str] = []
            i = 0
            while i < len(word):
                if i < len(word) - 1 and (word[i], word[i + 1]) == best:
                    merged.append(word[i] + word[i + 1])
                    i += 2
                else:
                    merged.append(word[i])
                    i += 1
            word = merged
        self._cache[token] = word
        return word

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for pretoken in pretokenize(text):
            mapped = "".join(self._byte_map[b] for b in pretoken.encode("utf-8"))
            for piece in self._bpe(mapped):
                if piece in self.vocab:
                    ids.append(self.vocab[piece])
                else:
                    ids.extend(self.vocab[ch] for ch in piece)
        return ids

    def count(self, text: str) -> int:
        return len(self.encode(text))


def write_byte_base_assets(directory: str | Path) -> None:
    """Write the 256-symbol base vocabulary (no merges) to ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    symbols = sorted(bytes_to_unicode().values())
    vocab = {sym: i for i, sym in enumerate(symbols)}
    (directory / "vocab.json").write_text(json.dumps(vocab, ensure_ascii=False), encoding="utf-8")
    (directory / "merges.txt").write_text("#version: byte-base\n", encoding="utf-8")
