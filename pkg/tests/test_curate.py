import pytest

from conftest import png_of
from webcurate.curate import (
    DatasetEntry,
    DedupReport,
    corpus_stats,
    embedding_dedup,
    hash_dedup,
    length_range,
    mean_std,
    partition,
    stats_csv,
    stats_table,
)
from webcurate.services import LocalImageEmbedding


def entry(eid, token_len=1000, score=3.0, shot="", **kw):
    return DatasetEntry(
        id=eid,
        html="<html></html>",
        screenshot_ref=shot,
        layout_ref="",
        score=score,
        token_len=token_len,
        **kw,
    )


@pytest.fixture()
def shots(tmp_path):
    paths = {}
    for name, color in [("a", (0, 0, 0)), ("b", (0, 0, 0)), ("c", (200, 30, 40))]:
        p = tmp_path / f"{name}.png"
        p.write_bytes(png_of(color))
        paths[name] = str(p)
    return paths


class TestHashDedup:
    def test_exact_duplicates_removed(self, shots):
        entries = [
            entry("e1", shot=shots["a"]),
            entry("e2", shot=shots["b"]),  # byte-identical to a
            entry("e3", shot=shots["c"]),
        ]
        report = DedupReport()
        out = hash_dedup(entries, report)
        assert [e.id for e in out] == ["e1", "e3"]
        assert report.exact_duplicates == 1

    def test_all_unique(self, shots, tmp_path):
        d = tmp_path / "d.png"
        d.write_bytes(png_of((9, 9, 9)))
        entries = [entry("e1", shot=shots["a"]), entry("e2", shot=shots["c"]), entry("e3", shot=str(d))]
        assert len(hash_dedup(entries)) == 3

    def test_idempotent(self, shots):
        entries = [entry("e1", shot=shots["a"]), entry("e2", shot=shots["b"])]
        once = hash_dedup(entries)
        twice = hash_dedup(once)
        assert [e.id for e in twice] == [e.id for e in once]

    def test_unreadable_excluded_with_tally(self, shots):
        entries = [entry("e1", shot=shots["a"]), entry("e2", shot="/nope/missing.png")]
        report = DedupReport()
        out = hash_dedup(entries, report)
        assert [e.id for e in out] == ["e1"]
        assert report.unreadable == 1

    def test_first_wins_by_id_order(self, shots):
        entries = [entry("z9", shot=shots["a"]), entry("a1", shot=shots["b"])]
        out = hash_dedup(entries)
        assert [e.id for e in out] == ["a1"]


class TestEmbeddingDedup:
    def test_identical_dropped(self, shots):
        entries = [entry("e1", shot=shots["a"]), entry("e2", shot=shots["b"])]
        report = DedupReport()
        out = embedding_dedup(entries, LocalImageEmbedding(), 0.96, report)
        assert [e.id for e in out] == ["e1"]
        assert report.near_duplicates == 1

    def test_threshold_above_one_keeps_all(self, shots):
        entries = [entry("e1", shot=shots["a"]), entry("e2", shot=shots["b"])]
        out = embedding_dedup(entries, LocalImageEmbedding(), 1.01)
        assert len(out) == 2

    def test_dissimilar_retained(self, shots):
        entries = [entry("e1", shot=shots["a"]), entry("e2", shot=shots["c"])]
        out = embedding_dedup(entries, LocalImageEmbedding(), 0.96)
        assert len(out) == 2

    def test_higher_threshold_retains_superset(self, shots, tmp_path):
        extra = tmp_path / "x.png"
        extra.write_bytes(png_of((1, 1, 1)))  # near-identical to black
        entries = [
            entry("e1", shot=shots["a"]),
            entry("e2", shot=str(extra)),
            entry("e3", shot=shots["c"]),
        ]
        strict = {e.id for e in embedding_dedup(entries, LocalImageEmbedding(), 0.8)}
        loose = {e.id for e in embedding_dedup(entries, LocalImageEmbedding(), 0.999)}
        assert strict <= loose


class TestPartition:
    def make_corpus(self):
        entries = []
        for i in range(30):
            entries.append(entry(f"s{i:03d}", token_len=500 + i, score=4.5))
        for i in range(30):
            entries.append(entry(f"m{i:03d}", token_len=3000 + i, score=4.7))
        for i in range(30):
            entries.append(entry(f"l{i:03d}", token_len=5000 + i, score=5.0))
        for i in range(40):
            entries.append(entry(f"t{i:03d}", token_len=1000 + i, score=3.0))
        return entries

    def test_boundary_sides(self):
        assert length_range(2045) == "short"
        assert length_range(2048) == "short"
        assert length_range(2049) == "mid"
        assert length_range(4096) == "mid"
        assert length_range(4098) == "long"

    def test_spec_examples(self):
        entries = [
            entry("a", token_len=2045, score=4.5),
            entry("b", token_len=2048, score=4.5),
            entry("c", token_len=4098, score=5.0),
        ]
        out, _ = partition(entries, per_split=10, seed=1)
        by_id = {e.id: e.split for e in out}
        assert by_id["a"] == "short"
        assert by_id["b"] == "short"
        assert by_id["c"] == "long"

    def test_low_score_never_in_test(self):
        out, _ = partition(self.make_corpus(), per_split=10, seed=3)
        for e in out:
            if e.split in ("short", "mid", "long"):
                assert e.score > 4.0

    def test_sizes_and_underfull(self):
        out, report = partition(self.make_corpus(), per_split=10, seed=3)
        assert report.per_split["short"] == 10
        assert report.per_split["mid"] == 10
        assert report.per_split["long"] == 10
        out2, report2 = partition(self.make_corpus(), per_split=256, seed=3)
        assert report2.per_split["short"] == 30
        assert report2.underfull["short"] == 30

    def test_deterministic_under_seed(self):
        one, _ = partition(self.make_corpus(), per_split=10, seed=42)
        two, _ = partition(self.make_corpus(), per_split=10, seed=42)
        assert [(e.id, e.split) for e in one] == [(e.id, e.split) for e in two]
        three, _ = partition(self.make_corpus(), per_split=10, seed=43)
        assert [(e.id, e.split) for e in one] != [(e.id, e.split) for e in three]

    def test_partition_is_total_and_disjoint(self):
        out, _ = partition(self.make_corpus(), per_split=10, seed=0)
        assert len(out) == 130
        assert all(e.split in ("train", "short", "mid", "long") for e in out)

    def test_excluded_ids_blocked_from_test(self):
        entries = [entry("a", token_len=100, score=5.0), entry("b", token_len=120, score=5.0)]
        out, _ = partition(entries, per_split=5, seed=0, excluded_test_ids={"a"})
        by_id = {e.id: e.split for e in out}
        assert by_id["a"] == "train"
        assert by_id["b"] == "short"

    def test_range_invariants(self):
        out, _ = partition(self.make_corpus(), per_split=10, seed=9)
        for e in out:
            if e.split == "short":
                assert 0 < e.token_len <= 2048
            elif e.split == "mid":
                assert 2048 < e.token_len <= 4096
            elif e.split == "long":
                assert e.token_len > 4096


class TestCorpusStats:
    def test_population_std(self):
        mean, std = mean_std([100.0, 300.0])
        assert (mean, std) == (200.0, 100.0)

    def test_single_entry_std_zero(self):
        assert mean_std([42.0]) == (42.0, 0.0)

    def test_per_split_rows(self):
        entries = [
            entry("a", token_len=100, tag_count=10, unique_tag_count=5, dom_depth=3),
            entry("b", token_len=300, tag_count=20, unique_tag_count=7, dom_depth=5),
        ]
        rows = corpus_stats(entries)
        all_row = next(r for r in rows if r.split == "all")
        assert all_row.stats["token_len"] == (200.0, 100.0)
        assert all_row.stats["tag_count"] == (15.0, 5.0)

    def test_empty_split_is_na(self):
        rows = corpus_stats([entry("a", token_len=10)])
        short = next(r for r in rows if r.split == "short")
        assert short.count == 0
        table = stats_table(rows)
        assert "Avg. Len (#tokens)" in table
        assert "±" in table

    def test_csv_shape(self):
        rows = corpus_stats([entry("a", token_len=10)])
        csv = stats_csv(rows)
        header = csv.splitlines()[0].split(",")
        assert header[:2] == ["split", "count"]
        assert "token_len_mean" in header
