import json

import pytest

from webcurate.curate import DatasetEntry
from webcurate.evaluate import (
    Block,
    BenchmarkConfig,
    clip_similarity,
    evaluate_candidate,
    extract_blocks,
    levenshtein,
    load_prompt,
    run_benchmark,
    text_similarity,
    visual_score,
)
from webcurate.render import RenderConfig, render_page
from webcurate.services import EchoGenerator, EmptyGenerator, LocalImageEmbedding

CFG = RenderConfig()
EMBED = LocalImageEmbedding()

PAGE = (
    "<html><head><style>p{color:#ff0000}</style></head>"
    "<body><p>Hello there</p><div><p>Second paragraph of text</p></div></body></html>"
)


def render(page_id, html):
    artifact = render_page((page_id, html), CFG)
    assert artifact.render_ok
    return artifact


def make_entry(tmp_path, page_id, html):
    artifact = render(page_id, html)
    shot = tmp_path / f"{page_id}.png"
    layout = tmp_path / f"{page_id}.json"
    shot.write_bytes(artifact.screenshot)
    layout.write_text(json.dumps(artifact.layout.to_json()))
    return DatasetEntry(
        id=page_id,
        html=html,
        screenshot_ref=str(shot),
        layout_ref=str(layout),
        score=5.0,
        token_len=100,
    )


class TestTextSimilarity:
    def test_levenshtein_basics(self):
        assert levenshtein("", "") == 0
        assert levenshtein("abc", "") == 3
        assert levenshtein("kitten", "sitting") == 3

    def test_similarity_range(self):
        assert text_similarity("same", "same") == 1.0
        assert text_similarity("abc", "xyz") == 0.0
        assert 0 < text_similarity("hello", "hallo") < 1


class TestExtractBlocks:
    def test_single_red_paragraph(self):
        artifact = render("b1", '<html><body><p style="color:#ff0000">Hi</p></body></html>')
        blocks = extract_blocks(artifact)
        assert len(blocks) == 1
        assert blocks[0].text == "Hi"
        assert blocks[0].color == (255, 0, 0)
        assert all(0 <= v <= 1 for v in blocks[0].bbox)

    def test_direct_text_rule(self):
        artifact = render("b2", "<html><body><div><p>only here</p></div></body></html>")
        blocks = extract_blocks(artifact)
        assert len(blocks) == 1
        assert blocks[0].text == "only here"

    def test_two_paragraphs_document_order(self):
        artifact = render("b3", "<html><body><p>first</p><p>second</p></body></html>")
        blocks = extract_blocks(artifact)
        assert [b.text for b in blocks] == ["first", "second"]
        assert blocks[0].bbox[1] < blocks[1].bbox[1]

    def test_textless_page_empty(self):
        artifact = render("b4", "<html><body><div></div></body></html>")
        assert extract_blocks(artifact) == []


class TestVisualScore:
    def test_identity(self):
        artifact = render("v1", PAGE)
        blocks = extract_blocks(artifact)
        score = visual_score(blocks, blocks, EMBED)
        assert score.value == pytest.approx(1.0, abs=1e-6)
        assert score.match_ratio == 1.0

    def test_empty_candidate_low_score(self):
        artifact = render("v2", PAGE)
        blocks = extract_blocks(artifact)
        score = visual_score(blocks, [])
        assert score.value == 0.0
        assert score.value <= 0.2

    def test_empty_reference_undefined(self):
        artifact = render("v3", PAGE)
        blocks = extract_blocks(artifact)
        score = visual_score([], blocks)
        assert score.undefined
        assert score.value is None

    def test_hand_built_partial_match(self):
        ref = [
            Block("alpha beta", (0.1, 0.1, 0.2, 0.05), (0, 0, 0)),
            Block("gamma delta", (0.1, 0.3, 0.2, 0.05), (0, 0, 0)),
        ]
        cand = [Block("alpha beta", (0.1, 0.1, 0.2, 0.05), (0, 0, 0))]
        score = visual_score(ref, cand)
        # one exact match, one absent: 2*1/(2+1) = 2/3
        assert score.match_ratio == pytest.approx(2 / 3)
        assert score.text == pytest.approx(1.0)
        assert score.position == pytest.approx(1.0)
        assert score.color == pytest.approx(1.0)
        # crop embeddings absent -> clip sub-score 0
        assert score.value == pytest.approx((2 / 3 + 1 + 1 + 1 + 0) / 5)

    def test_below_threshold_pairs_unmatched(self):
        ref = [Block("completely different words", (0, 0, 0.1, 0.1), (0, 0, 0))]
        cand = [Block("zzzz", (0, 0, 0.1, 0.1), (0, 0, 0))]
        score = visual_score(ref, cand)
        assert score.matched == 0
        assert score.match_ratio == 0.0

    def test_assignment_is_optimal_not_greedy(self):
        # Greedy on first candidate would pair "ab" with ref "ab cd"; optimal
        # assignment must pair both correctly.
        ref = [
            Block("ab cd", (0, 0, 0.1, 0.1), (0, 0, 0)),
            Block("ab", (0, 0.2, 0.1, 0.1), (0, 0, 0)),
        ]
        cand = [
            Block("ab", (0, 0.2, 0.1, 0.1), (0, 0, 0)),
            Block("ab cd", (0, 0, 0.1, 0.1), (0, 0, 0)),
        ]
        score = visual_score(ref, cand)
        assert score.matched == 2
        assert score.text == pytest.approx(1.0)

    def test_symmetric_on_full_match(self):
        a = extract_blocks(render("sym1", PAGE))
        b = extract_blocks(render("sym2", PAGE))
        one = visual_score(a, b, EMBED)
        two = visual_score(b, a, EMBED)
        assert one.value == pytest.approx(two.value, abs=1e-9)


class TestClipSimilarity:
    def test_identical(self):
        artifact = render("c1", PAGE)
        assert clip_similarity(artifact.screenshot, artifact.screenshot, EMBED) == pytest.approx(1.0)

    def test_symmetric(self):
        a = render("c2", PAGE).screenshot
        b = render("c3", "<html><body><h1>Other</h1></body></html>").screenshot
        assert clip_similarity(a, b, EMBED) == pytest.approx(clip_similarity(b, a, EMBED))

    def test_clamped_to_unit_interval(self):
        a = render("c4", "<html><body style='background:#000'><p style='color:#fff'>x</p></body></html>").screenshot
        b = render("c5", "<html><body style='background:#fff'><p style='color:#000'>y y y y</p></body></html>").screenshot
        value = clip_similarity(a, b, EMBED)
        assert 0.0 <= value <= 1.0


class TestBenchmark:
    def test_echo_fixpoint(self, tmp_path):
        entries = [
            make_entry(tmp_path, "e1", PAGE),
            make_entry(
                tmp_path,
                "e2",
                "<html><body><h1>Title here</h1><p>Some body copy for the page</p></body></html>",
            ),
        ]
        report = run_benchmark(entries, EchoGenerator(), EMBED, BenchmarkConfig(render=CFG))
        assert report.excluded == 0
        for sample in report.per_sample:
            assert sample.treebleu == 1.0
            assert sample.visual == pytest.approx(1.0, abs=1e-6)
            assert sample.clip == pytest.approx(1.0, abs=1e-6)
        assert report.aggregate["treebleu"]["mean"] == 1.0

    def test_empty_generator_zero_treebleu(self, tmp_path):
        entries = [make_entry(tmp_path, "e1", PAGE)]
        report = run_benchmark(entries, EmptyGenerator(), EMBED, BenchmarkConfig(render=CFG))
        (sample,) = report.per_sample
        assert sample.treebleu == 0.0

    def test_checkpoint_resume(self, tmp_path):
        entries = [make_entry(tmp_path, f"e{i}", PAGE) for i in range(3)]
        checkpoint = tmp_path / "ckpt.jsonl"

        calls = []

        class CountingEcho(EchoGenerator):
            def generate(self, prompt, screenshot, reference_html):
                calls.append(1)
                return super().generate(prompt, screenshot, reference_html)

        cfg = BenchmarkConfig(render=CFG, checkpoint_path=checkpoint)
        run_benchmark(entries[:2], CountingEcho(), EMBED, cfg)
        assert len(calls) == 2
        report = run_benchmark(entries, CountingEcho(), EMBED, cfg)
        assert len(calls) == 3  # only the new sample was generated
        assert len(report.per_sample) == 3

    def test_generator_failure_excluded(self, tmp_path):
        entries = [make_entry(tmp_path, "e1", PAGE), make_entry(tmp_path, "e2", PAGE)]

        class FlakyGen(EchoGenerator):
            def generate(self, prompt, screenshot, reference_html):
                if not hasattr(self, "_called"):
                    self._called = True
                    raise RuntimeError("api refusal")
                return super().generate(prompt, screenshot, reference_html)

        report = run_benchmark(entries, FlakyGen(), EMBED, BenchmarkConfig(render=CFG))
        assert report.excluded == 1
        failed = [s for s in report.per_sample if s.failed]
        assert len(failed) == 1
        assert "api refusal" in failed[0].failure_reason
        assert report.aggregate["treebleu"]["n"] == 1

    def test_aggregate_recomputable(self, tmp_path):
        entries = [make_entry(tmp_path, f"e{i}", PAGE) for i in range(3)]
        report = run_benchmark(entries, EchoGenerator(), EMBED, BenchmarkConfig(render=CFG))
        stored = json.loads(json.dumps(report.to_json()))
        values = [s["treebleu"] for s in stored["per_sample"] if not s["failed"]]
        mean = sum(values) / len(values)
        assert mean == stored["aggregate"]["treebleu"]["mean"]

    def test_markdown_fences_stripped(self, tmp_path):
        entries = [make_entry(tmp_path, "e1", PAGE)]

        class FencedEcho(EchoGenerator):
            def generate(self, prompt, screenshot, reference_html):
                return "```html\n" + reference_html + "\n```"

        report = run_benchmark(entries, FencedEcho(), EMBED, BenchmarkConfig(render=CFG))
        assert report.per_sample[0].treebleu == 1.0

    def test_prompt_loads(self):
        prompt = load_prompt()
        assert "Tailwind" in prompt
        assert "screenshot" in prompt

    def test_csv_report(self, tmp_path):
        entries = [make_entry(tmp_path, "e1", PAGE)]
        report = run_benchmark(entries, EchoGenerator(), EMBED, BenchmarkConfig(render=CFG))
        csv = report.to_csv()
        assert csv.splitlines()[0] == "id,visual,clip,treebleu,failed"
        assert "e1" in csv
