import io
import json

import pytest
from PIL import Image

from webcurate.dom import parse_tag_tree
from webcurate.errors import ConfigError
from webcurate.render import (
    LayoutNode,
    RenderConfig,
    StaticBackend,
    render_batch,
    render_page,
)

CFG = RenderConfig(viewport_width=1280, viewport_height=720)

GOLDEN_DIV_PAGE = (
    "<html><head><style></style></head><body>"
    '<div style="width:100px;height:50px"></div>'
    "</body></html>"
)


def find_nodes(layout, tag):
    return [n for n in layout.iter_nodes() if n.tag == tag]


class TestGoldenLayout:
    def test_div_100x50_at_body_origin(self):
        artifact = render_page(("g1", GOLDEN_DIV_PAGE), CFG)
        assert artifact.render_ok
        (div,) = find_nodes(artifact.layout, "div")
        golden = json.loads(
            (__import__("pathlib").Path(__file__).parent / "golden" / "div_100x50_layout.json").read_text()
        )
        expected = golden["bbox"]
        for got, want in zip(div.bbox, expected):
            assert abs(got - want) <= 1.0, (div.bbox, expected)

    def test_body_margin_offsets_content(self):
        artifact = render_page(("g2", GOLDEN_DIV_PAGE), CFG)
        (body,) = find_nodes(artifact.layout, "body")
        assert body.bbox[0] == pytest.approx(8, abs=1)
        assert body.bbox[1] == pytest.approx(8, abs=1)
        assert body.bbox[2] == pytest.approx(1280 - 16, abs=1)


class TestStaticRender:
    def test_blank_body_structure(self):
        artifact = render_page(("b1", "<html><body></body></html>"), CFG)
        assert artifact.render_ok
        assert artifact.layout.tag == "html"
        assert [c.tag for c in artifact.layout.children] == ["body"]

    def test_screenshot_width_is_viewport(self):
        artifact = render_page(("s1", GOLDEN_DIV_PAGE), CFG)
        image = Image.open(io.BytesIO(artifact.screenshot))
        assert image.width == 1280

    def test_blank_page_uniform_background(self):
        artifact = render_page(("s2", "<html><body></body></html>"), CFG)
        image = Image.open(io.BytesIO(artifact.screenshot))
        colors = image.getcolors(maxcolors=4)
        assert colors is not None and len(colors) == 1
        assert colors[0][1] == (255, 255, 255)

    def test_deterministic_layout_and_pixels(self):
        page = (
            "<html><head><style>p{color:#333}div{background:#eee;padding:4px}</style></head>"
            "<body><div><p>hello world</p><p>more text here to wrap around the line limit</p>"
            '</div><img src="http://remote/x.png" width="40" height="40"></body></html>'
        )
        first = render_page(("d1", page), CFG)
        second = render_page(("d1", page), CFG)
        assert first.screenshot == second.screenshot
        assert json.dumps(first.layout.to_json()) == json.dumps(second.layout.to_json())

    def test_remote_image_substituted_flag(self):
        page = '<html><body><img src="https://cdn.x/y.png" width="10" height="10"></body></html>'
        artifact = render_page(("i1", page), CFG)
        (img,) = find_nodes(artifact.layout, "img")
        assert img.substituted

    def test_zero_area_flagged_kept(self):
        page = "<html><body><span></span><p>x</p></body></html>"
        artifact = render_page(("z1", page), CFG)
        spans = find_nodes(artifact.layout, "span")
        assert len(spans) == 1
        assert spans[0].zero_area

    def test_tag_projection_matches_dom_restricted(self):
        page = (
            "<html><head><style>i{}</style><meta></head>"
            "<body><div><p>a</p><span>b</span></div></body></html>"
        )
        artifact = render_page(("t1", page), CFG)

        def project(node):
            return (node.tag, tuple(project(c) for c in node.children))

        rendered = project(artifact.layout)
        # DOM restricted to rendered elements: head subtree is display:none.
        assert rendered == ("html", (("body", (("div", (("p", ()), ("span", ()))),)),))
        tree = parse_tag_tree(page)
        assert tree.name == "html"
        assert [c.name for c in tree.children] == ["head", "body"]

    def test_boxes_within_document_bounds_with_slack(self):
        page = (
            "<html><body><div style='width:200px;height:40px;margin:10px'>"
            "<p>word " * 30 + "</p></div></body></html>"
        )
        artifact = render_page(("bb1", page), CFG)
        root = artifact.layout
        slack = 16.0
        for node in root.iter_nodes():
            x, y, w, h = node.bbox
            assert x >= -slack and y >= -slack
            assert x + w <= root.bbox[2] + slack + 1280
            assert y + h <= max(root.bbox[3], 720) + slack

    def test_nested_text_color_captured(self):
        page = '<html><body><p style="color:#ff0000">Hi</p></body></html>'
        artifact = render_page(("c1", page), CFG)
        (p,) = find_nodes(artifact.layout, "p")
        assert p.text == "Hi"
        assert p.color == (255, 0, 0)

    def test_layout_json_round_trip(self):
        artifact = render_page(("r1", GOLDEN_DIV_PAGE), CFG)
        data = json.dumps(artifact.layout.to_json())
        again = LayoutNode.from_json(json.loads(data))
        assert json.dumps(again.to_json()) == data


class TestRenderBatch:
    PAGES = [(f"p{i:02d}", f"<html><body><p>page {i}</p></body></html>") for i in range(10)]

    def test_conservation(self):
        artifacts = render_batch(self.PAGES, CFG, pool_size=4)
        assert [a.id for a in artifacts] == sorted(p[0] for p in self.PAGES)
        assert all(a.render_ok for a in artifacts)

    def test_pool_zero_rejected(self):
        with pytest.raises(ConfigError):
            render_batch(self.PAGES, CFG, pool_size=0)

    def test_failure_isolated(self, monkeypatch):
        from webcurate.render import layout as layout_mod

        original = layout_mod.LayoutEngine.layout

        def exploding(self, html):
            if "BOOM" in html:
                raise RuntimeError("synthetic failure")
            return original(self, html)

        monkeypatch.setattr(layout_mod.LayoutEngine, "layout", exploding)
        pages = list(self.PAGES[:4]) + [("px", "<html><body>BOOM</body></html>")]
        artifacts = render_batch(pages, CFG, pool_size=2)
        failed = [a for a in artifacts if not a.render_ok]
        assert len(failed) == 1
        assert failed[0].id == "px"
        assert "synthetic failure" in failed[0].failure_reason
        assert sum(1 for a in artifacts if a.render_ok) == 4


class TestLayoutDetails:
    def test_heading_font_larger_than_paragraph(self):
        page = "<html><body><h1>Title</h1><p>body text</p></body></html>"
        artifact = render_page(("f1", page), CFG)
        (h1,) = find_nodes(artifact.layout, "h1")
        (p,) = find_nodes(artifact.layout, "p")
        assert h1.bbox[3] > p.bbox[3]

    def test_blocks_stack_vertically(self):
        page = "<html><body><div style='height:30px'></div><div style='height:30px'></div></body></html>"
        artifact = render_page(("v1", page), CFG)
        divs = find_nodes(artifact.layout, "div")
        assert divs[1].bbox[1] >= divs[0].bbox[1] + 30

    def test_percentage_width(self):
        page = "<html><body><div style='width:50%;height:10px'></div></body></html>"
        artifact = render_page(("w1", page), CFG)
        (div,) = find_nodes(artifact.layout, "div")
        assert div.bbox[2] == pytest.approx((1280 - 16) / 2, abs=1)

    def test_absolute_positioning(self):
        page = "<html><body><div style='position:absolute;left:100px;top:200px;width:50px;height:50px'></div></body></html>"
        artifact = render_page(("a1", page), CFG)
        (div,) = find_nodes(artifact.layout, "div")
        assert div.bbox[:2] == (100.0, 200.0)

    def test_padding_and_border_expand_box(self):
        page = (
            "<html><body><div style='width:100px;height:20px;padding:5px;"
            "border:2px solid black'></div></body></html>"
        )
        artifact = render_page(("pb1", page), CFG)
        (div,) = find_nodes(artifact.layout, "div")
        assert div.bbox[2] == pytest.approx(100 + 10 + 4, abs=0.5)
        assert div.bbox[3] == pytest.approx(20 + 10 + 4, abs=0.5)

    def test_display_none_excluded(self):
        page = "<html><body><div style='display:none'><p>x</p></div><p>y</p></body></html>"
        artifact = render_page(("dn1", page), CFG)
        assert len(find_nodes(artifact.layout, "div")) == 0
        assert len(find_nodes(artifact.layout, "p")) == 1
