from webcurate.htmlparse import Comment, Element, Text, parse_document, serialize


def tags(el):
    return (el.tag, [tags(c) for c in el.child_elements()])


def test_explicit_structure_preserved():
    doc = parse_document("<html><body><p>x</p></body></html>")
    assert tags(doc.html) == ("html", [("body", [("p", [])])])


def test_fragment_gets_full_skeleton():
    doc = parse_document("<p>x</p>")
    assert tags(doc.html) == ("html", [("head", []), ("body", [("p", [])])])


def test_explicit_html_gets_minimal_synthesis():
    doc = parse_document("<html><a></a></html>")
    assert tags(doc.html) == ("html", [("body", [("a", [])])])


def test_head_only_tags_grow_a_head():
    doc = parse_document("<html><title>t</title><div>x</div></html>")
    assert tags(doc.html) == ("html", [("head", [("title", [])]), ("body", [("div", [])])])


def test_void_elements_take_no_children():
    doc = parse_document("<html><body><br><p>x</p></body></html>")
    body = doc.html.child_elements()[0]
    br, p = body.child_elements()
    assert br.tag == "br"
    assert br.children == []
    assert p.tag == "p"


def test_p_closed_by_block_start():
    doc = parse_document("<html><body><p>a<div>b</div></body></html>")
    body = doc.html.child_elements()[0]
    assert [c.tag for c in body.child_elements()] == ["p", "div"]


def test_nested_p_closes_previous():
    doc = parse_document("<html><body><p>a<p>b</body></html>")
    body = doc.html.child_elements()[0]
    assert [c.tag for c in body.child_elements()] == ["p", "p"]


def test_li_closes_li():
    doc = parse_document("<html><body><ul><li>a<li>b</ul></body></html>")
    ul = doc.html.child_elements()[0].child_elements()[0]
    assert [c.tag for c in ul.child_elements()] == ["li", "li"]


def test_stray_end_tag_ignored():
    doc = parse_document("<html><body></div><p>x</p></body></html>")
    body = doc.html.child_elements()[0]
    assert [c.tag for c in body.child_elements()] == ["p"]


def test_attributes_first_wins_lowercased():
    doc = parse_document('<html><body><div ID="a" id="b" Class="c">x</div></body></html>')
    div = doc.html.child_elements()[0].child_elements()[0]
    assert div.attrs == {"id": "a", "class": "c"}


def test_comments_kept_as_nodes():
    doc = parse_document("<html><body><!-- hey --><p>x</p></body></html>")
    body = doc.html.child_elements()[0]
    assert any(isinstance(c, Comment) for c in body.children)


def test_script_content_is_raw():
    doc = parse_document("<html><head><script>if (a < b) { x(); }</script></head><body>x</body></html>")
    script = doc.html.child_elements()[0].child_elements()[0]
    assert script.tag == "script"
    assert isinstance(script.children[0], Text)
    assert "a < b" in script.children[0].data


def test_empty_document_flags():
    assert parse_document("<!-- c -->").is_empty
    assert parse_document("").is_empty
    assert not parse_document("plain text").is_empty
    assert not parse_document("<p>x</p>").is_empty


def test_text_only_gets_skeleton():
    doc = parse_document("plain text")
    assert tags(doc.html) == ("html", [("head", []), ("body", [])])
    body = doc.html.child_elements()[1]
    assert body.all_text() == "plain text"


def test_serialize_round_trip_stable():
    source = '<html><body><div class="a" hidden>x &amp; y<br><img src="i.png"></div></body></html>'
    once = serialize(parse_document(source).html)
    twice = serialize(parse_document(once).html)
    assert once == twice
    assert "&amp;" in once
    assert "</br>" not in once
    assert "</img>" not in once


def test_serialize_preserves_raw_style_text():
    source = "<html><head><style>div > p { color: red; }</style></head><body>x</body></html>"
    out = serialize(parse_document(source).html)
    assert "div > p { color: red; }" in out


def test_duplicate_body_merges():
    doc = parse_document("<html><body><p>a</p></body><body><p>b</p></body></html>")
    bodies = [c for c in doc.html.child_elements() if c.tag == "body"]
    assert len(bodies) == 1


def test_content_after_html_close_reenters():
    doc = parse_document("<html><body><p>a</p></body></html><div>b</div>")
    body = doc.html.child_elements()[0]
    assert [c.tag for c in body.child_elements()] == ["p", "div"]
