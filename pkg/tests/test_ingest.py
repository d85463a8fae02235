import gzip
import json

import pytest

from webcurate.errors import InputError
from webcurate.ingest import (
    IngestReport,
    RawPage,
    ingest_dir,
    ingest_warc,
    page_id,
    sorted_pages,
)
from webcurate.manifest import write_jsonl


def http_response(body, content_type="text/html; charset=utf-8"):
    body_bytes = body.encode("utf-8") if isinstance(body, str) else body
    head = (
        b"HTTP/1.1 200 OK\r\nContent-Type: "
        + content_type.encode()
        + b"\r\nContent-Length: "
        + str(len(body_bytes)).encode()
        + b"\r\n\r\n"
    )
    return head + body_bytes


def warc_record(uri, payload, rec_type="response"):
    headers = (
        f"WARC/1.0\r\n"
        f"WARC-Type: {rec_type}\r\n"
        f"WARC-Target-URI: {uri}\r\n"
        f"WARC-Date: 2023-11-01T00:00:00Z\r\n"
        f"Content-Type: application/http; msgtype=response\r\n"
        f"Content-Length: {len(payload)}\r\n\r\n"
    ).encode()
    return headers + payload + b"\r\n\r\n"


HTML_A = "<html><head><title>A</title></head><body>" + "a" * 64 + "</body></html>"
HTML_B = "<html><body><p>B page</p></body></html>"


def build_archive(tmp_path, name="test.warc", gz=False, records=None):
    if records is None:
        records = [
            warc_record("http://x.test/a", http_response(HTML_A)),
            warc_record("http://x.test/b", http_response(HTML_B)),
            warc_record("http://x.test/i.png", http_response(b"\x89PNG...", "image/png")),
        ]
    blob = b"".join(records)
    path = tmp_path / name
    if gz:
        blob = b"".join(gzip.compress(r) for r in records)
        path = tmp_path / (name + ".gz")
    path.write_bytes(blob)
    return path


class TestWarcIngest:
    def test_content_type_routing(self, tmp_path):
        report = IngestReport()
        pages = list(ingest_warc(build_archive(tmp_path), report=report))
        assert len(pages) == 2
        assert report.skipped_non_html == 1
        assert pages[0].html == HTML_A
        assert pages[0].url == "http://x.test/a"

    def test_limit_cap(self, tmp_path):
        pages = list(ingest_warc(build_archive(tmp_path), limit=1))
        assert len(pages) == 1

    def test_empty_archive(self, tmp_path):
        path = tmp_path / "empty.warc"
        path.write_bytes(b"")
        report = IngestReport()
        assert list(ingest_warc(path, report=report)) == []
        assert report.skipped_non_html == 0
        assert report.skipped_malformed == 0

    def test_gzip_archive(self, tmp_path):
        pages = list(ingest_warc(build_archive(tmp_path, gz=True)))
        assert len(pages) == 2

    def test_malformed_record_skipped_not_fatal(self, tmp_path):
        records = [
            warc_record("http://x.test/a", http_response(HTML_A)),
            b"GARBAGE NOT A RECORD\r\n\r\n",
            warc_record("http://x.test/b", http_response(HTML_B)),
        ]
        report = IngestReport()
        pages = list(ingest_warc(build_archive(tmp_path, records=records), report=report))
        assert {p.url for p in pages} == {"http://x.test/a", "http://x.test/b"}
        assert report.skipped_malformed >= 1

    def test_css_resolved_within_archive(self, tmp_path):
        html = '<html><head><link rel="stylesheet" href="s.css"></head><body>x</body></html>'
        records = [
            warc_record("http://x.test/s.css", http_response("p{color:red}", "text/css")),
            warc_record("http://x.test/page", http_response(html)),
        ]
        pages = list(ingest_warc(build_archive(tmp_path, records=records)))
        assert len(pages) == 1
        css = pages[0].css_sources
        assert len(css) == 1
        assert css[0].origin == "external-file"
        assert css[0].text == "p{color:red}"
        assert not css[0].unresolved

    def test_unresolved_css_flagged(self, tmp_path):
        html = '<html><head><link rel="stylesheet" href="missing.css"></head><body>x</body></html>'
        records = [warc_record("http://x.test/page", http_response(html))]
        report = IngestReport()
        pages = list(ingest_warc(build_archive(tmp_path, records=records), report=report))
        css = pages[0].css_sources
        assert css[0].unresolved
        assert css[0].text == ""
        assert report.unresolved_css == 1

    def test_sibling_file_resolution(self, tmp_path):
        (tmp_path / "site.css").write_text("body{margin:0}")
        html = '<html><head><link rel="stylesheet" href="site.css"></head><body>x</body></html>'
        records = [warc_record("http://x.test/page", http_response(html))]
        pages = list(ingest_warc(build_archive(tmp_path, records=records)))
        assert pages[0].css_sources[0].text == "body{margin:0}"

    def test_unreadable_file_errors(self, tmp_path):
        with pytest.raises(InputError):
            list(ingest_warc(tmp_path / "nope.warc"))

    def test_declared_charset_honored(self, tmp_path):
        body = "<html><body>séance</body></html>".encode("latin-1")
        records = [warc_record("http://x.test/l1", http_response(body, "text/html; charset=latin-1"))]
        pages = list(ingest_warc(build_archive(tmp_path, records=records)))
        assert "séance" in pages[0].html


class TestDirIngest:
    def test_sibling_css(self, tmp_path):
        (tmp_path / "a.html").write_text("<html><body>x</body></html>")
        (tmp_path / "a.css").write_text("p{}")
        pages = list(ingest_dir(tmp_path))
        assert len(pages) == 1
        assert len(pages[0].css_sources) == 1
        assert pages[0].css_sources[0].origin == "external-file"

    def test_inline_style_captured(self, tmp_path):
        (tmp_path / "a.html").write_text("<html><head><style>p{}</style></head><body>x</body></html>")
        pages = list(ingest_dir(tmp_path))
        assert [s.origin for s in pages[0].css_sources] == ["inline-style-tag"]
        assert pages[0].css_sources[0].text == "p{}"

    def test_style_attribute_captured(self, tmp_path):
        (tmp_path / "a.html").write_text('<html><body><p style="color:red">x</p></body></html>')
        pages = list(ingest_dir(tmp_path))
        assert [s.origin for s in pages[0].css_sources] == ["style-attribute"]

    def test_empty_dir(self, tmp_path):
        assert list(ingest_dir(tmp_path)) == []

    def test_missing_dir_errors(self, tmp_path):
        with pytest.raises(InputError):
            list(ingest_dir(tmp_path / "missing"))

    def test_lexicographic_order(self, tmp_path):
        for name in ["c.html", "a.html", "b.html"]:
            (tmp_path / name).write_text(f"<html><body>{name}</body></html>")
        pages = list(ingest_dir(tmp_path))
        assert [p.url.rsplit("/", 1)[-1] for p in pages] == ["a.html", "b.html", "c.html"]

    def test_linked_css_via_relative_href(self, tmp_path):
        (tmp_path / "a.html").write_text(
            '<html><head><link rel="stylesheet" href="theme.css"></head><body>x</body></html>'
        )
        (tmp_path / "theme.css").write_text("body{margin:0}")
        pages = list(ingest_dir(tmp_path))
        external = [s for s in pages[0].css_sources if s.origin == "external-file"]
        assert len(external) == 1
        assert external[0].text == "body{margin:0}"


class TestDeterminism:
    def test_id_stable(self):
        assert page_id("u", "h") == page_id("u", "h")
        assert page_id("u", "h") != page_id("u", "h2")
        assert len(page_id("u", "h")) == 32

    def test_manifest_byte_identical(self, tmp_path):
        archive = build_archive(tmp_path)
        out1, out2 = tmp_path / "m1.jsonl", tmp_path / "m2.jsonl"
        write_jsonl(out1, (p.to_json() for p in sorted_pages(ingest_warc(archive))))
        write_jsonl(out2, (p.to_json() for p in sorted_pages(ingest_warc(archive))))
        assert out1.read_bytes() == out2.read_bytes()

    def test_round_trip(self, tmp_path):
        pages = list(ingest_warc(build_archive(tmp_path)))
        again = [RawPage.from_json(json.loads(json.dumps(p.to_json()))) for p in pages]
        assert again == pages
