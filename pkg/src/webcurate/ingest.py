"""Raw-page ingestion from WARC archives and plain directories.

Each page becomes a RawPage carrying the original HTML text plus every CSS
source attached to it (style tags, resolved external sheets, style
attributes), in document order. Ingestion never mutates content and is
deterministic: identical inputs yield identical manifests.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Callable, Iterator, Optional
from urllib.parse import unquote, urljoin, urlparse

from .errors import InputError
from .htmlparse import parse_document

ORIGIN_STYLE_TAG = "inline-style-tag"
ORIGIN_EXTERNAL = "external-file"
ORIGIN_STYLE_ATTR = "style-attribute"


@dataclass
class CssSource:
    origin: str
    text: str
    unresolved: bool = False

    def to_json(self) -> dict:
        record = {"origin": self.origin, "text": self.text}
        if self.unresolved:
            record["unresolved"] = True
        return record

    @classmethod
    def from_json(cls, data: dict) -> "CssSource":
        return cls(data["origin"], data["text"], bool(data.get("unresolved")))


@dataclass
class RawPage:
    id: str
    url: str
    html: str
    css_sources: list[CssSource]
    fetched_at: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "url": self.url,
            "html": self.html,
            "css_sources": [c.to_json() for c in self.css_sources],
            "fetched_at": self.fetched_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RawPage":
        return cls(
            id=data["id"],
            url=data["url"],
            html=data["html"],
            css_sources=[CssSource.from_json(c) for c in data.get("css_sources", [])],
            fetched_at=int(data.get("fetched_at", 0)),
        )


@dataclass
class IngestReport:
    pages: int = 0
    skipped_non_html: int = 0
    skipped_malformed: int = 0
    skipped_unreadable: int = 0
    unresolved_css: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def page_id(url: str, html: str) -> str:
    """Stable join key: first 16 bytes of sha256(url ++ html), hex."""
    digest = hashlib.sha256(url.encode("utf-8") + html.encode("utf-8")).hexdigest()
    return digest[:32]


_META_CHARSET = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?([\w.:-]+)""", re.I
)


def decode_html(raw: bytes, declared: Optional[str] = None) -> str:
    """Decode page bytes honoring declared charset, falling back to UTF-8."""
    candidates = []
    if declared:
        candidates.append(declared)
    match = _META_CHARSET.search(raw[:4096])
    if match:
        candidates.append(match.group(1).decode("ascii", "ignore"))
    for enc in candidates:
        try:
            return raw.decode(enc)
        except (LookupError, UnicodeDecodeError):
            continue
    return raw.decode("utf-8", errors="replace")


def extract_css_sources(
    html: str,
    base_url: str,
    resolver: Callable[[str], Optional[str]],
    report: Optional[IngestReport] = None,
) -> list[CssSource]:
    """Collect style tags, external sheets, and style attributes in document order."""
    doc = parse_document(html)
    sources: list[CssSource] = []
    if doc.html is None:
        return sources
    for el in doc.html.iter_elements():
        if el.tag == "style":
            sources.append(CssSource(ORIGIN_STYLE_TAG, el.raw_text()))
        elif el.tag == "link":
            rel = (el.attrs.get("rel") or "").lower()
            href = el.attrs.get("href") or ""
            if "stylesheet" in rel.split() and href:
                resolved = resolver(urljoin(base_url, href))
                if resolved is None:
                    sources.append(CssSource(ORIGIN_EXTERNAL, "", unresolved=True))
                    if report is not None:
                        report.unresolved_css += 1
                else:
                    sources.append(CssSource(ORIGIN_EXTERNAL, resolved))
        style_attr = el.attrs.get("style")
        if style_attr:
            sources.append(CssSource(ORIGIN_STYLE_ATTR, style_attr))
    return sources


# -- directory ingestion -----------------------------------------------------


def ingest_dir(path: str | Path, report: Optional[IngestReport] = None) -> Iterator[RawPage]:
    """One RawPage per *.html/*.htm file, lexicographic order, CSS attached."""
    root = Path(path)
    if not root.is_dir():
        raise InputError(f"not a readable directory: {root}")
    report = report if report is not None else IngestReport()
    files = sorted(p for p in root.rglob("*") if p.suffix.lower() in (".html", ".htm"))

    def resolver_for(page_path: Path) -> Callable[[str], Optional[str]]:
        def resolve(url: str) -> Optional[str]:
            name = unquote(urlparse(url).path.rsplit("/", 1)[-1])
            candidate = page_path.parent / name
            if candidate.is_file():
                try:
                    return candidate.read_text(encoding="utf-8", errors="replace")
                except OSError:
                    return None
            return None

        return resolve

    for file in files:
        try:
            raw = file.read_bytes()
        except OSError:
            report.skipped_unreadable += 1
            continue
        html = decode_html(raw)
        url = file.resolve().as_uri()
        sources = extract_css_sources(html, url, resolver_for(file), report)
        # A stylesheet sharing the page's stem is attached even without a <link>.
        sibling = file.with_suffix(".css")
        if sibling.is_file() and not any(
            s.origin == ORIGIN_EXTERNAL and not s.unresolved for s in sources
        ):
            sources.append(
                CssSource(ORIGIN_EXTERNAL, sibling.read_text(encoding="utf-8", errors="replace"))
            )
        report.pages += 1
        yield RawPage(
            id=page_id(url, html),
            url=url,
            html=html,
            css_sources=sources,
            fetched_at=int(file.stat().st_mtime),
        )


# -- WARC ingestion ----------------------------------------------------------


@dataclass
class WarcRecord:
    headers: dict[str, str]
    payload: bytes

    @property
    def record_type(self) -> str:
        return self.headers.get("warc-type", "")

    @property
    def target_uri(self) -> str:
        uri = self.headers.get("warc-target-uri", "")
        return uri.strip("<>")


def _open_warc(path: Path) -> BinaryIO:
    fh = open(path, "rb")
    magic = fh.read(2)
    fh.seek(0)
    if magic == b"\x1f\x8b":
        return io.BufferedReader(gzip.GzipFile(fileobj=fh))  # type: ignore[arg-type]
    return io.BufferedReader(fh)  # type: ignore[arg-type]


def read_warc_records(path: str | Path, report: Optional[IngestReport] = None) -> Iterator[WarcRecord]:
    """Stream records, skipping malformed ones without aborting."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"not a readable WARC file: {path}")
    report = report if report is not None else IngestReport()
    try:
        stream = _open_warc(path)
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    def scan_to_next_header() -> Optional[bytes]:
        while True:
            line = stream.readline()
            if not line:
                return None
            if line.startswith(b"WARC/"):
                return line

    with stream:
        pending: Optional[bytes] = None
        while True:
            line = pending if pending is not None else stream.readline()
            pending = None
            if not line:
                return
            if not line.strip():
                continue
            if not line.startswith(b"WARC/"):
                # Lost sync: skip forward to the next record boundary.
                report.skipped_malformed += 1
                pending = scan_to_next_header()
                if pending is None:
                    return
                continue
            headers: dict[str, str] = {}
            while True:
                header_line = stream.readline()
                if not header_line or not header_line.strip():
                    break
                name, sep, value = header_line.decode("utf-8", "replace").partition(":")
                if sep:
                    headers[name.strip().lower()] = value.strip()
            try:
                length = int(headers.get("content-length", ""))
            except ValueError:
                report.skipped_malformed += 1
                pending = scan_to_next_header()
                if pending is None:
                    return
                continue
            payload = stream.read(length)
            if len(payload) < length:
                report.skipped_malformed += 1
                return
            yield WarcRecord(headers, payload)


def _split_http_payload(payload: bytes) -> tuple[dict[str, str], bytes]:
    head, sep, body = payload.partition(b"\r\n\r\n")
    if not sep:
        head, sep, body = payload.partition(b"\n\n")
    headers: dict[str, str] = {}
    for line in head.split(b"\n")[1:]:
        name, s, value = line.decode("latin-1").partition(":")
        if s:
            headers[name.strip().lower()] = value.strip()
    return headers, body


def _charset_of(content_type: str) -> Optional[str]:
    match = re.search(r"charset=([\w.:-]+)", content_type, re.I)
    return match.group(1) if match else None


def ingest_warc(
    path: str | Path,
    limit: Optional[int] = None,
    report: Optional[IngestReport] = None,
) -> Iterator[RawPage]:
    """One RawPage per HTML response record; CSS resolved within the archive
    or from files sitting next to it."""
    path = Path(path)
    report = report if report is not None else IngestReport()

    # First pass: index text/css responses by URI for same-archive resolution.
    css_index: dict[str, str] = {}
    for record in read_warc_records(path):
        if record.record_type != "response":
            continue
        http_headers, body = _split_http_payload(record.payload)
        ctype = http_headers.get("content-type", "")
        if "text/css" in ctype:
            css_index[record.target_uri] = body.decode(
                _charset_of(ctype) or "utf-8", errors="replace"
            )

    def resolve(url: str) -> Optional[str]:
        if url in css_index:
            return css_index[url]
        name = unquote(urlparse(url).path.rsplit("/", 1)[-1])
        sibling = path.parent / name
        if name and sibling.is_file():
            return sibling.read_text(encoding="utf-8", errors="replace")
        return None

    produced = 0
    for record in read_warc_records(path, report):
        if limit is not None and produced >= limit:
            return
        if record.record_type != "response":
            continue
        http_headers, body = _split_http_payload(record.payload)
        ctype = http_headers.get("content-type", "")
        if "text/html" not in ctype and "application/xhtml" not in ctype:
            report.skipped_non_html += 1
            continue
        html = decode_html(body, _charset_of(ctype))
        if not html:
            report.skipped_malformed += 1
            continue
        url = record.target_uri
        sources = extract_css_sources(html, url, resolve, report)
        report.pages += 1
        produced += 1
        yield RawPage(
            id=page_id(url, html),
            url=url,
            html=html,
            css_sources=sources,
            fetched_at=_warc_timestamp(record.headers.get("warc-date", "")),
        )


def _warc_timestamp(value: str) -> int:
    from datetime import datetime, timezone

    try:
        dt = datetime.strptime(value, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    except ValueError:
        return 0


def sorted_pages(pages: Iterator[RawPage]) -> list[RawPage]:
    """Manifest ordering: ascending id, so parallel ingest stays reproducible."""
    return sorted(pages, key=lambda p: p.id)
