import io
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from PIL import Image

from webcurate.services import LocalImageEmbedding


def png_of(color, size=(64, 64)):
    image = Image.new("RGB", size, color)
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


class MockServices:
    """One HTTP server exposing scorer, safety-detector, embedding, and
    generator endpoints with swappable behavior."""

    def __init__(self):
        self.score_fn = lambda png: 3.0
        self.nsfw_fn = lambda png: 0.01
        self.generate_fn = lambda payload: "<html><body><p>generated</p></body></html>"
        self.embedder = LocalImageEmbedding()
        self.requests = []
        mock = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("content-length", 0))
                body = self.rfile.read(length)
                mock.requests.append((self.path, len(body)))
                try:
                    if self.path == "/score":
                        payload = str(mock.score_fn(body)).encode()
                        ctype = "text/plain"
                    elif self.path == "/nsfw":
                        payload = str(mock.nsfw_fn(body)).encode()
                        ctype = "text/plain"
                    elif self.path == "/embed":
                        payload = json.dumps(mock.embedder.embed_image(body)).encode()
                        ctype = "application/json"
                    elif self.path == "/generate":
                        request = json.loads(body)
                        text = mock.generate_fn(request)
                        payload = json.dumps(
                            {"choices": [{"message": {"content": text}}]}
                        ).encode()
                        ctype = "application/json"
                    else:
                        self.send_error(404)
                        return
                except Exception as exc:  # surface handler bugs as 500s
                    self.send_error(500, str(exc))
                    return
                self.send_response(200)
                self.send_header("content-type", ctype)
                self.send_header("content-length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.port = self.server.server_address[1]
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def url(self, path):
        return f"http://127.0.0.1:{self.port}{path}"

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture(scope="session")
def mock_services():
    services = MockServices()
    yield services
    services.stop()


@pytest.fixture()
def services(mock_services):
    mock_services.score_fn = lambda png: 3.0
    mock_services.nsfw_fn = lambda png: 0.01
    mock_services.generate_fn = lambda payload: "<html><body><p>generated</p></body></html>"
    mock_services.requests.clear()
    return mock_services


_CRITERION_TITLES = {
    "TestCriterion1TreeBleuOracle": "C1 subtree-recall oracle equivalence (1000 pairs, <5s)",
    "TestCriterion2TreeBleuWorkedExample": "C2 subtree-recall worked example (2/3)",
    "TestCriterion3PurifierContract": "C3 purifier contract suite (50 pages, <10s)",
    "TestCriterion4ThresholdConstants": "C4 threshold constants (2.0 / 0.04 / >20 / 100.00%)",
    "TestCriterion5PartitionLaw": "C5 partition law (3000 entries, <5s)",
    "TestCriterion6StatsFixtures": "C6 stats fixtures (5,5,4) and (4,3,3)",
    "TestCriterion7EndToEndEchoBenchmark": "C7 end-to-end echo benchmark (<3min)",
    "TestCriterion8RendererGoldenLayout": "C8 renderer golden layout [8,8,100,50]",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, bool] = {}
    for status, passed in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid or "::" not in nodeid:
                continue
            cls = nodeid.split("::")[1]
            if cls in _CRITERION_TITLES:
                outcomes[cls] = outcomes.get(cls, True) and passed
    if outcomes:
        terminalreporter.section("acceptance criteria")
        for cls in sorted(_CRITERION_TITLES):
            if cls in outcomes:
                mark = "PASS" if outcomes[cls] else "FAIL"
                terminalreporter.write_line(f"{mark}  {_CRITERION_TITLES[cls]}")
