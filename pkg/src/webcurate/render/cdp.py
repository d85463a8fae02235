"""DevTools-protocol render backend.

Launches a Chromium-family binary with remote debugging, opens a websocket
to a page target, and drives it JSON-RPC style: metrics override, data-URL
navigation, full-page screenshot, and an in-page walker that serializes the
rendered element tree with border-box rectangles.

The websocket client is self-contained (RFC 6455 client side: handshake,
masked frames, ping/pong/close) so the backend has no dependencies beyond
the standard library.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import shutil
import socket
import struct
import subprocess
import time
import urllib.request
from typing import Optional
from urllib.parse import urlparse

from ..errors import RenderStartupError

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

BROWSER_NAMES = (
    "chromium",
    "chromium-browser",
    "google-chrome",
    "google-chrome-stable",
    "chrome",
    "headless-shell",
)


def _header_value(response: bytes, name: bytes) -> Optional[str]:
    for line in response.split(b"\r\n"):
        if line.lower().startswith(name + b":"):
            return line.split(b":", 1)[1].strip().decode()
    return None


def find_browser() -> Optional[str]:
    env = os.environ.get("WEBCURATE_BROWSER")
    if env and shutil.which(env):
        return shutil.which(env)
    for name in BROWSER_NAMES:
        path = shutil.which(name)
        if path:
            return path
    return None


class WebSocketClient:
    """Minimal RFC 6455 client over a blocking socket."""

    def __init__(self, url: str, timeout: float = 30.0):
        parsed = urlparse(url)
        if parsed.scheme != "ws":
            raise ValueError(f"only ws:// endpoints are supported, got {url}")
        host = parsed.hostname or "127.0.0.1"
        port = parsed.port or 80
        path = parsed.path or "/"
        if parsed.query:
            path += "?" + parsed.query
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._buffer = b""
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET {path} HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n\r\n"
        )
        self._sock.sendall(request.encode())
        response = self._read_until(b"\r\n\r\n")
        status_line = response.split(b"\r\n", 1)[0]
        if b"101" not in status_line:
            raise ConnectionError(f"websocket handshake rejected: {status_line!r}")
        expected = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        accept = _header_value(response, b"sec-websocket-accept")
        if accept != expected:
            raise ConnectionError("websocket handshake accept-key mismatch")

    def _read_until(self, marker: bytes) -> bytes:
        while marker not in self._buffer:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ConnectionError("socket closed during handshake")
            self._buffer += chunk
        head, self._buffer = self._buffer.split(marker, 1)
        return head + marker

    def _read_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ConnectionError("socket closed mid-frame")
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def send_text(self, payload: str) -> None:
        data = payload.encode("utf-8")
        header = bytearray([0x81])  # FIN + text opcode
        mask = os.urandom(4)
        length = len(data)
        if length < 126:
            header.append(0x80 | length)
        elif length < 1 << 16:
            header.append(0x80 | 126)
            header += struct.pack(">H", length)
        else:
            header.append(0x80 | 127)
            header += struct.pack(">Q", length)
        header += mask
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        self._sock.sendall(bytes(header) + masked)

    def _send_control(self, opcode: int, data: bytes = b"") -> None:
        mask = os.urandom(4)
        header = bytes([0x80 | opcode, 0x80 | len(data)]) + mask
        self._sock.sendall(header + bytes(b ^ mask[i % 4] for i, b in enumerate(data)))

    def recv_text(self) -> str:
        """Next complete text message, transparently handling ping/close."""
        fragments: list[bytes] = []
        while True:
            first = self._read_exact(2)
            fin = first[0] & 0x80
            opcode = first[0] & 0x0F
            masked = first[1] & 0x80
            length = first[1] & 0x7F
            if length == 126:
                length = struct.unpack(">H", self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", self._read_exact(8))[0]
            mask = self._read_exact(4) if masked else b""
            payload = self._read_exact(length)
            if mask:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x9:  # ping
                self._send_control(0xA, payload)
                continue
            if opcode == 0xA:  # pong
                continue
            if opcode == 0x8:  # close
                self._send_control(0x8)
                raise ConnectionError("websocket closed by peer")
            fragments.append(payload)
            if fin:
                return b"".join(fragments).decode("utf-8")

    def close(self) -> None:
        try:
            self._send_control(0x8)
        except OSError:
            pass
        self._sock.close()


class CdpConnection:
    """JSON-RPC call/response over one page-target websocket."""

    def __init__(self, ws_url: str, timeout: float = 30.0):
        self.ws = WebSocketClient(ws_url, timeout)
        self._next_id = 0
        self._events: list[dict] = []

    def call(self, method: str, params: Optional[dict] = None, timeout: float = 30.0) -> dict:
        self._next_id += 1
        call_id = self._next_id
        self.ws.send_text(json.dumps({"id": call_id, "method": method, "params": params or {}}))
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            message = json.loads(self.ws.recv_text())
            if message.get("id") == call_id:
                if "error" in message:
                    raise RuntimeError(f"{method} failed: {message['error']}")
                return message.get("result", {})
            self._events.append(message)
        raise TimeoutError(f"no response to {method}")

    def wait_event(self, name: str, timeout: float) -> Optional[dict]:
        for i, event in enumerate(self._events):
            if event.get("method") == name:
                return self._events.pop(i)
        deadline = time.monotonic() + timeout
        self.ws._sock.settimeout(max(timeout, 0.05))
        try:
            while time.monotonic() < deadline:
                message = json.loads(self.ws.recv_text())
                if message.get("method") == name:
                    return message
                self._events.append(message)
        except (TimeoutError, socket.timeout):
            return None
        finally:
            self.ws._sock.settimeout(30.0)
        return None

    def close(self) -> None:
        self.ws.close()


_LAYOUT_WALKER_JS = r"""
(() => {
  const sx = window.scrollX, sy = window.scrollY;
  function walk(el) {
    const style = getComputedStyle(el);
    if (style.display === 'none') return null;
    const r = el.getBoundingClientRect();
    const node = {
      tag: el.tagName.toLowerCase(),
      bbox: [
        Math.round((r.x + sx) * 100) / 100,
        Math.round((r.y + sy) * 100) / 100,
        Math.round(r.width * 100) / 100,
        Math.round(r.height * 100) / 100
      ],
      children: []
    };
    if (r.width <= 0 || r.height <= 0) node.zero_area = true;
    let direct = '';
    for (const child of el.childNodes) {
      if (child.nodeType === Node.TEXT_NODE) direct += child.textContent;
    }
    direct = direct.replace(/\s+/g, ' ').trim();
    if (direct) {
      node.text = direct;
      const m = style.color.match(/rgba?\((\d+),\s*(\d+),\s*(\d+)/);
      node.color = m ? [+m[1], +m[2], +m[3]] : [0, 0, 0];
    }
    if (el.tagName === 'IMG' && !el.naturalWidth) node.substituted = true;
    for (const child of el.children) {
      const sub = walk(child);
      if (sub) node.children.push(sub);
    }
    return node;
  }
  return JSON.stringify(walk(document.documentElement));
})()
"""


class CdpBrowser:
    """One headless browser process with remote debugging enabled."""

    def __init__(self, binary: str, port: int = 0):
        if not shutil.which(binary):
            raise RenderStartupError(f"browser binary not found: {binary}")
        self.port = port or _free_port()
        self.process = subprocess.Popen(
            [
                binary,
                "--headless=new",
                f"--remote-debugging-port={self.port}",
                "--no-sandbox",
                "--disable-gpu",
                "--no-first-run",
                "--disable-background-networking",
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        self._wait_ready()

    def _wait_ready(self, timeout: float = 20.0) -> None:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            try:
                with urllib.request.urlopen(
                    f"http://127.0.0.1:{self.port}/json/version", timeout=2
                ) as response:
                    json.load(response)
                    return
            except OSError:
                time.sleep(0.2)
        self.close()
        raise RenderStartupError("browser did not open its debugging port")

    def new_page(self) -> CdpConnection:
        request = urllib.request.Request(
            f"http://127.0.0.1:{self.port}/json/new?about:blank", method="PUT"
        )
        with urllib.request.urlopen(request, timeout=5) as response:
            info = json.load(response)
        return CdpConnection(info["webSocketDebuggerUrl"])

    def close(self) -> None:
        if self.process.poll() is None:
            self.process.terminate()
            try:
                self.process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.process.kill()


def _free_port() -> int:
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


class CdpBackend:
    """render() contract over a shared browser; one tab per call."""

    def __init__(self, binary: str):
        self._binary = binary
        self._browser: Optional[CdpBrowser] = None

    def _ensure_browser(self) -> CdpBrowser:
        if self._browser is None or self._browser.process.poll() is not None:
            self._browser = CdpBrowser(self._binary)
        return self._browser

    def render(self, page_id: str, html: str, cfg) -> "RenderArtifact":  # noqa: F821
        from . import LayoutNode, RenderArtifact

        timeout = cfg.timeout_ms / 1000.0
        attempts = 0
        while True:
            attempts += 1
            try:
                return self._render_once(page_id, html, cfg, timeout)
            except (ConnectionError, RuntimeError, OSError, TimeoutError) as exc:
                if isinstance(exc, TimeoutError):
                    return RenderArtifact(page_id, None, None, False, "timeout")
                self._browser = None  # crashed browser: retried once
                if attempts >= 2:
                    return RenderArtifact(page_id, None, None, False, str(exc))

    def _render_once(self, page_id: str, html: str, cfg, timeout: float):
        from . import LayoutNode, RenderArtifact

        browser = self._ensure_browser()
        conn = browser.new_page()
        try:
            conn.call("Network.enable")
            conn.call("Network.setBlockedURLs", {"urls": ["http://*", "https://*"]})
            conn.call(
                "Emulation.setDeviceMetricsOverride",
                {
                    "width": cfg.viewport_width,
                    "height": cfg.viewport_height,
                    "deviceScaleFactor": 1,
                    "mobile": False,
                },
            )
            conn.call("Page.enable")
            data_url = "data:text/html;base64," + base64.b64encode(html.encode("utf-8")).decode()
            conn.call("Page.navigate", {"url": data_url}, timeout=timeout)
            conn.wait_event("Page.loadEventFired", timeout)
            metrics = conn.call("Page.getLayoutMetrics")
            content = metrics.get("cssContentSize") or metrics.get("contentSize", {})
            doc_height = int(content.get("height", cfg.viewport_height))
            clipped = doc_height > cfg.max_height
            shot = conn.call(
                "Page.captureScreenshot",
                {"format": "png", "captureBeyondViewport": True},
                timeout=timeout,
            )
            screenshot = base64.b64decode(shot["data"])
            result = conn.call(
                "Runtime.evaluate",
                {"expression": _LAYOUT_WALKER_JS, "returnByValue": True},
                timeout=timeout,
            )
            raw = result.get("result", {}).get("value")
            layout = LayoutNode.from_json(json.loads(raw)) if raw else None
            return RenderArtifact(
                id=page_id,
                screenshot=screenshot,
                layout=layout,
                render_ok=True,
                clipped=clipped,
            )
        finally:
            conn.close()
