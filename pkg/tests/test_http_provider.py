import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from prototext.embedding import HttpEmbeddingClient, http_embed
from prototext.errors import (
    DimMismatchError,
    EmptyTextError,
    NetworkError,
    ProtocolError,
)

DIM = 16


def stub_vector(text: str) -> list[float]:
    base = [float((len(text) + i) % 7) for i in range(DIM)]
    base[0] = float(len(text))
    return base


class StubHandler(BaseHTTPRequestHandler):
    behavior = "ok"  # ok | short_row | not_json

    def log_message(self, *args):
        pass

    def _send(self, code, payload, raw=None):
        body = raw if raw is not None else json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok", "dim": DIM})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/embed":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        texts = json.loads(self.rfile.read(length))["texts"]
        if self.behavior == "not_json":
            self._send(200, None, raw=b"definitely not json")
            return
        rows = [stub_vector(t) for t in texts]
        if self.behavior == "short_row" and rows:
            rows[0] = rows[0][:-1]
        self._send(200, {"embeddings": rows, "dim": DIM, "model": "stub"})


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    StubHandler.behavior = "ok"
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join(timeout=5)


class TestHttpEmbeddingClient:
    def test_single_text_conforms(self, stub_server):
        client = HttpEmbeddingClient(stub_server, timeout=5)
        [vec] = client.embed_batch(["hello"])
        assert vec.shape == (DIM,)
        assert client.dim == DIM

    def test_health_advertises_dim(self, stub_server):
        client = HttpEmbeddingClient(stub_server, timeout=5)
        assert client.dim == DIM

    def test_order_preserved(self, stub_server):
        client = HttpEmbeddingClient(stub_server, timeout=5)
        vecs = client.embed_batch(["a", "bbb"])
        assert vecs[0][0] == 1.0 and vecs[1][0] == 3.0

    def test_short_row_is_protocol_error(self, stub_server):
        StubHandler.behavior = "short_row"
        client = HttpEmbeddingClient(stub_server, timeout=5)
        with pytest.raises(ProtocolError):
            client.embed_batch(["hello"])

    def test_not_json_is_protocol_error(self, stub_server):
        StubHandler.behavior = "not_json"
        client = HttpEmbeddingClient(stub_server, timeout=5)
        with pytest.raises(ProtocolError):
            client.embed_batch(["hello"])

    def test_unreachable_endpoint_is_network_error(self):
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            dead_port = s.getsockname()[1]
        client = HttpEmbeddingClient(f"http://127.0.0.1:{dead_port}", timeout=1)
        with pytest.raises(NetworkError):
            client.embed_batch(["hello"])

    def test_expected_dim_mismatch(self, stub_server):
        client = HttpEmbeddingClient(stub_server, timeout=5, expected_dim=8)
        with pytest.raises(DimMismatchError):
            client.embed_batch(["hello"])

    def test_empty_batch_no_request(self):
        client = HttpEmbeddingClient("http://127.0.0.1:1", timeout=1)
        assert client.embed_batch([]) == []

    def test_empty_text_rejected_before_request(self):
        client = HttpEmbeddingClient("http://127.0.0.1:1", timeout=1)
        with pytest.raises(EmptyTextError, match="batch item 1"):
            client.embed_batch(["fine", "  "])

    def test_one_shot_helper(self, stub_server):
        vecs = http_embed(stub_server, ["hello", "worlds"], timeout=5)
        assert len(vecs) == 2 and all(v.shape == (DIM,) for v in vecs)
