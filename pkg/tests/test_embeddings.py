import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from dermsoap import StubEmbedder, cosine
from dermsoap.embeddings import RemoteEmbeddingClient, cosine_matrix
from dermsoap.errors import ProviderError


def test_stub_vectors_unit_norm_or_zero(stub):
    for text in ("lesion on the forearm", "a", "", "   "):
        vec = stub.embed_text(text)
        norm = np.linalg.norm(vec)
        assert norm == pytest.approx(1.0, abs=1e-9) or norm == 0.0


def test_stub_deterministic_across_instances():
    a = StubEmbedder(seed=3).embed_text("scaly pigmented patch")
    b = StubEmbedder(seed=3).embed_text("scaly pigmented patch")
    assert np.array_equal(a, b)


def test_stub_seed_changes_vectors():
    a = StubEmbedder(seed=0).embed_text("scaly patch")
    b = StubEmbedder(seed=1).embed_text("scaly patch")
    assert not np.allclose(a, b)


def test_equal_token_multisets_cosine_one(stub):
    a = stub.embed_text("Itching lesion, on forearm")
    b = stub.embed_text("forearm ITCHING on lesion!")
    assert cosine(a, b) == pytest.approx(1.0, abs=1e-6)


def test_empty_text_embeds_to_zero(stub):
    assert np.array_equal(stub.embed_text(""), np.zeros(stub.dim))
    tokens, vecs = stub.embed_tokens("")
    assert tokens == []
    assert vecs.shape == (0, stub.dim)


def test_embed_tokens_shapes(stub):
    tokens, vecs = stub.embed_tokens("Pearly papule, with crusting")
    assert tokens == ["pearly", "papule", "with", "crusting"]
    assert vecs.shape == (4, stub.dim)
    for row in vecs:
        assert np.linalg.norm(row) == pytest.approx(1.0, abs=1e-9)


def test_cosine_zero_vector_rule():
    assert cosine(np.zeros(4), np.ones(4)) == 0.0
    assert cosine(np.ones(4), np.zeros(4)) == 0.0


def test_cosine_matrix_matches_scalar(stub):
    _, a = stub.embed_tokens("itching scaly patch")
    _, b = stub.embed_tokens("scaly nodule")
    sims = cosine_matrix(a, b)
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            assert sims[i, j] == pytest.approx(cosine(a[i], b[j]), abs=1e-12)


def test_embed_texts_stacks(stub):
    matrix = stub.embed_texts(["a b", "c"])
    assert matrix.shape == (2, stub.dim)
    assert np.array_equal(matrix[0], stub.embed_text("a b"))


# ------------------------------------------------------------ remote client

class _StubHandler(BaseHTTPRequestHandler):
    backend = StubEmbedder(dim=16, seed=5)
    fail_mode = None

    def log_message(self, *args):
        pass

    def _reply(self, payload, status=200):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            self._reply({"status": "ok", "dim": self.backend.dim})
        else:
            self._reply({"error": "not found"}, 404)

    def do_POST(self):
        if self.fail_mode == "status":
            self._reply({"error": "boom"}, 500)
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if self.path == "/embed":
            if self.fail_mode == "short":
                self._reply({"dim": self.backend.dim, "vectors": []})
                return
            vectors = [self.backend.embed_text(t).tolist() for t in payload["texts"]]
            self._reply({"dim": self.backend.dim, "vectors": vectors})
        elif self.path == "/embed_tokens":
            tokens, vecs = self.backend.embed_tokens(payload["text"])
            self._reply({"tokens": tokens, "vectors": vecs.tolist()})
        else:
            self._reply({"error": "not found"}, 404)


@pytest.fixture
def embed_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.fail_mode = None
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()


def test_remote_client_matches_local_stub(embed_server):
    client = RemoteEmbeddingClient(embed_server)
    assert client.dim == 16
    local = StubEmbedder(dim=16, seed=5)
    remote_vec = client.embed_text("pearly papule")
    assert np.allclose(remote_vec, local.embed_text("pearly papule"))
    tokens, vecs = client.embed_tokens("pearly papule")
    assert tokens == ["pearly", "papule"]
    assert vecs.shape == (2, 16)


def test_remote_client_batch(embed_server):
    client = RemoteEmbeddingClient(embed_server, dim=16)
    matrix = client.embed_texts(["a", "b", "c"])
    assert matrix.shape == (3, 16)


def test_remote_client_status_error(embed_server):
    client = RemoteEmbeddingClient(embed_server, dim=16)
    _StubHandler.fail_mode = "status"
    with pytest.raises(ProviderError):
        client.embed_text("x")


def test_remote_client_size_mismatch(embed_server):
    client = RemoteEmbeddingClient(embed_server, dim=16)
    _StubHandler.fail_mode = "short"
    with pytest.raises(ProviderError):
        client.embed_texts(["a", "b"])


def test_remote_client_transport_error():
    client = RemoteEmbeddingClient("http://127.0.0.1:9", dim=8, timeout=0.2)
    with pytest.raises(ProviderError):
        client.embed_text("x")
