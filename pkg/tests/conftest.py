import threading
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from precog.tokenizer import TokenSequence, Vocabulary, load_vocabulary

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
SMALL_WORDS = ["the", "a", "to", "of", "and", "cat", "dog", "bird", "fish",
               "hello", "world", "sat", "on", "mat", "un", "##aff", "##able",
               "##s", ".", ",", "!", "?"]


def write_vocab(path, tokens):
    path.write_text("\n".join(tokens) + "\n", encoding="utf-8")
    return str(path)


def build_vocab(tokens, cased=False) -> Vocabulary:
    """In-memory Vocabulary for tests that do not exercise file loading."""
    return Vocabulary(entries=tuple(tokens),
                      token_to_id={t: i for i, t in enumerate(tokens)},
                      cased=cased)


@pytest.fixture
def small_vocab(tmp_path) -> Vocabulary:
    return load_vocabulary(write_vocab(tmp_path / "vocab.txt",
                                       SPECIALS + SMALL_WORDS))


def make_sequence(content, pair_split=None) -> TokenSequence:
    """Build [CLS] ... [SEP] (... [SEP]) around explicit content tokens."""
    if pair_split is None:
        tokens = ["[CLS]", *content, "[SEP]"]
        special = [True, *([False] * len(content)), True]
        segments = [0] * len(tokens)
    else:
        first, second = content[:pair_split], content[pair_split:]
        tokens = ["[CLS]", *first, "[SEP]", *second, "[SEP]"]
        special = [True, *([False] * len(first)), True,
                   *([False] * len(second)), True]
        segments = [0] * (len(first) + 2) + [1] * (len(second) + 1)
    return TokenSequence(tokens=tuple(tokens), is_special=tuple(special),
                         segment_ids=tuple(segments))


class StubTopkServer:
    """Minimal /topk + /health HTTP stub for client tests.

    Answers with the configured ranked token list truncated to k. Set
    fail_next to make the next N /topk responses 503 (retry testing).
    """

    def __init__(self, ranked_tokens, model="stub-model-1"):
        self.ranked = list(ranked_tokens)
        self.model = model
        self.fail_next = 0
        self.requests_seen = 0
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, code, payload):
                body = json.dumps(payload).encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/health":
                    self._send(200, {"model": stub.model})
                else:
                    self._send(404, {"detail": "not found"})

            def do_POST(self):
                if self.path != "/topk":
                    self._send(404, {"detail": "not found"})
                    return
                stub.requests_seen += 1
                if stub.fail_next > 0:
                    stub.fail_next -= 1
                    self._send(503, {"detail": "temporarily down"})
                    return
                length = int(self.headers["Content-Length"])
                request = json.loads(self.rfile.read(length))
                k = request.get("k", 100)
                self._send(200, {"model": stub.model,
                                 "tokens": stub.ranked[:k]})

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server(small_vocab):
    server = StubTopkServer(ranked_tokens=list(small_vocab.entries))
    yield server
    server.close()
