"""Translation backend interface: in-process models and a line-based wire protocol.

Wire grammar (UTF-8, one JSON object per line, field order fixed):

    request:  {"id": <int>, "text": <str>, "mode": "greedy"|"beam"|"sample_topk",
               "k": <int>, "seed": <int>}
    response: {"id": <int>, "text": <str>}   on success
              {"id": <int>, "error": <str>}  on per-sentence failure

The client matches responses to requests by id, so servers may answer out
of order. A response whose id is unknown or already answered aborts the
batch (IdMismatchError); a line that does not parse as a request/response
object aborts with ProtocolError naming the line number. Requests that
never receive a response (server closed early) are reported as failures
on exactly their sentence indices.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from dataclasses import dataclass
from typing import Sequence

from ..errors import BackendTimeoutError, IdMismatchError, ProtocolError
from .models import CharVocab, StepModel
from .search import decode_beam, decode_greedy, decode_topk_sample

MODES = ("greedy", "beam", "sample_topk")
_REQUEST_KEYS = ("id", "text", "mode", "k", "seed")


@dataclass(frozen=True)
class BackendResult:
    """Outcome for one sentence: either text or an error message."""

    index: int
    text: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


class ModelBackend:
    """In-process backend over a StepModel with a character vocabulary."""

    def __init__(self, model: StepModel, vocab: CharVocab, model_id: str = "toy", max_len: int | None = None):
        self.model = model
        self.vocab = vocab
        self.model_id = model_id
        self.max_len = max_len

    def _decode_one(self, text: str, mode: str, k: int, seed: int) -> str:
        src = self.vocab.encode(text)
        max_len = self.max_len or (2 * len(src) + 8)
        if mode == "greedy":
            hyp = decode_greedy(self.model, src, max_len)
        elif mode == "beam":
            hyp = decode_beam(self.model, src, max(k, 1), max_len)[0]
        elif mode == "sample_topk":
            hyp = decode_topk_sample(self.model, src, k, seed, max_len)
        else:
            raise ValueError(f"unknown decode mode {mode!r}")
        return self.vocab.decode(hyp.surface_tokens(self.model.eos_id()))

    def translate_batch(self, texts: Sequence[str], mode: str, k: int, seeds: Sequence[int]) -> list[BackendResult]:
        if len(seeds) != len(texts):
            raise ValueError("need one seed per text")
        results = []
        for i, (text, seed) in enumerate(zip(texts, seeds)):
            try:
                results.append(BackendResult(i, text=self._decode_one(text, mode, k, seed)))
            except Exception as exc:  # per-sentence isolation
                results.append(BackendResult(i, error=str(exc)))
        return results


def format_request(req_id: int, text: str, mode: str, k: int, seed: int) -> str:
    return json.dumps(
        {"id": req_id, "text": text, "mode": mode, "k": k, "seed": seed},
        ensure_ascii=False,
    )


def parse_request(line: str, line_no: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"request is not valid JSON: {exc.msg}", line_no) from exc
    if not isinstance(obj, dict) or tuple(obj.keys()) != _REQUEST_KEYS:
        raise ProtocolError(f"request fields must be exactly {list(_REQUEST_KEYS)}", line_no)
    if obj["mode"] not in MODES:
        raise ProtocolError(f"unknown mode {obj['mode']!r}", line_no)
    if not isinstance(obj["id"], int) or not isinstance(obj["k"], int) or not isinstance(obj["seed"], int):
        raise ProtocolError("id, k and seed must be integers", line_no)
    if not isinstance(obj["text"], str):
        raise ProtocolError("text must be a string", line_no)
    return obj


def parse_response(line: str, line_no: int) -> tuple[int, str | None, str | None]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc.msg}", line_no) from exc
    if not isinstance(obj, dict) or "id" not in obj or not isinstance(obj["id"], int):
        raise ProtocolError("response must be an object with an integer 'id'", line_no)
    keys = tuple(obj.keys())
    if keys == ("id", "text") and isinstance(obj["text"], str):
        return obj["id"], obj["text"], None
    if keys == ("id", "error") and isinstance(obj["error"], str):
        return obj["id"], None, obj["error"]
    raise ProtocolError("response fields must be exactly ['id', 'text'] or ['id', 'error']", line_no)


class RemoteBackend:
    """Client for the wire protocol over TCP.

    Pipelines up to max_inflight requests on one connection; results come
    back in input order regardless of the server's answer order.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0, max_inflight: int = 32, model_id: str | None = None):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.max_inflight = max(1, max_inflight)
        self.model_id = model_id or f"tcp://{host}:{port}"

    def translate_batch(self, texts: Sequence[str], mode: str, k: int, seeds: Sequence[int]) -> list[BackendResult]:
        if len(seeds) != len(texts):
            raise ValueError("need one seed per text")
        if mode not in MODES:
            raise ValueError(f"unknown decode mode {mode!r}")
        n = len(texts)
        results: dict[int, BackendResult] = {}
        if n == 0:
            return []
        with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
            sock.settimeout(self.timeout)
            reader = sock.makefile("r", encoding="utf-8", newline="\n")
            writer = sock.makefile("w", encoding="utf-8", newline="\n")
            next_to_send = 0
            line_no = 0

            def send_some() -> None:
                nonlocal next_to_send
                while next_to_send < n and next_to_send - len(results) < self.max_inflight:
                    line = format_request(next_to_send, texts[next_to_send], mode, k, seeds[next_to_send])
                    writer.write(line + "\n")
                    next_to_send += 1
                writer.flush()
                if next_to_send == n:
                    sock.shutdown(socket.SHUT_WR)

            send_some()
            sent_all = next_to_send == n
            while len(results) < n:
                try:
                    line = reader.readline()
                except (socket.timeout, TimeoutError) as exc:
                    pending = sorted(set(range(next_to_send)) - set(results))
                    raise BackendTimeoutError(
                        f"no response from {self.host}:{self.port} within {self.timeout}s; "
                        f"pending sentence indices {pending[:10]}"
                    ) from exc
                if line == "":
                    break  # server closed; unanswered ids become failures below
                line_no += 1
                resp_id, text, error = parse_response(line.rstrip("\n"), line_no)
                if resp_id < 0 or resp_id >= next_to_send:
                    raise IdMismatchError(f"response id {resp_id} was never requested", line_no)
                if resp_id in results:
                    raise IdMismatchError(f"duplicate response for id {resp_id}", line_no)
                results[resp_id] = BackendResult(resp_id, text=text, error=error)
                if not sent_all:
                    send_some()
                    sent_all = next_to_send == n
        return [
            results.get(i, BackendResult(i, error="no response from backend"))
            for i in range(n)
        ]


class ModelRequestHandler(socketserver.StreamRequestHandler):
    """Reference server handler: answers each request line via the bound backend."""

    def handle(self) -> None:
        backend: ModelBackend = self.server.backend  # type: ignore[attr-defined]
        line_no = 0
        for raw in self.rfile:
            line_no += 1
            line = raw.decode("utf-8").rstrip("\n")
            if not line:
                continue
            try:
                req = parse_request(line, line_no)
            except ProtocolError as exc:
                self._reply({"id": -1, "error": str(exc)})
                continue
            try:
                text = backend._decode_one(req["text"], req["mode"], req["k"], req["seed"])
                self._reply({"id": req["id"], "text": text})
            except Exception as exc:
                self._reply({"id": req["id"], "error": str(exc)})

    def _reply(self, obj: dict) -> None:
        self.wfile.write((json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8"))
        self.wfile.flush()


class ModelServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], backend: ModelBackend):
        super().__init__(address, ModelRequestHandler)
        self.backend = backend


def serve_model(backend: ModelBackend, host: str = "127.0.0.1", port: int = 0) -> ModelServer:
    """Start a threaded reference server; returns it (use server.server_address)."""
    server = ModelServer((host, port), backend)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
