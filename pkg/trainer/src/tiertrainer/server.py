"""Scorer service: POST /score, stateless, strict request validation.

A single endpoint can serve a three-way scorer (multiclass/preference
modes) and one binary capability checkpoint per cascade stage. Malformed
requests get HTTP 400 with an error body; oversized ones (over 64 KiB)
get 413. Unknown JSON fields are ignored.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Iterable

from .data import TIER_NAMES, build_text
from .train import Checkpoint

MAX_REQUEST_BYTES = 64 * 1024


class ScorerRegistry:
    """Which checkpoint answers which request mode."""

    def __init__(self, checkpoints: Checkpoint | Iterable[Checkpoint]):
        if isinstance(checkpoints, Checkpoint):
            checkpoints = [checkpoints]
        self.multiclass: Checkpoint | None = None
        self.binary: dict[str, Checkpoint] = {}
        for ckpt in checkpoints:
            if ckpt.mode == "binary":
                if ckpt.target_tier is None:
                    raise ValueError("binary checkpoint lacks a target tier")
                self.binary[ckpt.target_tier] = ckpt
            else:
                self.multiclass = ckpt

    def score(self, body: dict) -> dict:
        """Validated request body -> response payload. Raises ValueError
        with a client-facing message on any contract violation."""
        mode = _require(body, "mode", str)
        if mode not in ("multiclass", "binary", "preference"):
            raise ValueError(f"unknown mode {mode!r}")
        question = _require(body, "question", str)
        hint = _require(body, "hint", str)
        n_tables = _require_count(body, "n_tables")
        n_columns = _require_count(body, "n_columns")
        linked = _require(body, "linked_schema", list)
        entries = []
        for item in linked:
            if not isinstance(item, dict):
                raise ValueError("linked_schema entries must be objects")
            table = item.get("table")
            columns = item.get("columns")
            if not isinstance(table, str) or not isinstance(columns, list) or not all(
                isinstance(c, str) for c in columns
            ):
                raise ValueError("linked_schema entries need a table and a column list")
            entries.append({"table": table, "columns": columns})
        text = build_text(question, hint, entries)

        if mode == "binary":
            tier = _require(body, "tier", str)
            if tier not in TIER_NAMES:
                raise ValueError(f"unknown tier {tier!r}")
            ckpt = self.binary.get(tier)
            if ckpt is None:
                raise ValueError(f"no binary checkpoint served for tier {tier}")
            verdict, score = ckpt.verdict(text, n_tables, n_columns)
            return {"verdict": verdict, "score": score}

        if self.multiclass is None:
            raise ValueError(f"no checkpoint served for mode {mode}")
        scores = self.multiclass.tier_scores(text, n_tables, n_columns)
        return {"scores": scores}


def _require(body: dict, key: str, kind: type):
    value = body.get(key)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ValueError(f"missing or invalid field {key!r}")
    return value


def _require_count(body: dict, key: str) -> int:
    value = body.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"field {key!r} must be a non-negative integer")
    return value


class _Handler(BaseHTTPRequestHandler):
    registry: ScorerRegistry  # set on the subclass built per service

    def do_POST(self):
        if self.path != "/score":
            self._reply(404, {"error": "unknown path"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_REQUEST_BYTES:
            self._reply(413, {"error": "request too large"})
            return
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
            if not isinstance(body, dict):
                raise ValueError("request body must be a JSON object")
            payload = self.registry.score(body)
        except (json.JSONDecodeError, ValueError) as exc:
            self._reply(400, {"error": str(exc)})
            return
        self._reply(200, payload)

    def _reply(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # keep test output quiet
        pass


class ScorerService:
    """A running scorer; shut down explicitly or use as a context manager."""

    def __init__(self, server: ThreadingHTTPServer):
        self._server = server
        self._thread = threading.Thread(target=server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return str(host), int(port)

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "ScorerService":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def serve_scorer(
    checkpoints: Checkpoint | Iterable[Checkpoint],
    bind_address: tuple[str, int] = ("127.0.0.1", 0),
) -> ScorerService:
    """Start serving the scorer protocol; port 0 picks a free port."""
    registry = ScorerRegistry(checkpoints)
    handler = type("BoundHandler", (_Handler,), {"registry": registry})
    server = ThreadingHTTPServer(bind_address, handler)
    return ScorerService(server)
