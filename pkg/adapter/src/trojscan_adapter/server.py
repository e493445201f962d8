"""Protocol-v1 server loop over stdio or TCP.

One JSON object per line. Protocol violations are answered with error frames
and the process stays alive; only transport loss ends the session. A single
connection is handled at a time (sequential service; concurrent connections
are out of scope for v1).
"""

from __future__ import annotations

import base64
import binascii
import json
import socket
import sys
from typing import IO

from .model import WrappedModel

PROTOCOL_VERSION = 1


def _model_info(model: WrappedModel) -> dict:
    return {
        "type": "model_info",
        "num_classes": model.num_classes,
        "height": model.height,
        "width": model.width,
    }


def handle_frame(model: WrappedModel, line: str) -> dict:
    """Answer one request line with one response frame."""
    try:
        frame = json.loads(line)
    except json.JSONDecodeError:
        return {"type": "error", "id": None, "message": "malformed JSON"}
    if not isinstance(frame, dict):
        return {"type": "error", "id": None, "message": "frame must be a JSON object"}

    kind = frame.get("type")
    if kind == "hello":
        return _model_info(model)
    if kind == "classify":
        request_id = frame.get("id")
        try:
            if frame.get("encoding", "rgb8_b64") != "rgb8_b64":
                raise ValueError(f"unsupported encoding {frame.get('encoding')!r}")
            raw = base64.b64decode(frame["image"], validate=True)
            probs = model.classify_bytes(raw, int(frame["height"]), int(frame["width"]))
        except (KeyError, TypeError, ValueError, binascii.Error) as exc:
            return {"type": "error", "id": request_id, "message": str(exc)}
        return {"type": "probs", "id": request_id, "probs": probs}
    return {"type": "error", "id": frame.get("id"), "message": f"unknown type {kind!r}"}


def _serve_streams(model: WrappedModel, reader: IO[str], writer: IO[str]) -> None:
    for line in reader:
        if not line.strip():
            continue
        response = handle_frame(model, line)
        writer.write(json.dumps(response, separators=(",", ":")) + "\n")
        writer.flush()


def serve_stdio(model: WrappedModel) -> None:
    """Answer frames on stdin/stdout until stdin closes."""
    _serve_streams(model, sys.stdin, sys.stdout)


def serve_tcp(model: WrappedModel, port: int, host: str = "127.0.0.1") -> None:
    """Accept connections forever, serving one at a time."""
    with socket.create_server((host, port)) as listener:
        print(f"serving on {host}:{listener.getsockname()[1]}", file=sys.stderr)
        while True:
            conn, _ = listener.accept()
            with conn:
                reader = conn.makefile("r", encoding="utf-8", newline="\n")
                writer = conn.makefile("w", encoding="utf-8", newline="\n")
                try:
                    _serve_streams(model, reader, writer)
                except OSError:
                    pass  # client went away; wait for the next connection
