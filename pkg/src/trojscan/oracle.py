"""Black-box model access.

A model under inspection is anything with ``classify(Image) -> list[float]``
and an ``input_dims`` attribute. The scanner never sees weights or gradients;
it only issues classify queries, so everything here is about querying
reliably and counting exactly.

``CountingOracle`` wraps any oracle, counts every query, and discovers the
class count with a single cached probe (skipped when the oracle advertises it,
as protocol endpoints do via their handshake).

``ProtocolOracle`` speaks wire protocol v1: newline-delimited JSON over TCP
or over the stdio pipes of a spawned command.

    -> {"type": "hello", "version": 1}
    <- {"type": "model_info", "num_classes": T, "height": H, "width": W}
    -> {"type": "classify", "id": k, "encoding": "rgb8_b64",
        "height": H, "width": W, "image": "<base64 H*W*3 bytes row-major>"}
    <- {"type": "probs", "id": k, "probs": [...]}
    <- {"type": "error", "id": k, "message": "..."}

Responses may arrive out of order; ``id`` is the correlation key.
"""

from __future__ import annotations

import base64
import json
import shlex
import socket
import subprocess
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .imaging import Image

__all__ = [
    "ModelOracle",
    "CountingOracle",
    "ProtocolOracle",
    "OracleError",
    "OracleTransportError",
    "OracleRemoteError",
    "classify_batch",
    "check_prob_vector",
    "probe_image",
    "PROTOCOL_VERSION",
]

PROTOCOL_VERSION = 1
PROBE_SEED = 0x7A0B  # fixed seed for the class-count probe image
PROB_SUM_TOLERANCE = 1e-6


class OracleError(RuntimeError):
    """Base class for oracle failures."""


class OracleTransportError(OracleError):
    """Connection or I/O failure; the request may be retried."""

    retriable = True


class OracleRemoteError(OracleError):
    """The endpoint answered a request with an error frame."""

    def __init__(self, message: str, request_id: int | None = None, index: int | None = None):
        detail = message
        if index is not None:
            detail = f"batch item {index}: {message}"
        super().__init__(detail)
        self.request_id = request_id
        self.index = index


@runtime_checkable
class ModelOracle(Protocol):
    input_dims: tuple[int, int]

    def classify(self, image: Image) -> list[float]: ...


def check_prob_vector(probs: Sequence[float], num_classes: int | None = None) -> list[float]:
    """Validate a probability vector: entries in [0, 1], sum within 1e-6 of 1."""
    probs = [float(p) for p in probs]
    if num_classes is not None and len(probs) != num_classes:
        raise ValueError(f"expected {num_classes} probabilities, got {len(probs)}")
    if not probs:
        raise ValueError("empty probability vector")
    if any(p < 0.0 or p > 1.0 for p in probs):
        raise ValueError(f"probabilities outside [0, 1]: {probs}")
    total = sum(probs)
    if abs(total - 1.0) > PROB_SUM_TOLERANCE:
        raise ValueError(f"probabilities sum to {total}, not 1")
    return probs


def probe_image(dims: tuple[int, int]) -> Image:
    """Deterministic random image used to discover the number of classes."""
    rng = np.random.default_rng(PROBE_SEED)
    return Image(rng.integers(0, 256, size=(*dims, 3), dtype=np.uint8))


class CountingOracle:
    """Query-counting wrapper; scan reports must match its count exactly."""

    def __init__(self, inner: ModelOracle):
        self.inner = inner
        self.queries = 0
        self._num_classes: int | None = None

    @property
    def input_dims(self) -> tuple[int, int]:
        return self.inner.input_dims

    def classify(self, image: Image) -> list[float]:
        self.queries += 1
        return self.inner.classify(image)

    def classify_batch(self, images: Sequence[Image]) -> list[list[float]]:
        self.queries += len(images)
        inner_batch = getattr(self.inner, "classify_batch", None)
        if inner_batch is not None:
            return inner_batch(images)
        return [self.inner.classify(img) for img in images]

    def num_classes(self) -> int:
        """Class count: advertised by the endpoint, or one cached probe."""
        if self._num_classes is None:
            advertised = getattr(self.inner, "advertised_num_classes", None)
            if advertised is not None:
                self._num_classes = int(advertised)
            else:
                self._num_classes = len(self.classify(probe_image(self.input_dims)))
        return self._num_classes


def classify_batch(oracle: ModelOracle, images: Sequence[Image]) -> list[list[float]]:
    """Batch classify, element-wise equal to individual calls, order preserved."""
    if not images:
        return []
    native = getattr(oracle, "classify_batch", None)
    if native is not None:
        return native(images)
    return [oracle.classify(img) for img in images]


# ---------------------------------------------------------------------------
# Wire protocol client
# ---------------------------------------------------------------------------


class _LineChannel:
    """One JSON object per line over a socket or a child process's pipes."""

    def __init__(self, reader, writer, proc: subprocess.Popen | None = None, sock=None):
        self._reader = reader
        self._writer = writer
        self._proc = proc
        self._sock = sock

    @classmethod
    def open_tcp(cls, host: str, port: int, timeout: float) -> "_LineChannel":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise OracleTransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        reader = sock.makefile("r", encoding="utf-8", newline="\n")
        writer = sock.makefile("w", encoding="utf-8", newline="\n")
        return cls(reader, writer, sock=sock)

    @classmethod
    def open_cmd(cls, argv: list[str]) -> "_LineChannel":
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise OracleTransportError(f"cannot spawn {argv!r}: {exc}") from exc
        return cls(proc.stdout, proc.stdin, proc=proc)

    def send(self, obj: dict) -> None:
        try:
            self._writer.write(json.dumps(obj, separators=(",", ":")) + "\n")
            self._writer.flush()
        except (OSError, ValueError, BrokenPipeError) as exc:
            raise OracleTransportError(f"send failed: {exc}") from exc

    def recv(self) -> dict:
        try:
            line = self._reader.readline()
        except OSError as exc:
            raise OracleTransportError(f"receive failed: {exc}") from exc
        if not line:
            raise OracleTransportError("connection closed by endpoint")
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as exc:
            raise OracleTransportError(f"malformed frame: {line!r}") from exc
        if not isinstance(frame, dict):
            raise OracleTransportError(f"malformed frame: {line!r}")
        return frame

    def close(self) -> None:
        for stream in (self._writer, self._reader):
            try:
                stream.close()
            except OSError:
                pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._proc is not None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class ProtocolOracle:
    """ModelOracle backed by a protocol-v1 endpoint.

    One connection handles one in-flight pipeline; use separate instances for
    concurrent scans. ``classify_batch`` writes the whole burst before reading
    responses, tolerating out-of-order answers.
    """

    def __init__(self, channel: _LineChannel):
        self._channel = channel
        self._next_id = 0
        self._pending: dict[int, dict] = {}
        self._channel.send({"type": "hello", "version": PROTOCOL_VERSION})
        info = self._channel.recv()
        if info.get("type") != "model_info":
            raise OracleTransportError(f"expected model_info, got {info!r}")
        self.advertised_num_classes = int(info["num_classes"])
        self.input_dims = (int(info["height"]), int(info["width"]))

    @classmethod
    def from_endpoint(cls, endpoint: str, timeout: float = 30.0) -> "ProtocolOracle":
        """Open ``tcp:host:port`` or ``cmd:<argv>`` endpoints."""
        if endpoint.startswith("tcp:"):
            host, _, port = endpoint[4:].rpartition(":")
            if not host or not port.isdigit():
                raise ValueError(f"bad tcp endpoint {endpoint!r}")
            return cls(_LineChannel.open_tcp(host, int(port), timeout))
        if endpoint.startswith("cmd:"):
            argv = shlex.split(endpoint[4:])
            if not argv:
                raise ValueError(f"bad cmd endpoint {endpoint!r}")
            return cls(_LineChannel.open_cmd(argv))
        raise ValueError(f"unknown endpoint scheme {endpoint!r}")

    def _send_classify(self, image: Image) -> int:
        if image.dims != self.input_dims:
            raise ValueError(f"image dims {image.dims} != model dims {self.input_dims}")
        request_id = self._next_id
        self._next_id += 1
        self._channel.send(
            {
                "type": "classify",
                "id": request_id,
                "encoding": "rgb8_b64",
                "height": image.height,
                "width": image.width,
                "image": base64.b64encode(image.to_bytes()).decode("ascii"),
            }
        )
        return request_id

    def _recv_for(self, request_id: int) -> list[float]:
        while request_id not in self._pending:
            frame = self._channel.recv()
            kind = frame.get("type")
            if kind == "probs":
                self._pending[int(frame["id"])] = frame
            elif kind == "error":
                raise OracleRemoteError(
                    str(frame.get("message", "unspecified error")),
                    request_id=frame.get("id"),
                )
            else:
                raise OracleTransportError(f"unexpected frame {frame!r}")
        frame = self._pending.pop(request_id)
        return check_prob_vector(frame["probs"], self.advertised_num_classes)

    def classify(self, image: Image) -> list[float]:
        return self._recv_for(self._send_classify(image))

    def classify_batch(self, images: Sequence[Image]) -> list[list[float]]:
        ids = [self._send_classify(img) for img in images]
        results: list[list[float]] = []
        for index, request_id in enumerate(ids):
            try:
                results.append(self._recv_for(request_id))
            except OracleRemoteError as exc:
                raise OracleRemoteError(str(exc), exc.request_id, index=index) from None
        return results

    def close(self) -> None:
        self._channel.close()

    def __enter__(self) -> "ProtocolOracle":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
