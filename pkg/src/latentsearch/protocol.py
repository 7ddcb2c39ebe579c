"""Line-delimited JSON protocol for out-of-process objectives and metrics.

An evaluation server speaks over its own stdin/stdout, one JSON document
per line:

    handshake (server -> client, first line):
        {"protocol": "evolgan-obj/1", "d": <int>, ...optional metadata}
    request  (client -> server):  {"id": <uint64>, "z": [<d floats>]}
    response (server -> client):  {"id": <uint64>, "score": <float>}
                             or   {"id": <uint64>, "error": "<message>"}
    shutdown (client -> server):  {"id": null, "cmd": "shutdown"}

Ids strictly increase per connection; the server answers in request
order, and exactly one request is in flight at a time.  Latent
coordinates are serialized as decimal literals that parse back to the
identical 64-bit float.  Distance servers use the same framing with
protocol token "evolgan-dist/1" and requests
{"id": n, "a": [...], "b": [...]} answered by {"id": n, "distance": x}.
"""

from __future__ import annotations

import json
import math
import selectors
import subprocess
import shlex

import numpy as np

from .objectives import EvaluationError, Objective
from .validation import check_dimension

__all__ = [
    "OBJECTIVE_PROTOCOL",
    "DISTANCE_PROTOCOL",
    "TransportError",
    "dump_line",
    "parse_line",
    "ExternalObjective",
    "build_golden_transcript",
    "run_golden_transcript",
]

OBJECTIVE_PROTOCOL = "evolgan-obj/1"
DISTANCE_PROTOCOL = "evolgan-dist/1"


class TransportError(RuntimeError):
    """The external process broke the wire protocol."""


def dump_line(message: dict) -> str:
    """Serialize one protocol message to a single JSON line."""
    return json.dumps(message, separators=(",", ":"), allow_nan=False) + "\n"


def parse_line(line: str) -> dict:
    """Parse one protocol line; any malformation is a transport error."""
    try:
        message = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TransportError(f"malformed protocol line {line!r}: {exc}") from exc
    if not isinstance(message, dict):
        raise TransportError(f"protocol line is not an object: {line!r}")
    return message


class _LineProcess:
    """A subprocess plus timeout-aware line reading over its stdout."""

    def __init__(self, command):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        try:
            self.proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start {self.command!r}: {exc}") from exc
        self._buffer = ""
        self._selector = selectors.DefaultSelector()
        self._selector.register(self.proc.stdout, selectors.EVENT_READ)

    def write_line(self, line: str) -> None:
        if self.proc.poll() is not None:
            raise TransportError(
                f"process {self.command!r} exited with code {self.proc.returncode}"
            )
        try:
            self.proc.stdin.write(line)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"write to {self.command!r} failed: {exc}") from exc

    def read_line(self, timeout: float | None) -> str:
        while "\n" not in self._buffer:
            if not self._selector.select(timeout):
                raise TransportError(
                    f"timed out after {timeout}s waiting for {self.command!r}"
                )
            chunk = self.proc.stdout.readline()
            if chunk == "":
                raise TransportError(
                    f"process {self.command!r} closed its output"
                    f" (exit code {self.proc.poll()})"
                )
            self._buffer += chunk
        line, self._buffer = self._buffer.split("\n", 1)
        return line

    def close(self, timeout: float = 5.0) -> None:
        try:
            if self.proc.poll() is None:
                try:
                    self.proc.stdin.close()
                except OSError:
                    pass
                try:
                    self.proc.wait(timeout=timeout)
                except subprocess.TimeoutExpired:
                    self.proc.kill()
                    self.proc.wait()
        finally:
            self._selector.close()


class _ProtocolClient:
    """Shared handshake/request plumbing for external servers."""

    def __init__(self, command, protocol: str, handshake_timeout: float,
                 request_timeout: float):
        self._process = _LineProcess(command)
        self._request_timeout = float(request_timeout)
        self._next_id = 1
        self._closed = False
        try:
            handshake = parse_line(self._process.read_line(float(handshake_timeout)))
        except TransportError:
            self._process.close()
            raise
        if handshake.get("protocol") != protocol:
            self._process.close()
            raise TransportError(
                f"expected protocol {protocol!r}, got handshake {handshake!r}"
            )
        if "d" not in handshake:
            self._process.close()
            raise TransportError(f"handshake missing dimension: {handshake!r}")
        try:
            self.handshake_dimension = check_dimension(handshake["d"])
        except ValueError as exc:
            self._process.close()
            raise TransportError(f"bad handshake dimension: {exc}") from exc
        self.handshake = handshake

    def round_trip(self, payload: dict) -> dict:
        """Send one request and return its matching response object."""
        request_id = self._next_id
        self._next_id += 1
        self._process.write_line(dump_line({"id": request_id, **payload}))
        response = parse_line(self._process.read_line(self._request_timeout))
        if response.get("id") != request_id:
            raise TransportError(
                f"response id {response.get('id')!r} does not match request {request_id}"
            )
        return response

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._process.write_line(dump_line({"id": None, "cmd": "shutdown"}))
        except TransportError:
            pass
        self._process.close()


class ExternalObjective(Objective):
    """Client side of the objective protocol, presented as an Objective.

    The dimension comes from the server's handshake.  A handshake
    metadata key "deterministic" (boolean) is honored when present;
    otherwise external objectives are conservatively treated as
    nondeterministic.  One request is in flight per connection, so the
    instance is not concurrency-safe; open one connection per worker.
    """

    concurrency_safe = False

    def __init__(self, command, handshake_timeout: float = 10.0,
                 request_timeout: float = 60.0):
        client = _ProtocolClient(
            command, OBJECTIVE_PROTOCOL, handshake_timeout, request_timeout
        )
        super().__init__(client.handshake_dimension)
        self._client = client
        self.deterministic = bool(client.handshake.get("deterministic", False))

    def _score(self, z: np.ndarray) -> float:
        response = self._client.round_trip({"z": z.tolist()})
        if "error" in response:
            raise EvaluationError(f"server error: {response['error']}")
        if "score" not in response:
            raise TransportError(f"response has neither score nor error: {response!r}")
        try:
            score = float(response["score"])
        except (TypeError, ValueError) as exc:
            raise TransportError(f"unparseable score {response['score']!r}") from exc
        if not math.isfinite(score):
            raise EvaluationError(f"server returned non-finite score {score!r}")
        return score

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ExternalObjective":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def build_golden_transcript(dimension: int = 256) -> dict:
    """Fixed request/response exchange a conforming mock server must pass.

    The mock contract is score = z[0] (identity generator composed with a
    first-coordinate scorer), so every expected value is exact.  All
    coordinates are dyadic rationals to keep the comparison float-exact
    across serializers.
    """
    dimension = check_dimension(dimension)

    def vec(first: float) -> list[float]:
        z = [0.0] * dimension
        z[0] = first
        z[-1] = 0.5
        return z

    short = vec(1.0)[1:]  # one coordinate short: must be refused
    return {
        "dimension": dimension,
        "protocol": OBJECTIVE_PROTOCOL,
        "steps": [
            {"type": "handshake", "expect": {"protocol": OBJECTIVE_PROTOCOL, "d": dimension}},
            {"type": "request", "send": {"id": 1, "z": vec(0.25)}, "expect": {"id": 1, "score": 0.25}},
            {"type": "request", "send": {"id": 2, "z": vec(-1.5)}, "expect": {"id": 2, "score": -1.5}},
            {"type": "request", "send": {"id": 3, "z": vec(0.0)}, "expect": {"id": 3, "score": 0.0}},
            {
                "type": "request",
                "send": {"id": 4, "z": short},
                "expect_error": {"id": 4, "message_contains": "dimension"},
            },
            {"type": "shutdown", "send": {"id": None, "cmd": "shutdown"}},
        ],
    }


def run_golden_transcript(command, transcript: dict,
                          handshake_timeout: float = 10.0,
                          request_timeout: float = 30.0) -> None:
    """Replay a golden transcript against a server command; raise on any
    deviation (TransportError) and return None when the server conforms."""
    process = _LineProcess(command)
    try:
        for step in transcript["steps"]:
            kind = step["type"]
            if kind == "handshake":
                handshake = parse_line(process.read_line(handshake_timeout))
                for key, value in step["expect"].items():
                    if handshake.get(key) != value:
                        raise TransportError(
                            f"handshake mismatch on {key!r}: {handshake!r}"
                        )
            elif kind == "request":
                process.write_line(dump_line(step["send"]))
                response = parse_line(process.read_line(request_timeout))
                if "expect_error" in step:
                    expected = step["expect_error"]
                    if response.get("id") != expected["id"]:
                        raise TransportError(f"error response id mismatch: {response!r}")
                    if "error" not in response:
                        raise TransportError(f"expected an error response, got {response!r}")
                    needle = expected.get("message_contains", "")
                    if needle and needle not in str(response["error"]):
                        raise TransportError(
                            f"error message missing {needle!r}: {response!r}"
                        )
                else:
                    if response != step["expect"]:
                        raise TransportError(
                            f"response {response!r} != expected {step['expect']!r}"
                        )
            elif kind == "shutdown":
                process.write_line(dump_line(step["send"]))
                deadline_exceeded = False
                try:
                    process.proc.wait(timeout=request_timeout)
                except subprocess.TimeoutExpired:
                    deadline_exceeded = True
                if deadline_exceeded:
                    raise TransportError("server did not exit after shutdown")
                if process.proc.returncode != 0:
                    raise TransportError(
                        f"server exited with code {process.proc.returncode} after shutdown"
                    )
            else:
                raise ValueError(f"unknown transcript step type {kind!r}")
    finally:
        process.close()
