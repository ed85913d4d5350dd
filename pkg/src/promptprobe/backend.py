"""ASR backends and the line-delimited wire protocol.

One request per line, UTF-8, LF-terminated; responses may arrive out of
order and are matched by id:

    request:  {"id", "audio_path", "textual_prompt": str|null,
               "language_tokens": [codes], "task": "transcribe",
               "decoding": {"strategy": "greedy"}}
    response: {"id", "text", "model_id"}  or  {"id", "error"}

Stream backends talk this protocol to a child process or a TCP service.
The mock backend answers in process and is the test double for everything
above the wire.
"""

from __future__ import annotations

import hashlib
import json
import logging
import queue
import random
import shlex
import socket
import subprocess
import threading
from dataclasses import dataclass, field

from .errors import BackendProtocolError, BackendUnreachable, MissingTableEntry
from .manifest import Manifest
from .prompts import DecoderPromptSpec

logger = logging.getLogger(__name__)

GREEDY = {"strategy": "greedy"}


@dataclass(frozen=True)
class TranscriptionRequest:
    id: str
    utterance_id: str
    audio_path: str
    prompt: DecoderPromptSpec
    decoding: dict = field(default_factory=lambda: dict(GREEDY))
    meta: dict = field(default_factory=dict)

    def wire_line(self) -> str:
        body = {
            "id": self.id,
            "audio_path": self.audio_path,
            **self.prompt.wire_fields(),
            "decoding": self.decoding,
        }
        return json.dumps(body, ensure_ascii=False)


@dataclass(frozen=True)
class TranscriptionResult:
    request_id: str
    text: str
    model_id: str


def parse_response_line(line: str) -> dict:
    """Parse one backend response line; raises BackendProtocolError when
    the line is not a valid response object."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        raise BackendProtocolError(line) from None
    if not isinstance(obj, dict) or "id" not in obj:
        raise BackendProtocolError(line)
    if "error" not in obj and ("text" not in obj or "model_id" not in obj):
        raise BackendProtocolError(line)
    return obj


class Backend:
    """Answers batches of requests; a batch may partially fail.

    run_batch returns (results by request id, failures as (request,
    reason) pairs). Failed requests are retryable by the caller.
    """

    model_hint: str | None = None

    def run_batch(
        self, requests: list[TranscriptionRequest], max_inflight: int = 8
    ) -> tuple[dict[str, TranscriptionResult], list[tuple[TranscriptionRequest, str]]]:
        raise NotImplementedError


# mock policies

ECHO = "echo"
TOPIC_SENSITIVE = "topic_sensitive"
FIXED_TABLE = "fixed_table"


def _corrupt(reference: str, k_fraction: float, stream_key: str) -> str:
    """Deterministically damage a fraction of whitespace tokens.

    Appending a letter to a token guarantees the hypothesis differs from
    the reference even after scoring normalization.
    """
    tokens = reference.split()
    if not tokens:
        return reference
    k = max(1, round(k_fraction * len(tokens)))
    k = min(k, len(tokens))
    seed = int.from_bytes(hashlib.sha256(stream_key.encode("utf-8")).digest()[:8], "big")
    rng = random.Random(seed)
    for pos in rng.sample(range(len(tokens)), k):
        tokens[pos] = tokens[pos] + "x"
    return " ".join(tokens)


def prompt_table_key(prompt: DecoderPromptSpec) -> str:
    if prompt.textual_prompt is not None:
        return prompt.textual_prompt
    return "+".join(prompt.language_tokens)


class MockBackend(Backend):
    """Deterministic in-process backend.

    Policies:
      echo: always return the reference.
      topic_sensitive: return the reference when the request's prompt
        topic matches the utterance topic (or no textual prompt is given),
        otherwise corrupt p_corrupt of the reference tokens.
      fixed_table: serve a preloaded hypothesis per (utterance id, prompt)
        key.
    """

    def __init__(
        self,
        manifests: list[Manifest],
        policy: str = ECHO,
        p_corrupt: float = 0.5,
        seed: int = 0,
        table: dict[tuple[str, str], str] | None = None,
    ):
        if policy not in (ECHO, TOPIC_SENSITIVE, FIXED_TABLE):
            raise ValueError(f"unknown mock policy {policy!r}")
        self.policy = policy
        self.p_corrupt = p_corrupt
        self.seed = seed
        self.table = table or {}
        self.utterances = {}
        for m in manifests:
            self.utterances.update(m.by_id())
        self.calls = 0
        if policy == ECHO:
            self.model_hint = "mock:echo"
        elif policy == TOPIC_SENSITIVE:
            self.model_hint = f"mock:topic-sensitive:{p_corrupt}"
        else:
            self.model_hint = "mock:fixed-table"

    def transcribe(self, req: TranscriptionRequest) -> TranscriptionResult:
        self.calls += 1
        utt = self.utterances.get(req.utterance_id)
        if utt is None:
            raise KeyError(f"mock backend knows no utterance {req.utterance_id!r}")
        if self.policy == ECHO:
            text = utt.reference
        elif self.policy == TOPIC_SENSITIVE:
            prompt_topic = req.meta.get("prompt_topic")
            if req.prompt.textual_prompt is None or prompt_topic == utt.topic:
                text = utt.reference
            else:
                stream_key = f"{self.seed}|{utt.id}|{req.prompt.textual_prompt}"
                text = _corrupt(utt.reference, self.p_corrupt, stream_key)
        else:
            key = (req.utterance_id, prompt_table_key(req.prompt))
            if key not in self.table:
                raise MissingTableEntry(key)
            text = self.table[key]
        return TranscriptionResult(req.id, text, self.model_hint)

    def run_batch(self, requests, max_inflight: int = 8):
        results = {}
        failures = []
        for req in requests:
            try:
                results[req.id] = self.transcribe(req)
            except MissingTableEntry as e:
                failures.append((req, str(e)))
        return results, failures


def mock_transcribe(req: TranscriptionRequest, backend: MockBackend) -> TranscriptionResult:
    return backend.transcribe(req)


class StreamBackend(Backend):
    """Shared machinery for backends spoken to over a byte stream."""

    def _open(self):
        """Return (write_line, read_line, close); read_line returns None at EOF."""
        raise NotImplementedError

    def run_batch(self, requests, max_inflight: int = 8):
        if not requests:
            return {}, []
        try:
            write_line, read_line, close = self._open()
        except OSError as e:
            raise BackendUnreachable(str(e)) from e

        results: dict[str, TranscriptionResult] = {}
        failures: list[tuple[TranscriptionRequest, str]] = []
        by_id = {r.id: r for r in requests}
        incoming: queue.Queue = queue.Queue()

        def reader():
            while True:
                try:
                    line = read_line()
                except OSError:
                    line = None
                incoming.put(line)
                if line is None:
                    return

        t = threading.Thread(target=reader, daemon=True)
        t.start()

        pending: set[str] = set()
        broken: str | None = None
        todo = list(requests)
        try:
            while (todo or pending) and broken is None:
                while todo and len(pending) < max_inflight:
                    req = todo.pop(0)
                    try:
                        write_line(req.wire_line())
                    except OSError as e:
                        broken = f"write failed: {e}"
                        todo.insert(0, req)
                        break
                    pending.add(req.id)
                if broken or not pending:
                    continue
                line = incoming.get()
                if line is None:
                    broken = "backend closed the stream"
                    break
                try:
                    obj = parse_response_line(line)
                except BackendProtocolError as e:
                    broken = str(e)
                    break
                rid = obj["id"]
                if rid not in pending:
                    logger.warning("dropping response for unknown/settled id %r", rid)
                    continue
                pending.discard(rid)
                if "error" in obj:
                    failures.append((by_id[rid], f"backend error: {obj['error']}"))
                else:
                    results[rid] = TranscriptionResult(rid, obj["text"], obj["model_id"])
        finally:
            close()

        if broken is not None:
            for req in todo:
                failures.append((req, broken))
            for rid in pending:
                failures.append((by_id[rid], broken))
        return results, failures


class SubprocessBackend(StreamBackend):
    """Child-process worker speaking the wire protocol on stdin/stdout."""

    def __init__(self, command: str | list[str]):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)

    def _open(self):
        try:
            proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except (OSError, ValueError) as e:
            raise BackendUnreachable(f"cannot start {self.argv!r}: {e}") from e

        def write_line(line: str):
            proc.stdin.write(line + "\n")
            proc.stdin.flush()

        def read_line():
            line = proc.stdout.readline()
            return line.rstrip("\n") if line else None

        def close():
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()

        return write_line, read_line, close


class TcpBackend(StreamBackend):
    """Wire protocol over a TCP connection (url form tcp://host:port)."""

    def __init__(self, host: str, port: int):
        self.host = host
        self.port = port

    def _open(self):
        try:
            sock = socket.create_connection((self.host, self.port), timeout=30)
        except OSError as e:
            raise BackendUnreachable(f"cannot connect to {self.host}:{self.port}: {e}") from e
        rfile = sock.makefile("r", encoding="utf-8", newline="\n")
        wfile = sock.makefile("w", encoding="utf-8", newline="\n")

        def write_line(line: str):
            wfile.write(line + "\n")
            wfile.flush()

        def read_line():
            line = rfile.readline()
            return line.rstrip("\n") if line else None

        def close():
            # unblock any reader stuck in readline before touching the
            # file objects; closing them first would wait on its lock
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            for h in (wfile, rfile):
                try:
                    h.close()
                except OSError:
                    pass
            try:
                sock.close()
            except OSError:
                pass

        return write_line, read_line, close


def backend_from_descriptor(descriptor: str, manifests: list[Manifest], seed: int = 0) -> Backend:
    """Build a backend from a CLI descriptor.

    Forms: "mock:echo", "mock:topic_sensitive:<p>", "tcp://host:port",
    or anything else as a child-process command line.
    """
    if descriptor.startswith("mock:"):
        parts = descriptor.split(":")
        policy = parts[1]
        if policy == ECHO:
            return MockBackend(manifests, ECHO)
        if policy == TOPIC_SENSITIVE:
            p = float(parts[2]) if len(parts) > 2 else 0.5
            return MockBackend(manifests, TOPIC_SENSITIVE, p_corrupt=p, seed=seed)
        raise ValueError(f"unknown mock policy in {descriptor!r}")
    if descriptor.startswith("tcp://"):
        hostport = descriptor[len("tcp://"):]
        host, _, port = hostport.partition(":")
        return TcpBackend(host, int(port))
    return SubprocessBackend(descriptor)
