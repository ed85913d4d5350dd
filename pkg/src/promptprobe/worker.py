"""Deterministic wire-protocol worker for exercising stream backends.

Reads request lines on stdin, answers on stdout. Modes:

  echo            answer with the reference of the utterance whose
                  audio_path matches (manifests required)
  constant:TEXT   answer TEXT for every request
  shuffle:K       like echo, but buffer K requests and answer them in
                  reverse order (exercises out-of-order handling)
  flaky:N         like echo, but die abruptly after N answers
"""

from __future__ import annotations

import json
import sys

from .manifest import load_manifest


def _respond(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")
    sys.stdout.flush()


def serve(manifest_paths: list[str], mode: str, model_id: str) -> int:
    by_audio: dict[str, str] = {}
    for p in manifest_paths:
        m = load_manifest(p)
        for u in m.utterances:
            by_audio[u.audio_path] = u.reference

    constant: str | None = None
    shuffle_k = 0
    flaky_n: int | None = None
    if mode.startswith("constant:"):
        constant = mode.split(":", 1)[1]
    elif mode.startswith("shuffle:"):
        shuffle_k = int(mode.split(":", 1)[1])
    elif mode.startswith("flaky:"):
        flaky_n = int(mode.split(":", 1)[1])
    elif mode != "echo":
        print(f"unknown worker mode {mode!r}", file=sys.stderr)
        return 2

    def answer(req: dict) -> dict:
        if constant is not None:
            return {"id": req["id"], "text": constant, "model_id": model_id}
        ref = by_audio.get(req["audio_path"])
        if ref is None:
            return {"id": req["id"], "error": f"unknown audio {req['audio_path']!r}"}
        return {"id": req["id"], "text": ref, "model_id": model_id}

    answered = 0
    buffered: list[dict] = []
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            print(f"worker: skipping unparseable line: {line[:100]}", file=sys.stderr)
            continue
        if not isinstance(req, dict) or "id" not in req:
            print("worker: skipping request without id", file=sys.stderr)
            continue

        if shuffle_k > 1:
            buffered.append(req)
            if len(buffered) >= shuffle_k:
                for r in reversed(buffered):
                    _respond(answer(r))
                buffered.clear()
            continue

        _respond(answer(req))
        answered += 1
        if flaky_n is not None and answered >= flaky_n:
            # simulate a crash: no flush of pending state, nonzero exit
            return 1

    for r in reversed(buffered):
        _respond(answer(r))
    return 0
