"""Append-only prediction cache.

Hypotheses are keyed by a digest over everything that determines a
deterministic backend's answer: utterance id, backend model id, the full
decoder prompt, and the decoding settings. Switching checkpoints changes
the model id and therefore never reuses stale hypotheses.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from .prompts import DecoderPromptSpec

CACHE_FILENAME = "predictions.jsonl"


def prediction_key(
    utterance_id: str,
    model_id: str,
    prompt: DecoderPromptSpec,
    decoding: dict,
) -> str:
    payload = json.dumps(
        {
            "utterance_id": utterance_id,
            "model_id": model_id,
            "prompt": prompt.wire_fields(),
            "decoding": decoding,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class PredictionCache:
    """Single-writer cache backed by one JSONL file (or memory only)."""

    def __init__(self, cache_dir: str | Path | None):
        self._entries: dict[str, dict] = {}
        self._path: Path | None = None
        if cache_dir is not None:
            cache_dir = Path(cache_dir)
            cache_dir.mkdir(parents=True, exist_ok=True)
            self._path = cache_dir / CACHE_FILENAME
            if self._path.is_file():
                with self._path.open(encoding="utf-8") as f:
                    for line in f:
                        line = line.strip()
                        if not line:
                            continue
                        entry = json.loads(line)
                        self._entries[entry["key"]] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> dict | None:
        return self._entries.get(key)

    def put(self, key: str, text: str, model_id: str) -> None:
        if key in self._entries:
            return
        entry = {"key": key, "text": text, "model_id": model_id, "ts": time.time()}
        self._entries[key] = entry
        if self._path is not None:
            with self._path.open("a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def model_ids(self) -> set[str]:
        return {e["model_id"] for e in self._entries.values()}

    def uniform_model_id(self) -> str | None:
        ids = self.model_ids()
        return next(iter(ids)) if len(ids) == 1 else None
