"""Request execution: cache lookups, backend dispatch, bounded retries.

Each request is answered exactly once. Hypotheses are appended to the
cache as they arrive, so an interrupted run resumes from where it stopped
instead of re-querying the backend.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .backend import Backend, TranscriptionRequest, TranscriptionResult
from .cache import PredictionCache, prediction_key
from .errors import RetryExhausted

logger = logging.getLogger(__name__)


def execute(
    requests: list[TranscriptionRequest],
    backend: Backend,
    cache: PredictionCache | None = None,
    *,
    max_inflight: int = 8,
    max_retries: int = 2,
    expected_model_id: str | None = None,
    failure_log: list[dict] | None = None,
) -> list[TranscriptionResult]:
    """Answer every request, from cache where possible.

    The cache is consulted under the expected model id, resolved from (in
    order): the explicit argument, the backend's own hint, or the single
    model id present in the cache. Results come back in request order.
    Raises RetryExhausted when some request stays unanswered after
    ``max_retries`` re-dispatches; every failed attempt is appended to
    ``failure_log``.
    """
    if cache is None:
        cache = PredictionCache(None)
    model_id = expected_model_id or backend.model_hint or cache.uniform_model_id()

    results: dict[str, TranscriptionResult] = {}
    to_send: list[TranscriptionRequest] = []
    for req in requests:
        entry = None
        if model_id is not None:
            entry = cache.get(prediction_key(req.utterance_id, model_id, req.prompt, req.decoding))
        if entry is not None:
            results[req.id] = TranscriptionResult(req.id, entry["text"], entry["model_id"])
        else:
            to_send.append(req)
    if to_send:
        logger.info("dispatching %d/%d requests (%d cached)",
                    len(to_send), len(requests), len(requests) - len(to_send))

    for attempt in range(max_retries + 1):
        if not to_send:
            break
        answered, failures = backend.run_batch(to_send, max_inflight=max_inflight)
        by_id = {r.id: r for r in to_send}
        for rid, res in answered.items():
            results[rid] = res
            req = by_id[rid]
            cache.put(
                prediction_key(req.utterance_id, res.model_id, req.prompt, req.decoding),
                res.text,
                res.model_id,
            )
        retry: list[TranscriptionRequest] = []
        for req, reason in failures:
            if failure_log is not None:
                failure_log.append({"id": req.id, "attempt": attempt, "reason": reason})
            retry.append(req)
        if retry and attempt < max_retries:
            logger.warning("retrying %d requests (attempt %d)", len(retry), attempt + 1)
        to_send = retry

    if to_send:
        raise RetryExhausted([r.id for r in to_send])
    return [results[r.id] for r in requests]


def save_results(results: list[TranscriptionResult], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for res in results:
            rec = {"id": res.request_id, "text": res.text, "model_id": res.model_id}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_results(path: str | Path) -> list[TranscriptionResult]:
    out = []
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(TranscriptionResult(rec["id"], rec["text"], rec["model_id"]))
    return out
