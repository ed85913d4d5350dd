"""Topic-labeled corpus manifests: loading, validation, partitioning.

A manifest file is line-delimited JSON. The first line is a header
``{"name", "topics", "language"}``; each following line is one utterance
``{"id", "audio_path", "reference", "topic", "duration_s"?}``. All text is
normalized to NFC on load so downstream tokenization is deterministic.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateId, EmptyReference, MalformedRecord, MissingFile, UnknownTopic
from .textnorm import _strip_punctuation

logger = logging.getLogger(__name__)

LANGUAGES = ("en", "zh", "mixed")


@dataclass(frozen=True, slots=True)
class Utterance:
    id: str
    audio_path: str
    reference: str
    topic: str
    language: str
    duration_s: float | None = None


@dataclass(frozen=True, slots=True)
class Manifest:
    name: str
    topics: tuple[str, ...]
    language: str
    utterances: tuple[Utterance, ...]

    def by_id(self) -> dict[str, Utterance]:
        return {u.id: u for u in self.utterances}


def _nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


def _require(record: dict, key: str, line_no: int) -> object:
    if key not in record:
        raise MalformedRecord(line_no, f"missing field {key!r}")
    return record[key]


def load_manifest(path: str | Path) -> Manifest:
    """Load and validate a manifest file.

    Rejects duplicate ids, undeclared topics, and references that are empty
    or reduce to nothing once punctuation is stripped (a zero-length
    reference would make the error rate undefined).
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))

    with path.open(encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise MalformedRecord(1, "empty manifest file")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise MalformedRecord(1, f"invalid JSON: {e}") from None
    if not isinstance(header, dict):
        raise MalformedRecord(1, "header must be a JSON object")

    name = _nfc(str(_require(header, "name", 1)))
    topics_raw = _require(header, "topics", 1)
    if not isinstance(topics_raw, list) or not topics_raw:
        raise MalformedRecord(1, "topics must be a non-empty list")
    topics = tuple(_nfc(str(t)) for t in topics_raw)
    if len(set(topics)) != len(topics):
        raise MalformedRecord(1, "topics must be distinct")
    language = str(_require(header, "language", 1))
    if language not in LANGUAGES:
        raise MalformedRecord(1, f"language must be one of {LANGUAGES}, got {language!r}")

    utterances: list[Utterance] = []
    seen: set[str] = set()
    topic_set = set(topics)
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedRecord(line_no, f"invalid JSON: {e}") from None
        if not isinstance(rec, dict):
            raise MalformedRecord(line_no, "record must be a JSON object")

        uid = _nfc(str(_require(rec, "id", line_no)))
        reference = _nfc(str(_require(rec, "reference", line_no)))
        topic = _nfc(str(_require(rec, "topic", line_no)))
        audio_path = _nfc(str(_require(rec, "audio_path", line_no)))
        duration = rec.get("duration_s")
        if duration is not None:
            duration = float(duration)
            if duration < 0:
                raise MalformedRecord(line_no, "duration_s must be nonnegative")

        if uid in seen:
            raise DuplicateId(uid)
        seen.add(uid)
        if topic not in topic_set:
            raise UnknownTopic(uid, topic)
        if not reference.strip() or not _strip_punctuation(reference).split():
            raise EmptyReference(uid)

        utterances.append(
            Utterance(
                id=uid,
                audio_path=audio_path,
                reference=reference,
                topic=topic,
                language=language,
                duration_s=duration,
            )
        )

    return Manifest(name=name, topics=topics, language=language, utterances=tuple(utterances))


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        header = {"name": manifest.name, "topics": list(manifest.topics), "language": manifest.language}
        f.write(json.dumps(header, ensure_ascii=False) + "\n")
        for u in manifest.utterances:
            rec = {"id": u.id, "audio_path": u.audio_path, "reference": u.reference, "topic": u.topic}
            if u.duration_s is not None:
                rec["duration_s"] = u.duration_s
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def partition_by_topic(manifest: Manifest) -> dict[str, list[Utterance]]:
    """Split utterances into per-topic subsets, preserving manifest order.

    Every declared topic gets a partition; declared-but-unused topics yield
    empty partitions and a logged warning.
    """
    parts: dict[str, list[Utterance]] = {t: [] for t in manifest.topics}
    for u in manifest.utterances:
        parts[u.topic].append(u)
    empty = [t for t, us in parts.items() if not us]
    if empty:
        logger.warning("manifest %s has topics with no utterances: %s", manifest.name, empty)
    return parts
