"""Exception types raised across the harness.

Every failure mode a caller is expected to branch on gets its own class;
anything else surfaces as a plain ValueError/OSError from the stdlib.
"""

from __future__ import annotations


class PromptProbeError(Exception):
    """Base class for all harness-specific errors."""


# manifest loading

class MissingFile(PromptProbeError):
    pass


class MalformedRecord(PromptProbeError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class UnknownTopic(PromptProbeError):
    def __init__(self, utterance_id: str, topic: str):
        super().__init__(f"utterance {utterance_id!r} has undeclared topic {topic!r}")
        self.utterance_id = utterance_id
        self.topic = topic


class DuplicateId(PromptProbeError):
    def __init__(self, utterance_id: str):
        super().__init__(f"duplicate utterance id {utterance_id!r}")
        self.utterance_id = utterance_id


class EmptyReference(PromptProbeError):
    """Reference transcript is empty (or normalizes to zero tokens)."""

    def __init__(self, utterance_id: str | None = None):
        super().__init__(
            "empty reference" if utterance_id is None
            else f"utterance {utterance_id!r} has an empty reference"
        )
        self.utterance_id = utterance_id


# prompt rendering

class MalformedTemplate(PromptProbeError):
    pass


class MissingKeywordRow(PromptProbeError):
    def __init__(self, template_id: str, topic: str):
        super().__init__(f"template {template_id!r} has no keyword row for topic {topic!r}")
        self.template_id = template_id
        self.topic = topic


class MissingTranslation(PromptProbeError):
    def __init__(self, template_id: str, language: str):
        super().__init__(f"template {template_id!r} has no {language!r} variant")
        self.template_id = template_id
        self.language = language


class KeptLanguageAbsent(PromptProbeError):
    pass


class CandidateNotAbsent(PromptProbeError):
    def __init__(self, code: str):
        super().__init__(f"candidate language {code!r} is present in the corpus")
        self.code = code


class UnsupportedLanguageCode(PromptProbeError):
    def __init__(self, code: str):
        super().__init__(f"language code {code!r} is not in the supported registry")
        self.code = code


class TooManyTokens(PromptProbeError):
    pass


# text normalization

class ClassifierUnavailable(PromptProbeError):
    def __init__(self, language: str):
        super().__init__(
            f"no token-language classifier configured for {language!r}"
        )
        self.language = language


# metrics

class ZeroReferenceLength(PromptProbeError):
    pass


class IncompleteMatrix(PromptProbeError):
    pass


class ZeroPerf(PromptProbeError):
    pass


class EmptyTemplateList(PromptProbeError):
    pass


# statistics

class EmptyRecords(PromptProbeError):
    pass


class TooFewPoints(PromptProbeError):
    pass


class DegenerateX(PromptProbeError):
    pass


# orchestration

class ConfigInvalid(PromptProbeError):
    def __init__(self, field: str, detail: str):
        super().__init__(f"config field {field!r}: {detail}")
        self.field = field


class BackendUnreachable(PromptProbeError):
    pass


class BackendProtocolError(PromptProbeError):
    def __init__(self, payload: str):
        super().__init__(f"unparseable backend payload: {payload!r}")
        self.payload = payload


class RetryExhausted(PromptProbeError):
    def __init__(self, request_ids: list[str]):
        ids = ", ".join(request_ids[:5])
        more = "" if len(request_ids) <= 5 else f" (+{len(request_ids) - 5} more)"
        super().__init__(f"no answer after retries for: {ids}{more}")
        self.request_ids = request_ids


class MissingTableEntry(PromptProbeError):
    def __init__(self, key: tuple[str, str]):
        super().__init__(f"fixed-table mock has no hypothesis for {key!r}")
        self.key = key


class OutputUnwritable(PromptProbeError):
    pass
