"""Prompt templates, grids of matched/mismatched prompts, language-token
pairs, and decoder prompt assembly.

A template turns a topic label into a textual prompt. A grid instantiates
every template with every topic in every requested language; against a
topic-labeled test set, the prompt whose topic equals the subset's topic is
the matched one and all others are corruptions of it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .errors import (
    CandidateNotAbsent,
    KeptLanguageAbsent,
    MalformedTemplate,
    MissingKeywordRow,
    MissingTranslation,
    TooManyTokens,
    UnsupportedLanguageCode,
)

PATTERN_FAMILIES = (
    "identity",
    "task_instruction",
    "conversational",
    "topic_indication",
    "keyword_list",
)

SUPPORTED_LANGUAGES = frozenset(
    {"en", "zh", "es", "fr", "it", "de", "ja", "ko", "pt", "ru"}
)

SLOT = "{input}"

# Symbolic special-token names; the backend owns their byte-level rendering.
PREV_MARKER = "prev"
SOT_MARKER = "startoftranscript"
TASK_TRANSCRIBE = "transcribe"

FULLY_CORRECT = "fully_correct"
PARTIALLY_CORRECT = "partially_correct"


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    pattern_family: str
    language: str
    body: str | None = None
    keyword_table: dict[str, tuple[str, ...]] | None = None
    origin: str = "core"

    def __post_init__(self):
        if self.pattern_family not in PATTERN_FAMILIES:
            raise MalformedTemplate(f"{self.id}: unknown family {self.pattern_family!r}")
        if self.pattern_family == "keyword_list":
            if self.body is not None or not self.keyword_table:
                raise MalformedTemplate(f"{self.id}: keyword_list needs a keyword table, no body")
            for topic, words in self.keyword_table.items():
                if not words:
                    raise MalformedTemplate(f"{self.id}: empty keyword row for {topic!r}")
        else:
            if self.body is None or self.keyword_table is not None:
                raise MalformedTemplate(f"{self.id}: needs a body and no keyword table")
            if self.body.count(SLOT) != 1:
                raise MalformedTemplate(
                    f"{self.id}: body must contain exactly one {SLOT} slot"
                )


@dataclass(frozen=True)
class RenderedPrompt:
    template_id: str
    topic: str
    language: str
    text: str


@dataclass(frozen=True)
class LanguageTokenPair:
    first: str
    second: str
    validity: str

    def codes(self) -> tuple[str, str]:
        return (self.first, self.second)

    def label(self) -> str:
        return f"{self.first}+{self.second}"


@dataclass(frozen=True)
class DecoderPromptSpec:
    """Everything the decoder is conditioned on, in serialization order:
    prev marker, textual prompt (when present), start-of-transcript,
    language token(s), task token."""

    textual_prompt: str | None
    language_tokens: tuple[str, ...]
    task_token: str = TASK_TRANSCRIBE

    def token_sequence(self) -> tuple[str, ...]:
        head: tuple[str, ...] = ()
        if self.textual_prompt is not None:
            head = (PREV_MARKER, self.textual_prompt)
        return head + (SOT_MARKER,) + self.language_tokens + (self.task_token,)

    def wire_fields(self) -> dict:
        return {
            "textual_prompt": self.textual_prompt,
            "language_tokens": list(self.language_tokens),
            "task": self.task_token,
        }


def _capitalize(text: str) -> str:
    # No-op for scripts without case (CJK prompts stay untouched).
    return text[:1].upper() + text[1:] if text else text


def render(template: PromptTemplate, topic: str) -> RenderedPrompt:
    """Instantiate a template with a topic label.

    Keyword-list templates emit their per-topic keywords comma-separated;
    all prompts get an uppercased initial character where the script has
    case.
    """
    if template.pattern_family == "keyword_list":
        row = template.keyword_table.get(topic)
        if row is None:
            raise MissingKeywordRow(template.id, topic)
        text = ", ".join(row)
    else:
        text = template.body.replace(SLOT, topic)
    return RenderedPrompt(
        template_id=template.id,
        topic=topic,
        language=template.language,
        text=_capitalize(text),
    )


class TemplatePack:
    """A set of templates plus the pairing of parallel language variants.

    Each pairing forms a template group named after its English member;
    unpaired templates form singleton groups under their own id.
    """

    def __init__(self, templates: list[PromptTemplate], translations: list[dict[str, str]]):
        self.templates = {t.id: t for t in templates}
        if len(self.templates) != len(templates):
            raise MalformedTemplate("duplicate template ids in pack")
        self.groups: dict[str, dict[str, str]] = {}
        paired: set[str] = set()
        for pair in translations:
            for lang, tid in pair.items():
                if tid not in self.templates:
                    raise MalformedTemplate(f"translation refers to unknown template {tid!r}")
                if self.templates[tid].language != lang:
                    raise MalformedTemplate(
                        f"template {tid!r} is {self.templates[tid].language!r}, paired as {lang!r}"
                    )
                paired.add(tid)
            group_id = pair.get("en") or sorted(pair.values())[0]
            self.groups[group_id] = dict(pair)
        for t in templates:
            if t.id not in paired:
                self.groups[t.id] = {t.language: t.id}

    def group_ids(self) -> list[str]:
        return list(self.groups)

    def variant(self, group_id: str, language: str) -> PromptTemplate:
        group = self.groups.get(group_id)
        if group is None:
            raise MissingTranslation(group_id, language)
        tid = group.get(language)
        if tid is None:
            raise MissingTranslation(group_id, language)
        return self.templates[tid]


def _parse_template(obj: dict) -> PromptTemplate:
    table = obj.get("keyword_table")
    if table is not None:
        table = {topic: tuple(words) for topic, words in table.items()}
    return PromptTemplate(
        id=obj["id"],
        pattern_family=obj["pattern_family"],
        language=obj["language"],
        body=obj.get("body"),
        keyword_table=table,
        origin=obj.get("origin", "core"),
    )


def load_template_pack(path: str | Path) -> TemplatePack:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    templates = [_parse_template(o) for o in doc["templates"]]
    return TemplatePack(templates, doc.get("translations", []))


def default_template_pack() -> TemplatePack:
    ref = resources.files("promptprobe.data") / "templates_default.json"
    with resources.as_file(ref) as path:
        return load_template_pack(path)


def generate_prompt_grid(
    pack: TemplatePack,
    topics: list[str],
    languages: list[str],
    group_ids: list[str] | None = None,
) -> list[RenderedPrompt]:
    """Render one prompt per (template group, topic, language).

    Prompts carry the group id, so parallel language variants of one
    template line up under a single identity. Raises MissingTranslation
    when a group lacks a requested language.
    """
    if group_ids is None:
        group_ids = pack.group_ids()
    grid: list[RenderedPrompt] = []
    for gid in group_ids:
        for topic in topics:
            for lang in languages:
                prompt = render(pack.variant(gid, lang), topic)
                grid.append(replace(prompt, template_id=gid))
    return grid


def build_language_token_pairs(
    present: set[str],
    absent_candidates: list[str],
    kept: str,
) -> list[LanguageTokenPair]:
    """Build the fully correct token pair plus one corrupted pair per
    absent candidate.

    The corpus's two languages form the correct pair (kept language
    first); each corruption replaces the non-kept token with a language
    absent from the corpus. A pair of two absent languages is never
    produced.
    """
    for code in set(present) | set(absent_candidates) | {kept}:
        if code not in SUPPORTED_LANGUAGES:
            raise UnsupportedLanguageCode(code)
    if kept not in present:
        raise KeptLanguageAbsent(kept)
    if len(present) != 2:
        raise ValueError(f"need exactly two corpus languages, got {sorted(present)}")
    if len(set(absent_candidates)) != len(absent_candidates):
        raise ValueError("absent candidates must be distinct")
    for code in absent_candidates:
        if code in present:
            raise CandidateNotAbsent(code)

    (other,) = set(present) - {kept}
    pairs = [LanguageTokenPair(kept, other, FULLY_CORRECT)]
    pairs.extend(LanguageTokenPair(kept, code, PARTIALLY_CORRECT) for code in absent_candidates)
    return pairs


def assemble_decoder_prompt(
    text: str | None,
    tokens: list[str] | tuple[str, ...],
) -> DecoderPromptSpec:
    """Assemble the decoder conditioning for one request.

    Without text the previous-context segment is omitted entirely (the
    no-prompt setting).
    """
    if len(tokens) > 2:
        raise TooManyTokens(f"got {len(tokens)} language tokens, at most 2 allowed")
    if not tokens:
        raise ValueError("at least one language token is required")
    for code in tokens:
        if code not in SUPPORTED_LANGUAGES:
            raise UnsupportedLanguageCode(code)
    return DecoderPromptSpec(textual_prompt=text or None, language_tokens=tuple(tokens))
