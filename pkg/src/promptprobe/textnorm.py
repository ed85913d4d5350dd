"""Text normalization and tokenization for WER/MER scoring.

Two pipelines are provided. ``normalize_english`` prepares monolingual
English text for word error rate. ``normalize_mixed`` prepares
Mandarin-English (or pure Mandarin) text for mixed error rate, where every
Chinese character counts as one word: the text is NFC-composed, mapped to
simplified characters, split so each CJK codepoint stands alone, lowercased
in its non-CJK parts, and stripped of punctuation.

Punctuation policy: all Unicode punctuation categories are removed, except
apostrophes sitting between Latin word characters ("let's" stays one token).
"""

from __future__ import annotations

import unicodedata
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from importlib import resources

from .errors import ClassifierUnavailable

MODE_ENGLISH = "english_wer"
MODE_MIXED = "mixed_mer"

# Unified ideographs plus extensions A and B.
_CJK_RANGES = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF), (0x20000, 0x2A6DF))

_APOSTROPHES = {"'", "’"}


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


@dataclass(frozen=True)
class TokenSequence:
    """Whitespace-free tokens plus the pipeline that produced them."""

    tokens: tuple[str, ...]
    mode: str

    def __post_init__(self):
        for tok in self.tokens:
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"bad token {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


class SimplificationTable:
    """Character-level traditional-to-simplified mapping.

    Unmapped characters pass through unchanged.
    """

    def __init__(self, mapping: dict[str, str]):
        for k, v in mapping.items():
            if len(k) != 1 or len(v) != 1:
                raise ValueError(f"table entries must be single codepoints: {k!r} -> {v!r}")
        self.mapping = dict(mapping)

    def apply(self, ch: str) -> str:
        return self.mapping.get(ch, ch)

    def __len__(self) -> int:
        return len(self.mapping)


def load_simplification_table(path) -> SimplificationTable:
    """Load a two-column TSV of traditional<TAB>simplified codepoints."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected two tab-separated columns")
            mapping[parts[0]] = parts[1]
    return SimplificationTable(mapping)


_DEFAULT_TABLE: SimplificationTable | None = None


def default_simplification_table() -> SimplificationTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        ref = resources.files("promptprobe.data") / "zh_simplification.tsv"
        with resources.as_file(ref) as path:
            _DEFAULT_TABLE = load_simplification_table(path)
    return _DEFAULT_TABLE


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() and not is_cjk(ch)


def _strip_punctuation(text: str) -> str:
    out = []
    for i, ch in enumerate(text):
        cat = unicodedata.category(ch)
        if cat.startswith("P"):
            keep = (
                ch in _APOSTROPHES
                and 0 < i < len(text) - 1
                and _is_word_char(text[i - 1])
                and _is_word_char(text[i + 1])
            )
            out.append(ch if keep else " ")
        else:
            out.append(ch)
    return "".join(out)


def normalize_mixed(text: str, table: SimplificationTable | None = None) -> TokenSequence:
    """Tokenize code-switched text so each Chinese character is one word.

    Pipeline order: NFC composition, traditional-to-simplified mapping,
    space insertion around every CJK codepoint, lowercasing of non-CJK
    segments, punctuation removal, whitespace split.
    """
    if table is None:
        table = default_simplification_table()
    text = unicodedata.normalize("NFC", text)
    pieces = []
    for ch in text:
        if is_cjk(ch):
            pieces.append(f" {table.apply(ch)} ")
        else:
            pieces.append(ch.lower())
    stripped = _strip_punctuation("".join(pieces))
    return TokenSequence(tuple(stripped.split()), MODE_MIXED)


def normalize_english(text: str, fillers: Iterable[str] | None = None) -> TokenSequence:
    """Lowercase, strip punctuation, collapse whitespace, split.

    ``fillers`` optionally names tokens (e.g. hesitation markers) dropped
    after tokenization; by default nothing is dropped.
    """
    text = unicodedata.normalize("NFC", text).lower()
    tokens = _strip_punctuation(text).split()
    if fillers:
        drop = set(fillers)
        tokens = [t for t in tokens if t not in drop]
    return TokenSequence(tuple(tokens), MODE_ENGLISH)


def _is_cjk_token(token: str) -> bool:
    return len(token) == 1 and is_cjk(token)


def count_words_in_language(
    seq: TokenSequence,
    lang: str,
    classifier: Callable[[str], str] | None = None,
) -> int:
    """Count tokens belonging to ``lang``.

    Mandarin is counted structurally (single-CJK-codepoint tokens); any
    other language needs a token classifier callable returning a language
    code per token.
    """
    if lang == "zh":
        return sum(1 for t in seq if _is_cjk_token(t))
    if classifier is None:
        raise ClassifierUnavailable(lang)
    return sum(1 for t in seq if classifier(t) == lang)
