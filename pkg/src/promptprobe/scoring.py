"""Turn raw transcription results into WER matrices and record sets.

The score stage joins the plan (which knows each request's template,
prompt topic, and subset) with the results (hypothesis text per request
id) and the manifest (references), normalizes text per the corpus
language, and aligns hypothesis against reference.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

from .backend import TranscriptionRequest, TranscriptionResult
from .errors import IncompleteMatrix
from .manifest import Manifest
from .metrics import (
    CellResult,
    EditCounts,
    UtterancePrediction,
    WerMatrix,
    edit_distance,
    micro_wer,
)
from .textnorm import (
    SimplificationTable,
    TokenSequence,
    count_words_in_language,
    normalize_english,
    normalize_mixed,
)


def tokenize_for_scoring(
    text: str,
    data_language: str,
    table: SimplificationTable | None = None,
    fillers: list[str] | None = None,
) -> TokenSequence:
    """English corpora score under WER tokenization, Mandarin and
    code-switched corpora under mixed (character-level CJK) tokenization."""
    if data_language == "en":
        return normalize_english(text, fillers=fillers)
    return normalize_mixed(text, table=table)


@dataclass(frozen=True)
class ScoredUtterance:
    utterance_id: str
    hyp_tokens: tuple[str, ...]
    counts: EditCounts


@dataclass
class GridScore:
    dataset: str
    data_language: str
    topics: tuple[str, ...]
    prompt_languages: list[str]
    matrices: dict[tuple[str, str], WerMatrix]  # (template_id, prompt_language)
    baseline: list[ScoredUtterance] | None


@dataclass
class PairScore:
    pair: str
    validity: str
    utterances: list[ScoredUtterance]
    word_count: int | None
    example_utterance_id: str | None
    example_text: str | None

    def mer(self) -> float:
        return micro_wer([u.counts for u in self.utterances])


@dataclass
class TokenPairScores:
    dataset: str
    word_count_language: str | None
    pairs: list[PairScore]


@dataclass
class BaselineScore:
    dataset: str
    utterances: list[ScoredUtterance]


def _score_one(
    utt,
    hyp_text: str,
    data_language: str,
    table: SimplificationTable | None,
    fillers: list[str] | None,
) -> ScoredUtterance:
    ref = tokenize_for_scoring(utt.reference, data_language, table, fillers)
    hyp = tokenize_for_scoring(hyp_text, data_language, table, fillers)
    return ScoredUtterance(utt.id, hyp.tokens, edit_distance(ref, hyp))


def _index_results(results: list[TranscriptionResult]) -> dict[str, str]:
    return {r.request_id: r.text for r in results}


def score_grid(
    manifest: Manifest,
    plan: list[TranscriptionRequest],
    results: list[TranscriptionResult],
    table: SimplificationTable | None = None,
    fillers: list[str] | None = None,
) -> GridScore:
    """Assemble one WER matrix per (template, prompt language)."""
    text_by_id = _index_results(results)
    by_uid = manifest.by_id()

    cells: dict[tuple[str, str, str, str], list[UtterancePrediction]] = {}
    languages: list[str] = []
    template_ids: list[str] = []
    baseline: list[ScoredUtterance] = []
    saw_baseline = False

    for req in plan:
        if req.meta.get("dataset") != manifest.name:
            continue
        if req.id not in text_by_id:
            raise IncompleteMatrix(f"no result for planned request {req.id}")
        utt = by_uid[req.utterance_id]
        scored = _score_one(utt, text_by_id[req.id], manifest.language, table, fillers)
        kind = req.meta.get("kind")
        if kind == "grid":
            gid = req.meta["template_id"]
            lang = req.meta["prompt_language"]
            if lang not in languages:
                languages.append(lang)
            if gid not in template_ids:
                template_ids.append(gid)
            key = (gid, lang, utt.topic, req.meta["prompt_topic"])
            cells.setdefault(key, []).append(
                UtterancePrediction(scored.utterance_id, scored.hyp_tokens, scored.counts)
            )
        elif kind == "baseline":
            saw_baseline = True
            baseline.append(scored)

    matrices: dict[tuple[str, str], WerMatrix] = {}
    expected = {t: [u.id for u in us] for t, us in _partition_ids(manifest).items()}
    for gid in template_ids:
        for lang in languages:
            grid_cells = []
            for subset in manifest.topics:
                row = []
                for prompt_topic in manifest.topics:
                    preds = cells.get((gid, lang, subset, prompt_topic), [])
                    got = [p.utterance_id for p in preds]
                    if got != expected[subset]:
                        raise IncompleteMatrix(
                            f"{gid}/{lang}: cell ({subset!r},{prompt_topic!r}) has "
                            f"{len(got)} predictions, expected {len(expected[subset])}"
                        )
                    row.append(CellResult(subset, prompt_topic, tuple(preds)))
                grid_cells.append(tuple(row))
            matrices[(gid, lang)] = WerMatrix(gid, manifest.topics, tuple(grid_cells))

    return GridScore(
        dataset=manifest.name,
        data_language=manifest.language,
        topics=manifest.topics,
        prompt_languages=languages,
        matrices=matrices,
        baseline=baseline if saw_baseline else None,
    )


def _partition_ids(manifest: Manifest) -> dict[str, list]:
    parts: dict[str, list] = {t: [] for t in manifest.topics}
    for u in manifest.utterances:
        parts[u.topic].append(u)
    return parts


def score_token_pairs(
    manifest: Manifest,
    plan: list[TranscriptionRequest],
    results: list[TranscriptionResult],
    table: SimplificationTable | None = None,
    word_count_language: str | None = "zh",
    classifier: Callable[[str], str] | None = None,
    example_utterance_id: str | None = None,
) -> TokenPairScores:
    """Score a language-token experiment: MER per pair, generated-word
    counts in the probed language, and one example prediction per pair."""
    text_by_id = _index_results(results)
    by_uid = manifest.by_id()
    if example_utterance_id is None and manifest.utterances:
        example_utterance_id = manifest.utterances[0].id

    order: list[str] = []
    grouped: dict[str, dict] = {}
    for req in plan:
        if req.meta.get("dataset") != manifest.name or req.meta.get("kind") != "token_pair":
            continue
        if req.id not in text_by_id:
            raise IncompleteMatrix(f"no result for planned request {req.id}")
        pair = req.meta["pair"]
        if pair not in grouped:
            order.append(pair)
            grouped[pair] = {
                "validity": req.meta["pair_validity"],
                "utterances": [],
                "words": 0,
                "example": None,
            }
        utt = by_uid[req.utterance_id]
        hyp_text = text_by_id[req.id]
        scored = _score_one(utt, hyp_text, manifest.language, table, None)
        g = grouped[pair]
        g["utterances"].append(scored)
        if word_count_language is not None:
            seq = TokenSequence(scored.hyp_tokens, "mixed_mer")
            g["words"] += count_words_in_language(seq, word_count_language, classifier)
        if utt.id == example_utterance_id:
            g["example"] = (utt.id, hyp_text)

    pairs = []
    for pair in order:
        g = grouped[pair]
        example = g["example"] or (None, None)
        pairs.append(
            PairScore(
                pair=pair,
                validity=g["validity"],
                utterances=g["utterances"],
                word_count=g["words"] if word_count_language is not None else None,
                example_utterance_id=example[0],
                example_text=example[1],
            )
        )
    return TokenPairScores(manifest.name, word_count_language, pairs)


def score_baseline(
    manifest: Manifest,
    plan: list[TranscriptionRequest],
    results: list[TranscriptionResult],
    table: SimplificationTable | None = None,
    fillers: list[str] | None = None,
) -> BaselineScore:
    text_by_id = _index_results(results)
    by_uid = manifest.by_id()
    scored = []
    for req in plan:
        if req.meta.get("dataset") != manifest.name or req.meta.get("kind") != "baseline":
            continue
        if req.id not in text_by_id:
            raise IncompleteMatrix(f"no result for planned request {req.id}")
        scored.append(
            _score_one(by_uid[req.utterance_id], text_by_id[req.id], manifest.language, table, fillers)
        )
    return BaselineScore(manifest.name, scored)


def diagonal_records(matrix: WerMatrix) -> list[EditCounts]:
    out: list[EditCounts] = []
    for i in range(matrix.size):
        out.extend(matrix.cells[i][i].counts())
    return out


def selected_records(matrix: WerMatrix, picks: tuple[int, ...]) -> list[EditCounts]:
    out: list[EditCounts] = []
    for i, j in enumerate(picks):
        out.extend(matrix.cells[i][j].counts())
    return out


def sum_counts_by_utterance(layers: list[list[tuple[str, EditCounts]]]) -> list[EditCounts]:
    """Collapse several per-utterance count lists into one record per
    utterance by summing counts across layers.

    Used for confidence intervals of cross-template averages: summing a
    fixed set of layers per utterance keeps the utterance as the
    resampling unit while the pooled micro WER equals the plain average
    of the per-layer micro WERs (every layer covers the same utterances).
    """
    order: list[str] = []
    acc: dict[str, list[int]] = {}
    for layer in layers:
        for uid, c in layer:
            if uid not in acc:
                order.append(uid)
                acc[uid] = [0, 0, 0, 0]
            a = acc[uid]
            a[0] += c.substitutions
            a[1] += c.deletions
            a[2] += c.insertions
            a[3] += c.ref_len
    return [EditCounts(*acc[uid]) for uid in order]


def matrix_layer(matrix: WerMatrix, picks: tuple[int, ...] | None = None) -> list[tuple[str, EditCounts]]:
    """Per-utterance (id, counts) for a matrix's diagonal, or for the
    row-minimum selection when picks are given."""
    out: list[tuple[str, EditCounts]] = []
    for i in range(matrix.size):
        j = i if picks is None else picks[i]
        for p in matrix.cells[i][j].predictions:
            out.append((p.utterance_id, p.counts))
    return out
