"""Edit-distance alignment, WER aggregation, and the matched-vs-mismatched
prompt metrics.

Predictions for one template are arranged in a square matrix with test
subsets (topics) as rows and prompt topics as columns. The diagonal holds
the matched-prompt predictions. Three quantities summarize the matrix:

* perf: overall WER of the diagonal predictions.
* bperf: overall WER after picking, per row, the column with the lowest
  cell WER (the best achievable WER across all topic prompts).
* tfr: the fraction of rows whose minimum sits on the diagonal, ties
  counting as on-diagonal.

WER aggregation is micro by default: total edits over total reference
length, so rates above 1.0 are possible when insertions dominate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import (
    EmptyReference,
    EmptyTemplateList,
    IncompleteMatrix,
    ZeroPerf,
    ZeroReferenceLength,
)
from .textnorm import TokenSequence

MICRO = "micro"
MACRO = "macro"


@dataclass(frozen=True, slots=True)
class EditCounts:
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    def __post_init__(self):
        if min(self.substitutions, self.deletions, self.insertions, self.ref_len) < 0:
            raise ValueError("edit counts must be nonnegative")
        if self.substitutions + self.deletions > self.ref_len:
            raise ValueError("substitutions + deletions cannot exceed reference length")

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            raise ZeroReferenceLength("error rate undefined for empty reference")
        return self.total / self.ref_len


def _tokens(seq) -> tuple[str, ...]:
    if isinstance(seq, TokenSequence):
        return seq.tokens
    return tuple(seq)


def edit_distance(ref, hyp) -> EditCounts:
    """Minimal-cost alignment counts between reference and hypothesis.

    Unit costs; among minimal alignments the backtrace prefers
    substitution (or match), then insertion, then deletion, which pins a
    single (S, D, I) decomposition.
    """
    r = _tokens(ref)
    h = _tokens(hyp)
    if not r:
        raise EmptyReference()

    m, n = len(r), len(h)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dist[i][0] = i
    for j in range(1, n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        row = dist[i]
        prev = dist[i - 1]
        ri = r[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ri == h[j - 1] else 1
            row[j] = min(prev[j - 1] + cost, row[j - 1] + 1, prev[j] + 1)

    subs = dels = ins = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (0 if r[i - 1] == h[j - 1] else 1):
            subs += 0 if r[i - 1] == h[j - 1] else 1
            i -= 1
            j -= 1
        elif j > 0 and dist[i][j] == dist[i][j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return EditCounts(substitutions=subs, deletions=dels, insertions=ins, ref_len=m)


def micro_wer(results: Sequence[EditCounts]) -> float:
    """Total edits over total reference length."""
    total_ref = sum(c.ref_len for c in results)
    if total_ref == 0:
        raise ZeroReferenceLength("no reference tokens to normalize by")
    return sum(c.total for c in results) / total_ref


def macro_wer(results: Sequence[EditCounts]) -> float:
    """Unweighted mean of per-utterance error rates."""
    if not results:
        raise ZeroReferenceLength("no results to average")
    return sum(c.rate for c in results) / len(results)


def _aggregate(results: Sequence[EditCounts], aggregation: str) -> float:
    if aggregation == MICRO:
        return micro_wer(results)
    if aggregation == MACRO:
        return macro_wer(results)
    raise ValueError(f"unknown aggregation {aggregation!r}")


@dataclass(frozen=True, slots=True)
class UtterancePrediction:
    utterance_id: str
    hyp_tokens: tuple[str, ...]
    counts: EditCounts


@dataclass(frozen=True, slots=True)
class CellResult:
    subset_topic: str
    prompt_topic: str
    predictions: tuple[UtterancePrediction, ...]

    def counts(self) -> list[EditCounts]:
        return [p.counts for p in self.predictions]

    def wer(self) -> float:
        return micro_wer(self.counts())


@dataclass(frozen=True)
class WerMatrix:
    """Square grid of prediction sets: rows are subset topics, columns are
    prompt topics, in one shared topic order."""

    template_id: str
    topics: tuple[str, ...]
    cells: tuple[tuple[CellResult, ...], ...]

    def __post_init__(self):
        n = len(self.topics)
        if len(self.cells) != n or any(len(row) != n for row in self.cells):
            raise IncompleteMatrix(f"{self.template_id}: expected {n}x{n} cells")
        for i, row in enumerate(self.cells):
            for j, cell in enumerate(row):
                if cell.subset_topic != self.topics[i] or cell.prompt_topic != self.topics[j]:
                    raise IncompleteMatrix(
                        f"{self.template_id}: cell ({i},{j}) labeled "
                        f"({cell.subset_topic!r},{cell.prompt_topic!r})"
                    )
                if not cell.predictions:
                    raise IncompleteMatrix(
                        f"{self.template_id}: empty cell ({self.topics[i]!r},{self.topics[j]!r})"
                    )

    @property
    def size(self) -> int:
        return len(self.topics)

    def cell(self, subset_topic: str, prompt_topic: str) -> CellResult:
        i = self.topics.index(subset_topic)
        j = self.topics.index(prompt_topic)
        return self.cells[i][j]


@dataclass(frozen=True, slots=True)
class TemplateMetrics:
    template_id: str
    perf: float
    bperf: float
    tfr: float
    row_argmin: tuple[int, ...]


def row_argmins(matrix: WerMatrix) -> tuple[int, ...]:
    """Per-row index of the minimum-WER column.

    Ties resolve to the diagonal if it participates, else to the lowest
    column index.
    """
    picks = []
    for i, row in enumerate(matrix.cells):
        wers = [cell.wer() for cell in row]
        best = min(wers)
        if wers[i] == best:
            picks.append(i)
        else:
            picks.append(wers.index(best))
    return tuple(picks)


def perf(matrix: WerMatrix, aggregation: str = MICRO) -> float:
    """Overall WER of the matched-prompt (diagonal) predictions."""
    counts: list[EditCounts] = []
    for i in range(matrix.size):
        counts.extend(matrix.cells[i][i].counts())
    return _aggregate(counts, aggregation)


def bperf(matrix: WerMatrix, aggregation: str = MICRO) -> float:
    """Overall WER of the per-row best prediction sets."""
    counts: list[EditCounts] = []
    for i, j in enumerate(row_argmins(matrix)):
        counts.extend(matrix.cells[i][j].counts())
    return _aggregate(counts, aggregation)


def tfr(matrix: WerMatrix) -> float:
    """Fraction of rows whose minimum WER occurs on the diagonal."""
    picks = row_argmins(matrix)
    following = sum(1 for i, j in enumerate(picks) if i == j)
    return following / matrix.size


def compute_template_metrics(matrix: WerMatrix, aggregation: str = MICRO) -> TemplateMetrics:
    return TemplateMetrics(
        template_id=matrix.template_id,
        perf=perf(matrix, aggregation),
        bperf=bperf(matrix, aggregation),
        tfr=tfr(matrix),
        row_argmin=row_argmins(matrix),
    )


def relative_improvement(perf_value: float, bperf_value: float) -> float:
    """Relative gain of the best-achievable WER over the matched WER."""
    if perf_value <= 0:
        raise ZeroPerf("relative improvement undefined at zero perf")
    return (perf_value - bperf_value) / perf_value


@dataclass(frozen=True, slots=True)
class AveragedMetrics:
    tfr: float
    perf: float
    bperf: float


def average_metrics(per_template: Sequence[TemplateMetrics]) -> AveragedMetrics:
    """Unweighted means across templates."""
    if not per_template:
        raise EmptyTemplateList("no template metrics to average")
    k = len(per_template)
    return AveragedMetrics(
        tfr=sum(t.tfr for t in per_template) / k,
        perf=sum(t.perf for t in per_template) / k,
        bperf=sum(t.bperf for t in per_template) / k,
    )


def matrix_to_dict(matrix: WerMatrix) -> dict:
    """JSON-ready dump of a matrix, the unit the reporting and statistics
    layers consume."""
    return {
        "template_id": matrix.template_id,
        "topics": list(matrix.topics),
        "cells": [
            {
                "subset_topic": cell.subset_topic,
                "prompt_topic": cell.prompt_topic,
                "utterances": [
                    {
                        "id": p.utterance_id,
                        "hyp": list(p.hyp_tokens),
                        "S": p.counts.substitutions,
                        "D": p.counts.deletions,
                        "I": p.counts.insertions,
                        "ref_len": p.counts.ref_len,
                    }
                    for p in cell.predictions
                ],
            }
            for row in matrix.cells
            for cell in row
        ],
    }


def matrix_from_dict(doc: dict) -> WerMatrix:
    topics = tuple(doc["topics"])
    index = {t: i for i, t in enumerate(topics)}
    n = len(topics)
    grid: list[list[CellResult | None]] = [[None] * n for _ in range(n)]
    for cell in doc["cells"]:
        preds = tuple(
            UtterancePrediction(
                utterance_id=u["id"],
                hyp_tokens=tuple(u["hyp"]),
                counts=EditCounts(u["S"], u["D"], u["I"], u["ref_len"]),
            )
            for u in cell["utterances"]
        )
        i = index[cell["subset_topic"]]
        j = index[cell["prompt_topic"]]
        grid[i][j] = CellResult(cell["subset_topic"], cell["prompt_topic"], preds)
    if any(c is None for row in grid for c in row):
        raise IncompleteMatrix(f"{doc['template_id']}: dump is missing cells")
    return WerMatrix(
        template_id=doc["template_id"],
        topics=topics,
        cells=tuple(tuple(row) for row in grid),
    )
