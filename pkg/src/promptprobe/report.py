"""Report emission: machine-readable JSON, delimited summary tables, and
regression points.

Reports are byte-stable: keys are sorted, floats are written untouched,
and nothing time-dependent goes in, so identical runs produce identical
files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .config import ExperimentConfig
from .errors import DegenerateX, OutputUnwritable, TooFewPoints, ZeroPerf
from .metrics import (
    MACRO,
    average_metrics,
    compute_template_metrics,
    macro_wer,
    micro_wer,
    relative_improvement,
)
from .scoring import (
    BaselineScore,
    GridScore,
    TokenPairScores,
    diagonal_records,
    matrix_layer,
    selected_records,
    sum_counts_by_utterance,
)
from .stats import bootstrap_ci, linear_regression

EMPTY_RUN_MARKER = "EMPTY_RUN"


def _pct(x: float | None) -> str:
    return "" if x is None else f"{100.0 * x:.2f}"


def _ensure_out_dir(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OutputUnwritable(f"cannot write to {out}: {e}") from e
    return out


def _ci(records, cfg: ExperimentConfig) -> list[float] | None:
    # percentile bootstrap resamples the micro statistic; in macro mode the
    # point estimate uses a different functional, so no interval is claimed
    if cfg.wer_aggregation == MACRO or not records:
        return None
    low, high = bootstrap_ci(records, cfg.bootstrap)
    return [low, high]


def _wer(records, cfg: ExperimentConfig) -> float:
    return macro_wer(records) if cfg.wer_aggregation == MACRO else micro_wer(records)


def _stat_entry(metric: str, point: float, ci: list[float] | None, cfg: ExperimentConfig) -> dict:
    return {
        "metric": metric,
        "point": point,
        "ci_low": None if ci is None else ci[0],
        "ci_high": None if ci is None else ci[1],
        "resamples": cfg.bootstrap.resamples,
        "confidence": cfg.bootstrap.confidence,
        "seed": cfg.bootstrap.seed,
    }


def _regression_section(dataset, lang, target, points):
    base = {"dataset": dataset, "prompt_language": lang, "target": target}
    try:
        fit = linear_regression([(p["tfr"], p["value"]) for p in points])
    except (DegenerateX, TooFewPoints) as e:
        return {**base, "error": str(e), "points": points}
    return {
        **base,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "points": points,
    }


def _grid_dataset_doc(score: GridScore, cfg: ExperimentConfig) -> dict:
    per_template = []
    averages = []
    regression = []
    for lang in score.prompt_languages:
        lang_metrics = []
        diag_layers = []
        best_layers = []
        for (gid, mlang), matrix in score.matrices.items():
            if mlang != lang:
                continue
            tm = compute_template_metrics(matrix, cfg.wer_aggregation)
            lang_metrics.append(tm)
            diag_layers.append(matrix_layer(matrix))
            best_layers.append(matrix_layer(matrix, tm.row_argmin))
            per_template.append(
                {
                    "template_id": gid,
                    "prompt_language": lang,
                    "tfr": tm.tfr,
                    "perf": tm.perf,
                    "bperf": tm.bperf,
                    "row_argmin": list(tm.row_argmin),
                    "perf_ci": _ci(diagonal_records(matrix), cfg),
                    "bperf_ci": _ci(selected_records(matrix, tm.row_argmin), cfg),
                }
            )
        if not lang_metrics:
            continue
        avg = average_metrics(lang_metrics)
        try:
            rel = relative_improvement(avg.perf, avg.bperf)
        except ZeroPerf:
            rel = None
        averages.append(
            {
                "prompt_language": lang,
                "tfr": avg.tfr,
                "perf": avg.perf,
                "bperf": avg.bperf,
                "perf_ci": _ci(sum_counts_by_utterance(diag_layers), cfg),
                "bperf_ci": _ci(sum_counts_by_utterance(best_layers), cfg),
                "relative_improvement": rel,
            }
        )
        for target in ("perf", "bperf"):
            points = [
                {"template_id": t.template_id, "tfr": t.tfr, "value": getattr(t, target)}
                for t in lang_metrics
            ]
            regression.append(_regression_section(score.dataset, lang, target, points))

    no_prompt = None
    if score.baseline is not None and score.baseline:
        records = [u.counts for u in score.baseline]
        no_prompt = {"wer": _wer(records, cfg), "ci": _ci(records, cfg)}

    stats = []
    for avg in averages:
        for metric in ("perf", "bperf"):
            ci = avg[f"{metric}_ci"]
            stats.append(_stat_entry(f"avg_{metric}[{avg['prompt_language']}]", avg[metric], ci, cfg))
    if no_prompt is not None:
        stats.append(_stat_entry("no_prompt", no_prompt["wer"], no_prompt["ci"], cfg))

    return {
        "dataset": score.dataset,
        "data_language": score.data_language,
        "topics": list(score.topics),
        "per_template": per_template,
        "averages": averages,
        "no_prompt": no_prompt,
        "stats": stats,
        "regression": regression,
    }


def _write_grid_csvs(docs: list[dict], cfg: ExperimentConfig, out: Path) -> list[Path]:
    name = "table_topics.csv" if cfg.experiment == "topic_semantics" else "table_prompt_language.csv"
    table = out / name
    with table.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            [
                "dataset", "prompt_language", "avg_tfr", "avg_perf", "avg_bperf",
                "relative_improvement", "no_prompt",
                "avg_perf_ci_low", "avg_perf_ci_high",
                "avg_bperf_ci_low", "avg_bperf_ci_high",
                "no_prompt_ci_low", "no_prompt_ci_high",
            ]
        )
        for doc in docs:
            np_doc = doc["no_prompt"]
            for avg in doc["averages"]:
                perf_ci = avg["perf_ci"] or [None, None]
                bperf_ci = avg["bperf_ci"] or [None, None]
                np_ci = (np_doc or {}).get("ci") or [None, None]
                w.writerow(
                    [
                        doc["dataset"],
                        avg["prompt_language"],
                        _pct(avg["tfr"]),
                        _pct(avg["perf"]),
                        _pct(avg["bperf"]),
                        _pct(avg["relative_improvement"]),
                        _pct(np_doc["wer"]) if np_doc else "",
                        _pct(perf_ci[0]), _pct(perf_ci[1]),
                        _pct(bperf_ci[0]), _pct(bperf_ci[1]),
                        _pct(np_ci[0]), _pct(np_ci[1]),
                    ]
                )

    points_path = out / "regression_points.csv"
    with points_path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["dataset", "prompt_language", "template_id", "tfr", "perf", "bperf"])
        for doc in docs:
            rows: dict[tuple, dict] = {}
            for t in doc["per_template"]:
                rows[(t["template_id"], t["prompt_language"])] = t
            for (tid, lang), t in rows.items():
                w.writerow([doc["dataset"], lang, tid, t["tfr"], t["perf"], t["bperf"]])
    return [table, points_path]


def _write_token_csv(docs: list[dict], out: Path) -> Path:
    path = out / "table_language_tokens.csv"
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            [
                "dataset", "language_tokens", "validity", "mer",
                "mer_ci_low", "mer_ci_high", "word_count_language",
                "word_count", "example_prediction",
            ]
        )
        for doc in docs:
            for pair in doc["pairs"]:
                ci = pair["mer_ci"] or [None, None]
                w.writerow(
                    [
                        doc["dataset"],
                        pair["language_tokens"],
                        pair["validity"],
                        _pct(pair["mer"]),
                        _pct(ci[0]), _pct(ci[1]),
                        doc["word_count_language"] or "",
                        "" if pair["word_count"] is None else pair["word_count"],
                        pair["example"]["text"] if pair["example"] else "",
                    ]
                )
    return path


def emit_report(
    cfg: ExperimentConfig,
    grid_scores: list[GridScore] | None = None,
    token_scores: list[TokenPairScores] | None = None,
    baseline_scores: list[BaselineScore] | None = None,
    out_dir: str | Path | None = None,
) -> dict:
    """Write the report files for one experiment; returns the JSON doc.

    A run that produced no metrics at all writes an EMPTY_RUN marker file
    instead of raising.
    """
    out = _ensure_out_dir(out_dir if out_dir is not None else cfg.out_dir)
    written: list[Path] = []

    doc: dict = {
        "experiment": cfg.experiment,
        "wer_aggregation": cfg.wer_aggregation,
        "bootstrap": {
            "resamples": cfg.bootstrap.resamples,
            "confidence": cfg.bootstrap.confidence,
            "seed": cfg.bootstrap.seed,
        },
        "datasets": [],
    }

    if grid_scores:
        for score in grid_scores:
            doc["datasets"].append(_grid_dataset_doc(score, cfg))
        written.extend(_write_grid_csvs(doc["datasets"], cfg, out))
    elif token_scores:
        for ts in token_scores:
            pairs = []
            stats = []
            for p in ts.pairs:
                records = [u.counts for u in p.utterances]
                mer = _wer(records, cfg)
                ci = _ci(records, cfg)
                pairs.append(
                    {
                        "language_tokens": p.pair,
                        "validity": p.validity,
                        "mer": mer,
                        "mer_ci": ci,
                        "word_count": p.word_count,
                        "example": (
                            {"utterance_id": p.example_utterance_id, "text": p.example_text}
                            if p.example_utterance_id is not None
                            else None
                        ),
                    }
                )
                stats.append(_stat_entry(f"mer[{p.pair}]", mer, ci, cfg))
            doc["datasets"].append(
                {
                    "dataset": ts.dataset,
                    "word_count_language": ts.word_count_language,
                    "pairs": pairs,
                    "stats": stats,
                }
            )
        written.append(_write_token_csv(doc["datasets"], out))
    elif baseline_scores:
        for bs in baseline_scores:
            records = [u.counts for u in bs.utterances]
            wer = _wer(records, cfg)
            ci = _ci(records, cfg)
            doc["datasets"].append(
                {
                    "dataset": bs.dataset,
                    "wer": wer,
                    "ci": ci,
                    "stats": [_stat_entry("no_prompt", wer, ci, cfg)],
                }
            )

    if not doc["datasets"]:
        marker = out / EMPTY_RUN_MARKER
        marker.write_text("no metrics were produced by this run\n", encoding="utf-8")
        return doc

    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    written.append(report_path)
    return doc
