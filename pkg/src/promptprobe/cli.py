"""Command-line interface.

Stages are separate subcommands so the expensive part (backend inference)
can be rerun independently of metric iteration:

  promptprobe plan   --config cfg.json          -> out/plan.jsonl
  promptprobe run    --config cfg.json          -> out/results.jsonl
  promptprobe score  --config cfg.json          -> out/matrices/, out/score_index.json
  promptprobe report --config cfg.json          -> out/report.json, out/*.csv

`promptprobe mock-worker` serves the wire protocol on stdio for tests and
demos.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import time
from dataclasses import replace
from pathlib import Path

from .backend import backend_from_descriptor
from .cache import PredictionCache
from .config import ExperimentConfig, load_config
from .errors import PromptProbeError, RetryExhausted
from .manifest import load_manifest
from .metrics import EditCounts, matrix_from_dict, matrix_to_dict
from .planner import load_plan, plan_experiment, save_plan
from .report import emit_report
from .runner import execute, load_results, save_results
from .scoring import (
    BaselineScore,
    GridScore,
    PairScore,
    ScoredUtterance,
    TokenPairScores,
    score_baseline,
    score_grid,
    score_token_pairs,
)
from .textnorm import default_simplification_table, load_simplification_table

logger = logging.getLogger("promptprobe")


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if getattr(args, "experiment", None):
        cfg.experiment = args.experiment
    if getattr(args, "backend", None):
        cfg.backend = args.backend
    if getattr(args, "cache_dir", None):
        cfg.cache_dir = args.cache_dir
    if getattr(args, "out_dir", None):
        cfg.out_dir = args.out_dir
    if getattr(args, "seed", None) is not None:
        cfg.bootstrap = replace(cfg.bootstrap, seed=args.seed)
    if getattr(args, "max_inflight", None):
        cfg.max_inflight = args.max_inflight
    cfg.validate()
    return cfg


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _table(cfg: ExperimentConfig):
    if cfg.simplification_table is not None:
        return load_simplification_table(cfg.simplification_table)
    return default_simplification_table()


def cmd_plan(cfg: ExperimentConfig, args) -> int:
    t0 = time.monotonic()
    requests = plan_experiment(cfg)
    out = _out(cfg)
    save_plan(requests, out / "plan.jsonl")
    logger.info("planned %d requests in %.2fs -> %s", len(requests), time.monotonic() - t0, out / "plan.jsonl")
    return 0


def cmd_run(cfg: ExperimentConfig, args) -> int:
    t0 = time.monotonic()
    out = _out(cfg)
    plan_path = out / "plan.jsonl"
    if plan_path.is_file():
        requests = load_plan(plan_path)
    else:
        requests = plan_experiment(cfg)
        save_plan(requests, plan_path)

    results_path = out / "results.jsonl"
    if results_path.is_file() and not args.resume:
        logger.error("%s exists; pass --resume to redo the run (cached answers are reused)", results_path)
        return 2

    manifests = [load_manifest(p) for p in cfg.manifests]
    backend = backend_from_descriptor(cfg.backend, manifests, seed=cfg.bootstrap.seed)
    cache = PredictionCache(cfg.cache_dir)
    failure_log: list[dict] = []
    try:
        results = execute(
            requests,
            backend,
            cache,
            max_inflight=cfg.max_inflight,
            max_retries=cfg.max_retries,
            expected_model_id=cfg.model_id,
            failure_log=failure_log,
        )
    except RetryExhausted as e:
        _write_failures(out, failure_log)
        logger.error("run failed: %s (completed answers are cached; rerun with --resume)", e)
        return 1
    _write_failures(out, failure_log)
    save_results(results, results_path)
    logger.info("ran %d requests in %.2fs -> %s", len(results), time.monotonic() - t0, results_path)
    return 0


def _write_failures(out: Path, failure_log: list[dict]) -> None:
    with (out / "failures.jsonl").open("w", encoding="utf-8", newline="\n") as f:
        for entry in failure_log:
            f.write(json.dumps(entry, ensure_ascii=False) + "\n")


def _safe(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", s)


def cmd_score(cfg: ExperimentConfig, args) -> int:
    t0 = time.monotonic()
    out = _out(cfg)
    requests = load_plan(out / "plan.jsonl")
    results = load_results(out / "results.jsonl")
    table = _table(cfg)

    index: dict = {"experiment": cfg.experiment, "datasets": []}
    matrices_dir = out / "matrices"
    matrices_dir.mkdir(exist_ok=True)

    for mi, mpath in enumerate(cfg.manifests):
        manifest = load_manifest(mpath)
        entry: dict = {"dataset": manifest.name, "data_language": manifest.language}
        if cfg.experiment in ("topic_semantics", "prompt_language"):
            gs = score_grid(manifest, requests, results, table, cfg.fillers)
            entry["topics"] = list(gs.topics)
            entry["prompt_languages"] = gs.prompt_languages
            entry["matrices"] = []
            for k, ((gid, lang), matrix) in enumerate(gs.matrices.items()):
                path = matrices_dir / f"{_safe(manifest.name)}__{k:03d}__{_safe(gid)}.{lang}.json"
                doc = matrix_to_dict(matrix)
                doc["dataset"] = manifest.name
                doc["prompt_language"] = lang
                path.write_text(
                    json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8",
                )
                entry["matrices"].append(
                    {"template_id": gid, "prompt_language": lang, "path": str(path.relative_to(out))}
                )
            if gs.baseline is not None:
                bpath = out / f"baseline__{_safe(manifest.name)}.json"
                bpath.write_text(_scored_json(gs.baseline), encoding="utf-8")
                entry["baseline_path"] = str(bpath.relative_to(out))
        elif cfg.experiment == "language_tokens":
            ts = score_token_pairs(
                manifest, requests, results, table,
                word_count_language=cfg.word_count_language,
            )
            tpath = out / f"token_scores__{_safe(manifest.name)}.json"
            tpath.write_text(_token_json(ts), encoding="utf-8")
            entry["token_scores_path"] = str(tpath.relative_to(out))
        else:
            bs = score_baseline(manifest, requests, results, table, cfg.fillers)
            bpath = out / f"baseline__{_safe(manifest.name)}.json"
            bpath.write_text(_scored_json(bs.utterances), encoding="utf-8")
            entry["baseline_path"] = str(bpath.relative_to(out))
        index["datasets"].append(entry)

    (out / "score_index.json").write_text(
        json.dumps(index, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    logger.info("scored in %.2fs -> %s", time.monotonic() - t0, out / "score_index.json")
    return 0


def _scored_json(utterances: list[ScoredUtterance]) -> str:
    doc = [
        {
            "id": u.utterance_id,
            "hyp": list(u.hyp_tokens),
            "S": u.counts.substitutions,
            "D": u.counts.deletions,
            "I": u.counts.insertions,
            "ref_len": u.counts.ref_len,
        }
        for u in utterances
    ]
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def _scored_from_json(doc: list[dict]) -> list[ScoredUtterance]:
    return [
        ScoredUtterance(
            u["id"], tuple(u["hyp"]), EditCounts(u["S"], u["D"], u["I"], u["ref_len"])
        )
        for u in doc
    ]


def _token_json(ts: TokenPairScores) -> str:
    doc = {
        "dataset": ts.dataset,
        "word_count_language": ts.word_count_language,
        "pairs": [
            {
                "pair": p.pair,
                "validity": p.validity,
                "word_count": p.word_count,
                "example_utterance_id": p.example_utterance_id,
                "example_text": p.example_text,
                "utterances": json.loads(_scored_json(p.utterances)),
            }
            for p in ts.pairs
        ],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def _token_from_json(doc: dict) -> TokenPairScores:
    return TokenPairScores(
        dataset=doc["dataset"],
        word_count_language=doc["word_count_language"],
        pairs=[
            PairScore(
                pair=p["pair"],
                validity=p["validity"],
                utterances=_scored_from_json(p["utterances"]),
                word_count=p["word_count"],
                example_utterance_id=p["example_utterance_id"],
                example_text=p["example_text"],
            )
            for p in doc["pairs"]
        ],
    )


def cmd_report(cfg: ExperimentConfig, args) -> int:
    t0 = time.monotonic()
    out = _out(cfg)
    index = json.loads((out / "score_index.json").read_text(encoding="utf-8"))

    grid_scores: list[GridScore] = []
    token_scores: list[TokenPairScores] = []
    baseline_scores: list[BaselineScore] = []
    for entry in index["datasets"]:
        if "matrices" in entry:
            matrices = {}
            for m in entry["matrices"]:
                doc = json.loads((out / m["path"]).read_text(encoding="utf-8"))
                matrices[(m["template_id"], m["prompt_language"])] = matrix_from_dict(doc)
            baseline = None
            if "baseline_path" in entry:
                bdoc = json.loads((out / entry["baseline_path"]).read_text(encoding="utf-8"))
                baseline = _scored_from_json(bdoc)
            grid_scores.append(
                GridScore(
                    dataset=entry["dataset"],
                    data_language=entry["data_language"],
                    topics=tuple(entry["topics"]),
                    prompt_languages=entry["prompt_languages"],
                    matrices=matrices,
                    baseline=baseline,
                )
            )
        elif "token_scores_path" in entry:
            doc = json.loads((out / entry["token_scores_path"]).read_text(encoding="utf-8"))
            token_scores.append(_token_from_json(doc))
        elif "baseline_path" in entry:
            bdoc = json.loads((out / entry["baseline_path"]).read_text(encoding="utf-8"))
            baseline_scores.append(BaselineScore(entry["dataset"], _scored_from_json(bdoc)))

    emit_report(cfg, grid_scores or None, token_scores or None, baseline_scores or None, out)
    logger.info("report written in %.2fs -> %s", time.monotonic() - t0, out / "report.json")
    return 0


def cmd_mock_worker(args) -> int:
    from .worker import serve

    return serve(args.manifest, args.mode, args.model_id)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="promptprobe")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--experiment", choices=["topic_semantics", "prompt_language", "language_tokens", "no_prompt_baseline"])
        p.add_argument("--backend", help="mock:echo | mock:topic_sensitive:<p> | tcp://host:port | <command>")
        p.add_argument("--cache-dir")
        p.add_argument("--out-dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-inflight", type=int)

    for name, fn in (("plan", cmd_plan), ("run", cmd_run), ("score", cmd_score), ("report", cmd_report)):
        p = sub.add_parser(name)
        add_common(p)
        p.set_defaults(func=fn)
    sub.choices["run"].add_argument("--resume", action="store_true",
                                    help="redo an existing run, reusing cached answers")

    mw = sub.add_parser("mock-worker", help="serve the wire protocol on stdio")
    mw.add_argument("--manifest", action="append", default=[], help="manifest path (repeatable)")
    mw.add_argument("--mode", default="echo", help="echo | constant:TEXT | shuffle:K | flaky:N")
    mw.add_argument("--model-id", default="mock-worker")
    mw.set_defaults(func=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "mock-worker":
        return cmd_mock_worker(args)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return args.func(cfg, args)
    except PromptProbeError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
