from __future__ import annotations

import csv
import json

import pytest

from promptprobe.backend import MockBackend
from promptprobe.config import ExperimentConfig, LanguageTokenSettings, config_from_dict, load_config
from promptprobe.errors import ConfigInvalid, IncompleteMatrix
from promptprobe.manifest import save_manifest
from promptprobe.metrics import compute_template_metrics
from promptprobe.planner import load_plan, plan_experiment, save_plan
from promptprobe.prompts import default_template_pack
from promptprobe.report import emit_report
from promptprobe.runner import execute
from promptprobe.scoring import score_baseline, score_grid, score_token_pairs
from promptprobe.stats import BootstrapConfig

from conftest import synth_manifest

TOPICS4 = ("arts", "science and technology", "nonprofits and activism", "sports")


@pytest.fixture
def env(tmp_path):
    """Manifest on disk plus a config pointing at it."""
    m = synth_manifest(per_topic=2)
    mp = tmp_path / "manifest.jsonl"
    save_manifest(m, mp)

    def make_cfg(**overrides):
        base = dict(
            experiment="topic_semantics",
            manifests=[str(mp)],
            out_dir=str(tmp_path / "out"),
            bootstrap=BootstrapConfig(resamples=100, seed=13),
        )
        base.update(overrides)
        return ExperimentConfig(**base)

    return m, mp, make_cfg


class TestConfig:
    def test_kind_required_fields(self, env):
        _, mp, make_cfg = env
        with pytest.raises(ConfigInvalid):
            make_cfg(experiment="language_tokens")  # no token settings

    def test_unknown_kind(self, env):
        _, _, make_cfg = env
        with pytest.raises(ConfigInvalid):
            make_cfg(experiment="nonsense")

    def test_file_round_trip(self, tmp_path, env):
        _, mp, _ = env
        doc = {
            "experiment": "topic_semantics",
            "manifests": [mp.name],
            "backend": "mock:echo",
            "out_dir": "out",
            "bootstrap": {"resamples": 50, "seed": 3},
        }
        p = mp.parent / "cfg.json"
        p.write_text(json.dumps(doc), encoding="utf-8")
        cfg = load_config(p)
        assert cfg.manifests == [str(mp)]
        assert cfg.bootstrap.resamples == 50

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigInvalid):
            config_from_dict({"experiment": "topic_semantics", "manifests": ["x"], "bogus": 1})


class TestPlanning:
    def test_topic_semantics_cardinality(self, env):
        m, _, make_cfg = env
        plan = plan_experiment(make_cfg())
        assert len(plan) == len(m.utterances) * 10 * len(m.topics)

    def test_language_tokens_cardinality(self, tmp_path):
        m = synth_manifest(name="cs", topics=("a", "b"), per_topic=25, language="mixed")
        mp = tmp_path / "cs.jsonl"
        save_manifest(m, mp)
        cfg = ExperimentConfig(
            experiment="language_tokens",
            manifests=[str(mp)],
            token_settings=LanguageTokenSettings(
                present=("zh", "en"), kept="zh", absent=("es", "fr", "it")
            ),
            out_dir=str(tmp_path / "out"),
        )
        plan = plan_experiment(cfg)
        assert len(plan) == 50 * 4
        assert all(r.prompt.textual_prompt is None for r in plan)
        assert {tuple(r.prompt.language_tokens) for r in plan} == {
            ("zh", "en"), ("zh", "es"), ("zh", "fr"), ("zh", "it"),
        }

    def test_baseline_cardinality(self, env):
        m, _, make_cfg = env
        plan = plan_experiment(make_cfg(experiment="no_prompt_baseline"))
        assert len(plan) == len(m.utterances)
        assert all(r.prompt.textual_prompt is None for r in plan)

    def test_with_baseline_appends(self, env):
        m, _, make_cfg = env
        plan = plan_experiment(make_cfg(with_baseline=True))
        assert len(plan) == len(m.utterances) * 10 * len(m.topics) + len(m.utterances)
        assert plan[-1].meta["kind"] == "baseline"

    def test_prompt_language_doubles(self, env):
        m, _, make_cfg = env
        plan = plan_experiment(make_cfg(experiment="prompt_language"))
        assert len(plan) == len(m.utterances) * 10 * len(m.topics) * 2
        assert {r.meta["prompt_language"] for r in plan} == {"en", "zh"}

    def test_replanning_is_deterministic(self, env):
        _, _, make_cfg = env
        a = plan_experiment(make_cfg())
        b = plan_experiment(make_cfg())
        assert a == b

    def test_plan_round_trip(self, env, tmp_path):
        _, _, make_cfg = env
        plan = plan_experiment(make_cfg(with_baseline=True))
        p = tmp_path / "plan.jsonl"
        save_plan(plan, p)
        assert load_plan(p) == plan

    def test_language_tokens_require_settings_for_mixed(self, tmp_path):
        m = synth_manifest(name="cs", topics=("a",), per_topic=2, language="mixed")
        mp = tmp_path / "cs.jsonl"
        save_manifest(m, mp)
        cfg = ExperimentConfig(
            experiment="no_prompt_baseline", manifests=[str(mp)], out_dir=str(tmp_path / "o")
        )
        with pytest.raises(ConfigInvalid):
            plan_experiment(cfg)


class TestScoring:
    def _run(self, cfg, m, policy="echo", p=0.5):
        plan = plan_experiment(cfg)
        backend = MockBackend([m], policy=policy, p_corrupt=p, seed=7)
        results = execute(plan, backend)
        return plan, results

    def test_echo_gives_zero_error_matrices(self, env):
        m, _, make_cfg = env
        cfg = make_cfg()
        plan, results = self._run(cfg, m)
        gs = score_grid(m, plan, results)
        assert set(gs.matrices) == {(gid, "en") for gid in default_template_pack().group_ids()}
        for matrix in gs.matrices.values():
            tm = compute_template_metrics(matrix)
            assert tm.perf == 0.0 and tm.bperf == 0.0 and tm.tfr == 1.0

    def test_topic_sensitive_follows_topics(self, env):
        m, _, make_cfg = env
        cfg = make_cfg(with_baseline=True)
        plan, results = self._run(cfg, m, policy="topic_sensitive")
        gs = score_grid(m, plan, results)
        for matrix in gs.matrices.values():
            tm = compute_template_metrics(matrix)
            assert tm.tfr == 1.0
            assert tm.perf == 0.0
            assert tm.bperf == 0.0
        assert gs.baseline is not None and len(gs.baseline) == len(m.utterances)
        assert all(u.counts.total == 0 for u in gs.baseline)

    def test_missing_result_detected(self, env):
        m, _, make_cfg = env
        plan, results = self._run(make_cfg(), m)
        with pytest.raises(IncompleteMatrix):
            score_grid(m, plan, results[:-1])

    def test_token_pair_scoring(self, tmp_path):
        m = synth_manifest(name="cs", topics=("a", "b"), per_topic=3, language="mixed")
        mp = tmp_path / "cs.jsonl"
        save_manifest(m, mp)
        cfg = ExperimentConfig(
            experiment="language_tokens",
            manifests=[str(mp)],
            token_settings=LanguageTokenSettings(("zh", "en"), "zh", ("es", "fr")),
            out_dir=str(tmp_path / "o"),
        )
        plan = plan_experiment(cfg)
        results = execute(plan, MockBackend([m]))
        ts = score_token_pairs(m, plan, results)
        assert [p.pair for p in ts.pairs] == ["zh+en", "zh+es", "zh+fr"]
        assert all(p.mer() == 0.0 for p in ts.pairs)
        # synthetic refs are Latin words, so zero Chinese words are generated
        assert all(p.word_count == 0 for p in ts.pairs)
        assert all(p.example_text for p in ts.pairs)

    def test_baseline_scoring(self, env):
        m, _, make_cfg = env
        cfg = make_cfg(experiment="no_prompt_baseline")
        plan, results = self._run(cfg, m)
        bs = score_baseline(m, plan, results)
        assert len(bs.utterances) == len(m.utterances)


class TestReport:
    def _scored(self, env, **cfg_kw):
        m, _, make_cfg = env
        cfg = make_cfg(**cfg_kw)
        plan = plan_experiment(cfg)
        results = execute(plan, MockBackend([m], policy="topic_sensitive", seed=7))
        return cfg, score_grid(m, plan, results)

    def test_report_doc_shape(self, env, tmp_path):
        cfg, gs = self._scored(env, with_baseline=True)
        doc = emit_report(cfg, grid_scores=[gs], out_dir=tmp_path / "r")
        (ds,) = doc["datasets"]
        assert ds["dataset"] == "synth"
        assert len(ds["per_template"]) == 10
        (avg,) = ds["averages"]
        assert avg["tfr"] == 1.0 and avg["perf"] == 0.0 and avg["bperf"] == 0.0
        assert avg["relative_improvement"] is None  # zero perf
        assert ds["no_prompt"]["wer"] == 0.0
        # all TFRs equal -> regression degenerates, recorded not raised
        assert all("error" in r for r in ds["regression"])

    def test_table_columns(self, env, tmp_path):
        cfg, gs = self._scored(env, with_baseline=True)
        out = tmp_path / "r"
        emit_report(cfg, grid_scores=[gs], out_dir=out)
        with (out / "table_topics.csv").open() as f:
            header = next(csv.reader(f))
        assert header[:7] == [
            "dataset", "prompt_language", "avg_tfr", "avg_perf", "avg_bperf",
            "relative_improvement", "no_prompt",
        ]
        assert (out / "regression_points.csv").is_file()
        assert (out / "report.json").is_file()

    def test_empty_run_marker(self, env, tmp_path):
        m, _, make_cfg = env
        out = tmp_path / "r"
        doc = emit_report(make_cfg(), out_dir=out)
        assert doc["datasets"] == []
        assert (out / "EMPTY_RUN").is_file()
        assert not (out / "report.json").exists()

    def test_byte_identical_reports(self, env, tmp_path):
        cfg1, gs1 = self._scored(env, with_baseline=True)
        cfg2, gs2 = self._scored(env, with_baseline=True)
        emit_report(cfg1, grid_scores=[gs1], out_dir=tmp_path / "a")
        emit_report(cfg2, grid_scores=[gs2], out_dir=tmp_path / "b")
        for name in ("report.json", "table_topics.csv", "regression_points.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_regression_fits_when_tfrs_vary(self, env, tmp_path):
        # fixed-table backend: template identity.en follows topics, the
        # rest do not, so TFR varies across templates and the fit exists
        m, _, make_cfg = env
        cfg = make_cfg(templates=["identity.en", "topic-utterance.en", "task-video.en"])
        plan = plan_experiment(cfg)

        from promptprobe.backend import prompt_table_key

        table = {}
        for r in plan:
            u = next(x for x in m.utterances if x.id == r.utterance_id)
            follow = r.meta["template_id"] == "identity.en"
            matched = r.meta.get("prompt_topic") == u.topic
            if follow:
                text = u.reference if matched else u.reference + " zz"
            else:
                text = u.reference if not matched else u.reference + " zz"
            table[(r.utterance_id, prompt_table_key(r.prompt))] = text
        be = MockBackend([m], policy="fixed_table", table=table)
        results = execute(plan, be)
        gs = score_grid(m, plan, results)
        doc = emit_report(cfg, grid_scores=[gs], out_dir=tmp_path / "r")
        (ds,) = doc["datasets"]
        fits = [r for r in ds["regression"] if "slope" in r]
        assert len(fits) == 2  # perf and bperf targets
        for fit in fits:
            assert 0.0 <= fit["r_squared"] <= 1.0


class TestCli:
    def write_cfg(self, tmp_path, mp, **extra):
        doc = {
            "experiment": "topic_semantics",
            "manifests": [mp.name],
            "with_baseline": True,
            "backend": "mock:topic_sensitive:0.5",
            "cache_dir": "cache",
            "out_dir": "out",
            "bootstrap": {"resamples": 100, "confidence": 0.95, "seed": 13},
        }
        doc.update(extra)
        p = tmp_path / "config.json"
        p.write_text(json.dumps(doc), encoding="utf-8")
        return p

    def test_full_pipeline(self, tmp_path):
        from promptprobe.cli import main

        m = synth_manifest(per_topic=2)
        mp = tmp_path / "manifest.jsonl"
        save_manifest(m, mp)
        cfgp = self.write_cfg(tmp_path, mp)

        assert main(["plan", "--config", str(cfgp)]) == 0
        assert main(["run", "--config", str(cfgp)]) == 0
        assert main(["score", "--config", str(cfgp)]) == 0
        assert main(["report", "--config", str(cfgp)]) == 0

        out = tmp_path / "out"
        assert (out / "plan.jsonl").is_file()
        assert (out / "results.jsonl").is_file()
        assert (out / "failures.jsonl").read_text() == ""
        assert (out / "score_index.json").is_file()
        report = json.loads((out / "report.json").read_text())
        (ds,) = report["datasets"]
        (avg,) = ds["averages"]
        assert avg["tfr"] == 1.0 and avg["perf"] == 0.0

        # a second run without --resume refuses to clobber results
        assert main(["run", "--config", str(cfgp)]) == 2
        assert main(["run", "--config", str(cfgp), "--resume"]) == 0

    def test_pipeline_through_wire_protocol(self, tmp_path):
        from promptprobe.cli import main
        import sys

        m = synth_manifest(per_topic=1)
        mp = tmp_path / "manifest.jsonl"
        save_manifest(m, mp)
        worker = f"{sys.executable} -m promptprobe.cli mock-worker --manifest {mp}"
        cfgp = self.write_cfg(tmp_path, mp, backend=worker, with_baseline=False)

        for cmd in ("plan", "run", "score", "report"):
            assert main([cmd, "--config", str(cfgp)]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        (ds,) = report["datasets"]
        (avg,) = ds["averages"]
        # echo over the wire: perfect transcripts everywhere
        assert avg["perf"] == 0.0 and avg["tfr"] == 1.0
