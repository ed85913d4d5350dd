"""Experiment configuration: file schema, defaults, validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigInvalid
from .stats import BootstrapConfig

EXPERIMENT_KINDS = (
    "topic_semantics",
    "prompt_language",
    "language_tokens",
    "no_prompt_baseline",
)


@dataclass(frozen=True)
class LanguageTokenSettings:
    present: tuple[str, str]
    kept: str
    absent: tuple[str, ...]


@dataclass
class ExperimentConfig:
    experiment: str
    manifests: list[str]
    template_pack: str | None = None
    templates: list[str] | None = None
    prompt_languages: list[str] | None = None
    with_baseline: bool = False
    token_settings: LanguageTokenSettings | None = None
    backend: str = "mock:echo"
    model_id: str | None = None
    cache_dir: str | None = None
    out_dir: str = "out"
    decoding: dict = field(default_factory=lambda: {"strategy": "greedy"})
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    max_inflight: int = 8
    max_retries: int = 2
    word_count_language: str = "zh"
    wer_aggregation: str = "micro"
    fillers: list[str] | None = None
    simplification_table: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENT_KINDS:
            raise ConfigInvalid("experiment", f"must be one of {EXPERIMENT_KINDS}")
        if not self.manifests:
            raise ConfigInvalid("manifests", "at least one manifest path is required")
        if self.experiment in ("topic_semantics", "prompt_language") and self.template_pack is None:
            # default pack is substituted at plan time; record the intent here
            pass
        if self.experiment == "language_tokens" and self.token_settings is None:
            raise ConfigInvalid("language_tokens", "token settings (present/kept/absent) required")
        if self.wer_aggregation not in ("micro", "macro"):
            raise ConfigInvalid("wer_aggregation", "must be 'micro' or 'macro'")
        if self.max_inflight < 1:
            raise ConfigInvalid("max_inflight", "must be >= 1")
        if self.max_retries < 0:
            raise ConfigInvalid("max_retries", "must be >= 0")


def _token_settings(obj: dict) -> LanguageTokenSettings:
    try:
        present = tuple(obj["present"])
        kept = obj["kept"]
        absent = tuple(obj.get("absent", ()))
    except KeyError as e:
        raise ConfigInvalid("language_tokens", f"missing {e.args[0]!r}") from None
    if len(present) != 2:
        raise ConfigInvalid("language_tokens.present", "exactly two corpus languages required")
    return LanguageTokenSettings(present=present, kept=kept, absent=absent)


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Build a config from a parsed JSON document.

    Relative paths are resolved against ``base_dir`` (the config file's
    directory) so configs are location-independent.
    """

    def respath(p: str | None) -> str | None:
        if p is None or base_dir is None:
            return p
        return str((base_dir / p).resolve()) if not Path(p).is_absolute() else p

    known = {
        "experiment", "manifests", "template_pack", "templates", "prompt_languages",
        "with_baseline", "language_tokens", "backend", "model_id", "cache_dir",
        "out_dir", "decoding", "bootstrap", "max_inflight", "max_retries",
        "word_count_language", "wer_aggregation", "fillers", "simplification_table",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigInvalid(sorted(unknown)[0], "unknown config field")

    if "experiment" not in doc:
        raise ConfigInvalid("experiment", "required")
    if "manifests" not in doc or not isinstance(doc["manifests"], list):
        raise ConfigInvalid("manifests", "required list of paths")

    boot = doc.get("bootstrap", {})
    try:
        bootstrap = BootstrapConfig(
            resamples=int(boot.get("resamples", 1000)),
            confidence=float(boot.get("confidence", 0.95)),
            seed=int(boot.get("seed", 0)),
        )
    except ValueError as e:
        raise ConfigInvalid("bootstrap", str(e)) from None

    token_settings = None
    if "language_tokens" in doc:
        token_settings = _token_settings(doc["language_tokens"])

    return ExperimentConfig(
        experiment=doc["experiment"],
        manifests=[respath(p) for p in doc["manifests"]],
        template_pack=respath(doc.get("template_pack")),
        templates=doc.get("templates"),
        prompt_languages=doc.get("prompt_languages"),
        with_baseline=bool(doc.get("with_baseline", False)),
        token_settings=token_settings,
        backend=doc.get("backend", "mock:echo"),
        model_id=doc.get("model_id"),
        cache_dir=respath(doc.get("cache_dir")),
        out_dir=respath(doc.get("out_dir", "out")),
        decoding=doc.get("decoding", {"strategy": "greedy"}),
        bootstrap=bootstrap,
        max_inflight=int(doc.get("max_inflight", 8)),
        max_retries=int(doc.get("max_retries", 2)),
        word_count_language=doc.get("word_count_language", "zh"),
        wer_aggregation=doc.get("wer_aggregation", "micro"),
        fillers=doc.get("fillers"),
        simplification_table=respath(doc.get("simplification_table")),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid("config", f"no such file: {path}")
    with path.open(encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigInvalid("config", f"invalid JSON: {e}") from None
    return config_from_dict(doc, base_dir=path.parent)
