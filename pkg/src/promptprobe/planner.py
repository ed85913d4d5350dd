"""Expansion of an experiment config into an ordered request list.

Planning is pure and deterministic: the same config always yields the
same requests with the same ids, which is what makes cached reruns and
crash resume line up exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .backend import TranscriptionRequest
from .config import ExperimentConfig
from .errors import ConfigInvalid
from .manifest import Manifest, load_manifest
from .prompts import (
    DecoderPromptSpec,
    TemplatePack,
    assemble_decoder_prompt,
    build_language_token_pairs,
    default_template_pack,
    generate_prompt_grid,
    load_template_pack,
)


def load_inputs(cfg: ExperimentConfig) -> tuple[list[Manifest], TemplatePack]:
    manifests = [load_manifest(p) for p in cfg.manifests]
    if cfg.template_pack is not None:
        pack = load_template_pack(cfg.template_pack)
    else:
        pack = default_template_pack()
    return manifests, pack


def _data_tokens(cfg: ExperimentConfig, manifest: Manifest) -> list[str]:
    """Language token(s) describing the corpus itself."""
    if manifest.language in ("en", "zh"):
        return [manifest.language]
    if cfg.token_settings is None:
        raise ConfigInvalid(
            "language_tokens",
            f"manifest {manifest.name!r} is code-switched; token settings needed",
        )
    kept = cfg.token_settings.kept
    (other,) = set(cfg.token_settings.present) - {kept}
    return [kept, other]


def _prompt_languages(cfg: ExperimentConfig, manifest: Manifest) -> list[str]:
    if cfg.prompt_languages:
        return list(cfg.prompt_languages)
    if cfg.experiment == "prompt_language":
        return ["en", "zh"]
    if manifest.language in ("en", "zh"):
        return [manifest.language]
    raise ConfigInvalid("prompt_languages", f"required for code-switched manifest {manifest.name!r}")


def plan_experiment(cfg: ExperimentConfig) -> list[TranscriptionRequest]:
    """Expand the config into transcription requests.

    Cardinalities per kind: topic_semantics and prompt_language yield
    |utterances| x |templates| x |topics| (x |languages| for the latter),
    language_tokens yields |utterances| x |token pairs| with no textual
    prompt, no_prompt_baseline yields |utterances|. A topic_semantics or
    prompt_language plan additionally appends the no-prompt requests when
    cfg.with_baseline is set.
    """
    manifests, pack = load_inputs(cfg)
    requests: list[TranscriptionRequest] = []
    seq = 0

    def add(manifest: Manifest, utt, prompt: DecoderPromptSpec, meta: dict) -> None:
        nonlocal seq
        requests.append(
            TranscriptionRequest(
                id=f"r{seq:06d}",
                utterance_id=utt.id,
                audio_path=utt.audio_path,
                prompt=prompt,
                decoding=dict(cfg.decoding),
                meta={"dataset": manifest.name, "subset_topic": utt.topic, **meta},
            )
        )
        seq += 1

    for manifest in manifests:
        kind = cfg.experiment
        if kind in ("topic_semantics", "prompt_language"):
            languages = _prompt_languages(cfg, manifest)
            tokens = _data_tokens(cfg, manifest)
            groups = cfg.templates or pack.group_ids()
            grid = generate_prompt_grid(pack, list(manifest.topics), languages, groups)
            for prompt in grid:
                spec = assemble_decoder_prompt(prompt.text, tokens)
                for utt in manifest.utterances:
                    add(
                        manifest,
                        utt,
                        spec,
                        {
                            "kind": "grid",
                            "template_id": prompt.template_id,
                            "prompt_topic": prompt.topic,
                            "prompt_language": prompt.language,
                        },
                    )
            if cfg.with_baseline:
                spec = assemble_decoder_prompt(None, tokens)
                for utt in manifest.utterances:
                    add(manifest, utt, spec, {"kind": "baseline"})
        elif kind == "language_tokens":
            ts = cfg.token_settings
            pairs = build_language_token_pairs(set(ts.present), list(ts.absent), ts.kept)
            for pair in pairs:
                spec = assemble_decoder_prompt(None, pair.codes())
                for utt in manifest.utterances:
                    add(
                        manifest,
                        utt,
                        spec,
                        {"kind": "token_pair", "pair": pair.label(), "pair_validity": pair.validity},
                    )
        elif kind == "no_prompt_baseline":
            spec = assemble_decoder_prompt(None, _data_tokens(cfg, manifest))
            for utt in manifest.utterances:
                add(manifest, utt, spec, {"kind": "baseline"})
        else:  # unreachable; config validation covers this
            raise ConfigInvalid("experiment", f"unknown kind {kind!r}")

    return requests


def save_plan(requests: list[TranscriptionRequest], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for req in requests:
            rec = {
                "id": req.id,
                "utterance_id": req.utterance_id,
                "audio_path": req.audio_path,
                "textual_prompt": req.prompt.textual_prompt,
                "language_tokens": list(req.prompt.language_tokens),
                "decoding": req.decoding,
                "meta": req.meta,
            }
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_plan(path: str | Path) -> list[TranscriptionRequest]:
    requests = []
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            requests.append(
                TranscriptionRequest(
                    id=rec["id"],
                    utterance_id=rec["utterance_id"],
                    audio_path=rec["audio_path"],
                    prompt=DecoderPromptSpec(
                        textual_prompt=rec["textual_prompt"],
                        language_tokens=tuple(rec["language_tokens"]),
                    ),
                    decoding=rec["decoding"],
                    meta=rec["meta"],
                )
            )
    return requests
