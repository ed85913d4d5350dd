from __future__ import annotations

import random

import pytest

from promptprobe.manifest import Manifest, Utterance
from promptprobe.metrics import CellResult, EditCounts, UtterancePrediction, WerMatrix

VOCAB = [f"w{k}" for k in range(60)]


def synth_manifest(
    name: str = "synth",
    topics: tuple[str, ...] = (
        "arts",
        "science and technology",
        "nonprofits and activism",
        "sports",
    ),
    per_topic: int = 10,
    language: str = "en",
    seed: int = 7,
) -> Manifest:
    rng = random.Random(seed)
    utts = []
    i = 0
    for topic in topics:
        for _ in range(per_topic):
            n = rng.randint(4, 9)
            ref = " ".join(rng.choice(VOCAB) for _ in range(n))
            utts.append(
                Utterance(
                    id=f"u{i:04d}",
                    audio_path=f"/audio/{name}/u{i:04d}.wav",
                    reference=ref,
                    topic=topic,
                    language=language,
                )
            )
            i += 1
    return Manifest(name, tuple(topics), language, tuple(utts))


# A 4x4 fixture shaped like the illustration matrix: exactly one row (the
# first) has its minimum on the diagonal. Entries are per-utterance
# substitution counts out of 5 reference tokens, two utterances per subset.
FIG_TOPICS = ("arts", "science", "nonprofits", "sports")
FIG_ERRORS = [
    [0, 1, 2, 1],
    [3, 2, 1, 4],
    [2, 2, 1, 0],
    [1, 2, 2, 3],
]
# hand-derived: perf = 2*(0+2+1+3)/40, bperf = 2*(0+1+0+1)/40, tfr = 1/4
FIG_PERF = 0.30
FIG_BPERF = 0.10
FIG_TFR = 0.25
FIG_ROW_ARGMIN = (0, 2, 3, 0)


def fig_matrix(template_id: str = "tpl") -> WerMatrix:
    rows = []
    for i, subset in enumerate(FIG_TOPICS):
        row = []
        for j, prompt_topic in enumerate(FIG_TOPICS):
            preds = tuple(
                UtterancePrediction(
                    utterance_id=f"{subset}-{k}",
                    hyp_tokens=("tok",) * 5,
                    counts=EditCounts(FIG_ERRORS[i][j], 0, 0, 5),
                )
                for k in range(2)
            )
            row.append(CellResult(subset, prompt_topic, preds))
        rows.append(tuple(row))
    return WerMatrix(template_id, FIG_TOPICS, tuple(rows))


def random_matrix(rng: random.Random, n_topics: int | None = None) -> WerMatrix:
    """Arbitrary complete matrix with coherent per-row utterance sets."""
    n = n_topics or rng.randint(1, 5)
    topics = tuple(f"t{i}" for i in range(n))
    per_subset = [rng.randint(1, 4) for _ in range(n)]
    ref_lens = [[rng.randint(1, 8) for _ in range(per_subset[i])] for i in range(n)]
    rows = []
    for i, subset in enumerate(topics):
        row = []
        for prompt_topic in topics:
            preds = []
            for k in range(per_subset[i]):
                rl = ref_lens[i][k]
                subs = rng.randint(0, rl)
                dels = rng.randint(0, rl - subs)
                ins = rng.randint(0, 3)
                preds.append(
                    UtterancePrediction(f"{subset}-{k}", ("x",), EditCounts(subs, dels, ins, rl))
                )
            row.append(CellResult(subset, prompt_topic, tuple(preds)))
        rows.append(tuple(row))
    return WerMatrix("rnd", topics, tuple(rows))


@pytest.fixture
def manifest_file(tmp_path):
    from promptprobe.manifest import save_manifest

    m = synth_manifest()
    path = tmp_path / "manifest.jsonl"
    save_manifest(m, path)
    return path


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" in rep.nodeid and getattr(rep, "when", "call") == "call":
                rows.append((rep.nodeid.split("::")[-1], status == "passed"))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, ok in rows:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
