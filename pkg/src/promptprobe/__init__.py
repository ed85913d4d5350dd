"""promptprobe: measure whether a promptable ASR model actually uses its
prompts, by comparing matched against systematically corrupted prompts."""

from .backend import (
    MockBackend,
    SubprocessBackend,
    TcpBackend,
    TranscriptionRequest,
    TranscriptionResult,
)
from .cache import PredictionCache, prediction_key
from .config import ExperimentConfig, load_config
from .manifest import Manifest, Utterance, load_manifest, partition_by_topic, save_manifest
from .metrics import (
    CellResult,
    EditCounts,
    TemplateMetrics,
    WerMatrix,
    average_metrics,
    bperf,
    compute_template_metrics,
    edit_distance,
    micro_wer,
    perf,
    relative_improvement,
    tfr,
)
from .planner import plan_experiment
from .prompts import (
    DecoderPromptSpec,
    LanguageTokenPair,
    PromptTemplate,
    RenderedPrompt,
    TemplatePack,
    assemble_decoder_prompt,
    build_language_token_pairs,
    default_template_pack,
    generate_prompt_grid,
    load_template_pack,
    render,
)
from .report import emit_report
from .runner import execute
from .stats import BootstrapConfig, RegressionFit, bootstrap_ci, linear_regression
from .textnorm import (
    SimplificationTable,
    TokenSequence,
    count_words_in_language,
    default_simplification_table,
    load_simplification_table,
    normalize_english,
    normalize_mixed,
)

__version__ = "0.1.0"
