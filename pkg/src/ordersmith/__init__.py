"""Ordering and example-set selection for few-shot LLM classification.

The pipeline: render prompts from demo orderings, read the model's label
distribution from verbalizer log-probs, score candidate orderings by KL
criteria over those distributions, keep the best, and evaluate with
accuracy and Expected Calibration Error.
"""

from .backend import (
    Backend,
    CachedBackend,
    CountingBackend,
    HttpBackend,
    LogProbCache,
    label_distribution,
    with_cache,
    with_counter,
)
from .data import estimate_prior, label_histogram, load_dataset
from .dist import (
    LabelDist,
    LabelSpace,
    entropy,
    kl_divergence,
    mean_distribution,
    normalize,
    softmax,
    uniform,
)
from .evaluation import (
    EvalReport,
    ReportRow,
    RunResult,
    accuracy,
    aggregate,
    ece,
    format_cell,
    render_csv,
    render_markdown,
)
from .experiment import (
    BackendSpec,
    ExperimentConfig,
    ExperimentResult,
    Setting,
    resolve_criterion,
    run_experiment,
)
from .mock import MockLM, mock_forward
from .optimize import (
    Criterion,
    CriterionContext,
    CriterionContextFactory,
    ScoredDemoSet,
    ScoredOrdering,
    SelectionConfig,
    criterion_fewshot,
    criterion_global_entropy,
    criterion_local_entropy,
    criterion_oracle,
    criterion_prior,
    rank_and_select,
    sample_orderings,
    select_example_sets,
)
from .prompts import DemoSet, Example, Ordering, PromptTemplate, render_prompt
from .scoring import Prediction, predict_direct, predict_pmi

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendSpec",
    "CachedBackend",
    "CountingBackend",
    "Criterion",
    "CriterionContext",
    "CriterionContextFactory",
    "DemoSet",
    "EvalReport",
    "Example",
    "ExperimentConfig",
    "ExperimentResult",
    "HttpBackend",
    "LabelDist",
    "LabelSpace",
    "LogProbCache",
    "MockLM",
    "Ordering",
    "Prediction",
    "PromptTemplate",
    "ReportRow",
    "RunResult",
    "ScoredDemoSet",
    "ScoredOrdering",
    "SelectionConfig",
    "Setting",
    "accuracy",
    "aggregate",
    "criterion_fewshot",
    "criterion_global_entropy",
    "criterion_local_entropy",
    "criterion_oracle",
    "criterion_prior",
    "ece",
    "entropy",
    "estimate_prior",
    "format_cell",
    "kl_divergence",
    "label_distribution",
    "label_histogram",
    "load_dataset",
    "mean_distribution",
    "mock_forward",
    "normalize",
    "predict_direct",
    "predict_pmi",
    "rank_and_select",
    "render_csv",
    "render_markdown",
    "render_prompt",
    "resolve_criterion",
    "run_experiment",
    "sample_orderings",
    "select_example_sets",
    "softmax",
    "uniform",
    "with_cache",
    "with_counter",
]
