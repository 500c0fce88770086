"""Experiment orchestration: seeds, selection, evaluation, artifacts.

For every seed the runner draws the in-context examples, draws a dev sample
disjoint from them (skipped entirely in the demos-only setting), samples
candidate orderings, scores them under the configured criterion, keeps the
best, and evaluates each kept ordering on the held-out test split. Rows are
flushed to runs.jsonl after every (seed, ordering) cell and all raw backend
answers persist in an append-only cache, so a rerun after a crash replays
from the cache without issuing any duplicate backend call. All artifacts
are byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from .backend import (
    ENV_KEY,
    ENV_URL,
    Backend,
    HttpBackend,
    LogProbCache,
    label_distribution,
    with_cache,
    with_counter,
)
from .data import estimate_prior, label_histogram, load_dataset
from .dist import LabelDist, LabelSpace, uniform
from .errors import ConfigError
from .evaluation import EvalReport, RunResult, accuracy, aggregate, ece
from .mock import MockLM
from .optimize import (
    Criterion,
    CriterionContext,
    ScoredOrdering,
    rank_and_select,
    sample_orderings,
)
from .prompts import DemoSet, Example, PromptTemplate, render_prompt
from .scoring import predict_direct, predict_pmi


class Setting(str, Enum):
    FEWSHOT = "fewshot"
    FEWSHOT_U = "fewshot_u"
    FEWSHOT_UP = "fewshot_up"


CRITERION_CHOICES = ("pdo", "random", "local_e", "global_e", "oracle")


def resolve_criterion(criterion: str, setting: Setting) -> Criterion:
    """Map a criterion flag plus information setting to a concrete criterion."""
    if criterion == "random":
        return Criterion.RANDOM
    if criterion == "pdo":
        if setting is Setting.FEWSHOT:
            return Criterion.PDO_FEWSHOT
        return Criterion.PDO_PRIOR
    needs_dev = {
        "local_e": Criterion.LOCAL_E,
        "global_e": Criterion.GLOBAL_E,
        "oracle": Criterion.ORACLE_NEG_ACC,
    }
    if criterion not in needs_dev:
        raise ConfigError(f"unknown criterion {criterion!r}; choose from {CRITERION_CHOICES}")
    if setting is Setting.FEWSHOT:
        raise ConfigError(
            f"criterion {criterion!r} needs a dev set; the demos-only setting forbids it"
        )
    return needs_dev[criterion]


@dataclass
class BackendSpec:
    """Backend selection: a deterministic mock or an HTTP log-prob server."""

    kind: str = "mock"  # "mock" | "http"
    url: str | None = None
    model: str | None = None
    api_key: str | None = None
    keywords: dict[str, list[str]] = field(default_factory=dict)
    alpha: float = 1.0
    beta: float = 1.0
    recency: float = 0.5

    def build(self, space: LabelSpace, template: PromptTemplate) -> Backend:
        if self.kind == "mock":
            return MockLM(
                space,
                template,
                keywords=self.keywords,
                alpha=self.alpha,
                beta=self.beta,
                recency=self.recency,
            )
        if self.kind == "http":
            url = os.environ.get(ENV_URL) or self.url
            key = os.environ.get(ENV_KEY) or self.api_key
            if not url:
                raise ConfigError(f"http backend needs a url (config or {ENV_URL})")
            return HttpBackend(url=url, model=self.model, api_key=key)
        raise ConfigError(f"unknown backend kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    """Everything one evaluation needs; serializable to/from a JSON file."""

    train_path: str
    test_path: str
    labels: list[tuple[str, str]]
    input_prefix: str = "Input:"
    label_prefix: str = "Label:"
    field_separator: str = "\n"
    demo_separator: str = "\n"
    backend: BackendSpec = field(default_factory=BackendSpec)
    setting: Setting = Setting.FEWSHOT
    scoring: str = "direct"  # "direct" | "pmi"
    criterion: str = "pdo"
    shots: int = 8
    n_orderings: int = 24
    n_keep: int = 4
    n_seeds: int = 5
    dev_size: int = 256
    test_size: int | None = None
    prior: list[float] | str | None = None  # explicit vector or "dev"
    log_base: str = "two"
    seed: int = 0

    def __post_init__(self) -> None:
        self.setting = Setting(self.setting)
        self.labels = [(str(i), str(v)) for i, v in self.labels]
        if self.scoring not in ("direct", "pmi"):
            raise ConfigError(f"scoring must be direct or pmi, got {self.scoring!r}")
        resolve_criterion(self.criterion, self.setting)  # validates the pairing
        if self.setting is Setting.FEWSHOT_UP and self.prior is None:
            raise ConfigError(
                "the known-prior setting needs a prior: an explicit vector or \"dev\""
            )
        if isinstance(self.prior, str) and self.prior != "dev":
            raise ConfigError(f"prior must be a vector or \"dev\", got {self.prior!r}")
        if isinstance(self.prior, list) and len(self.prior) != len(self.labels):
            raise ConfigError(
                f"prior has {len(self.prior)} entries for {len(self.labels)} labels"
            )
        for name in ("shots", "n_orderings", "n_keep", "n_seeds", "dev_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_keep > self.n_orderings:
            raise ConfigError(f"n_keep {self.n_keep} exceeds n_orderings {self.n_orderings}")

    @property
    def space(self) -> LabelSpace:
        return LabelSpace.from_pairs(self.labels)

    @property
    def template(self) -> PromptTemplate:
        return PromptTemplate(
            input_prefix=self.input_prefix,
            label_prefix=self.label_prefix,
            field_separator=self.field_separator,
            demo_separator=self.demo_separator,
        )

    @property
    def resolved_criterion(self) -> Criterion:
        return resolve_criterion(self.criterion, self.setting)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["setting"] = self.setting.value
        d["labels"] = [list(pair) for pair in self.labels]
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        data = dict(raw)
        if "backend" in data and isinstance(data["backend"], dict):
            b = dict(data["backend"])
            b.setdefault("kind", b.pop("type", "mock"))
            data["backend"] = BackendSpec(**b)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _draw_split(
    rng: random.Random, pool: Sequence[Example], shots: int, dev_size: int, want_dev: bool
) -> tuple[DemoSet, list[Example]]:
    """Demos plus a dev sample disjoint from them (empty when not wanted)."""
    if len(pool) < shots:
        raise ConfigError(f"train pool of {len(pool)} cannot provide {shots} demos")
    demo_idx = rng.sample(range(len(pool)), shots)
    demos = DemoSet(tuple(pool[i] for i in demo_idx))
    dev: list[Example] = []
    if want_dev:
        taken = set(demo_idx)
        rest = [i for i in range(len(pool)) if i not in taken]
        if not rest:
            raise ConfigError("train pool has no examples left for the dev sample")
        dev_idx = rng.sample(rest, min(dev_size, len(rest)))
        dev = [pool[i] for i in dev_idx]
    return demos, dev


def _evaluate_ordering(
    backend: Backend,
    config: ExperimentConfig,
    demos: DemoSet,
    scored: ScoredOrdering,
    test_examples: Sequence[Example],
    sub_seed: int,
) -> RunResult:
    space, template = config.space, config.template
    null_dist = None
    if config.scoring == "pmi":
        null_prompt = render_prompt(template, space, demos, scored.ordering, None)
        null_dist = label_distribution(backend, null_prompt, space)
    predictions = []
    for ex in test_examples:
        prompt = render_prompt(template, space, demos, scored.ordering, ex.text)
        dist_x = label_distribution(backend, prompt, space)
        if null_dist is not None:
            pred = predict_pmi(dist_x, null_dist, config.log_base)
        else:
            pred = predict_direct(dist_x)
        predictions.append((pred, ex.label_id))
    return RunResult(
        predictions=tuple(predictions),
        ordering=scored.ordering,
        seed=sub_seed,
        criterion=scored.criterion,
        scoring=config.scoring,
        criterion_score=scored.score,
    )


def _run_row(seed_index: int, sub_seed: int, run: RunResult, n_test: int) -> dict:
    return {
        "seed_index": seed_index,
        "sub_seed": sub_seed,
        "permutation": list(run.ordering.perm),
        "criterion": run.criterion.value,
        "criterion_score": run.criterion_score,
        "scoring": run.scoring,
        "accuracy": accuracy(run),
        "ece": ece(run),
        "n_test": n_test,
    }


@dataclass
class ExperimentResult:
    report: EvalReport
    backend_calls: int
    artifacts_dir: Path | None


def run_experiment(
    config: ExperimentConfig, artifacts_dir: str | Path | None = None
) -> ExperimentResult:
    """Execute the full selection-and-evaluation protocol for one config."""
    space, template = config.space, config.template
    train = load_dataset(config.train_path, space)
    test = load_dataset(config.test_path, space)
    if config.test_size is not None:
        test = test[: config.test_size]
    if not test:
        raise ConfigError(f"test split {config.test_path} is empty")

    out_dir = Path(artifacts_dir) if artifacts_dir is not None else None
    cache_path = None
    runs_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        cache_path = out_dir / "cache.tsv"
        runs_path = out_dir / "runs.jsonl"
        runs_path.write_text("", encoding="utf-8")  # fresh log; cache persists

    raw = config.backend.build(space, template)
    counter = with_counter(raw)
    backend = with_cache(counter, LogProbCache(cache_path))

    criterion = config.resolved_criterion
    want_dev = criterion in (
        Criterion.PDO_PRIOR,
        Criterion.LOCAL_E,
        Criterion.GLOBAL_E,
        Criterion.ORACLE_NEG_ACC,
    )

    master = random.Random(config.seed)
    sub_seeds = [master.randrange(2**32) for _ in range(config.n_seeds)]

    all_runs: list[RunResult] = []
    selections = []
    for seed_index, sub_seed in enumerate(sub_seeds):
        rng = random.Random(sub_seed)
        demos, dev = _draw_split(rng, train, config.shots, config.dev_size, want_dev)

        prior: LabelDist | None = None
        if config.setting is Setting.FEWSHOT_UP and criterion is Criterion.PDO_PRIOR:
            if config.prior == "dev":
                prior = estimate_prior(dev, space)
            else:
                prior = LabelDist(list(config.prior), space)
        elif criterion is Criterion.PDO_PRIOR:
            prior = uniform(space)

        # criteria see labels only when they are the oracle
        dev_view = dev if criterion is Criterion.ORACLE_NEG_ACC else [
            ex.unlabeled() for ex in dev
        ]
        ctx = CriterionContext(
            criterion=criterion,
            backend=backend,
            template=template,
            space=space,
            demos=demos,
            dev_examples=dev_view,
            prior=prior,
        )
        orderings = sample_orderings(config.shots, config.n_orderings, rng.randrange(2**32))
        scored = ctx.score_all(orderings)
        if criterion is Criterion.RANDOM:
            kept = list(scored)  # no selection: evaluate every sampled ordering
        else:
            kept = rank_and_select(scored, config.n_keep)
        selections.append(
            {
                "seed_index": seed_index,
                "sub_seed": sub_seed,
                "candidates": [
                    {"permutation": list(s.ordering.perm), "score": s.score}
                    for s in scored
                ],
                "kept": [list(s.ordering.perm) for s in kept],
            }
        )

        for s in kept:
            run = _evaluate_ordering(backend, config, demos, s, test, sub_seed)
            all_runs.append(run)
            if runs_path is not None:
                row = _run_row(seed_index, sub_seed, run, len(test))
                with runs_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(row, sort_keys=True) + "\n")
                    fh.flush()

    report = aggregate(all_runs)
    if out_dir is not None:
        manifest = {
            "config": config.to_dict(),
            "config_hash": config.config_hash(),
            "backend_calls": counter.calls,
            "train_label_histogram": label_histogram(train, space),
            "selections": selections,
            "accuracy_mean": report.accuracy_mean,
            "accuracy_std": report.accuracy_std,
            "ece_mean": report.ece_mean,
            "n_runs": report.n_runs,
        }
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return ExperimentResult(report=report, backend_calls=counter.calls, artifacts_dir=out_dir)
