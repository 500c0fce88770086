"""Permutation sampling, ordering criteria, and top-m / example-set selection.

Every criterion maps an ordering to a score where lower is better, so one
argmin selection path serves them all:

  PDO_FEWSHOT    KL(null-input label distribution || uniform) — one backend
                 query per ordering.
  PDO_PRIOR      KL(mean per-example label distribution over the dev set ||
                 reference prior). A uniform reference covers the
                 no-known-prior case.
  LOCAL_E        sum over dev examples of KL(per-example distribution ||
                 uniform).
  GLOBAL_E       KL(normalized histogram of argmax predictions || uniform),
                 identically ln|Y| minus the histogram entropy.
  ORACLE_NEG_ACC negated Direct accuracy on a labeled dev set (upper bound).
  RANDOM         constant 0: no selection signal.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .backend import Backend, label_distribution
from .dist import LabelDist, LabelSpace, kl_divergence, mean_distribution, normalize, uniform
from .errors import (
    EmptyDevSetError,
    PoolTooSmallError,
    TooFewError,
    UnlabeledExampleError,
)
from .prompts import DemoSet, Example, Ordering, PromptTemplate, render_prompt
from .scoring import predict_direct


class Criterion(str, Enum):
    PDO_FEWSHOT = "pdo_fewshot"
    PDO_PRIOR = "pdo_prior"
    LOCAL_E = "local_e"
    GLOBAL_E = "global_e"
    ORACLE_NEG_ACC = "oracle_neg_acc"
    RANDOM = "random"


DEV_SET_CRITERIA = frozenset(
    {Criterion.PDO_PRIOR, Criterion.LOCAL_E, Criterion.GLOBAL_E, Criterion.ORACLE_NEG_ACC}
)


@dataclass(frozen=True)
class ScoredOrdering:
    ordering: Ordering
    score: float
    criterion: Criterion

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"criterion score must be finite, got {self.score}")


@dataclass(frozen=True)
class SelectionConfig:
    """Sampling/selection sizes for orderings (and §-style example sets)."""

    n_orderings: int = 24
    n_keep: int = 4
    n_sets: int = 120
    n_keep_sets: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.n_keep <= self.n_orderings:
            raise ValueError(f"need 1 <= n_keep <= n_orderings, got {self.n_keep}/{self.n_orderings}")
        if not 1 <= self.n_keep_sets <= self.n_sets:
            raise ValueError(f"need 1 <= n_keep_sets <= n_sets, got {self.n_keep_sets}/{self.n_sets}")


def sample_orderings(k: int, n_orderings: int, seed: int) -> list[Ordering]:
    """Distinct uniformly-sampled permutations of 0..k-1.

    Falls back to exhaustive enumeration whenever n_orderings >= k!, so
    small-k callers get every permutation exactly once.
    """
    if n_orderings < 1:
        raise ValueError(f"n_orderings must be >= 1, got {n_orderings}")
    total = math.factorial(k)
    if n_orderings >= total:
        return [Ordering(p) for p in itertools.permutations(range(k))]
    rng = random.Random(seed)
    seen: set[tuple[int, ...]] = set()
    out: list[Ordering] = []
    while len(out) < n_orderings:
        perm = tuple(rng.sample(range(k), k))
        if perm in seen:
            continue
        seen.add(perm)
        out.append(Ordering(perm))
    return out


def _dev_distributions(
    backend: Backend,
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
    dev_examples: Sequence[Example],
) -> list[LabelDist]:
    if len(dev_examples) == 0:
        raise EmptyDevSetError("criterion needs at least one dev example")
    return [
        label_distribution(
            backend, render_prompt(template, space, demos, ordering, ex.text), space
        )
        for ex in dev_examples
    ]


def criterion_fewshot(
    backend: Backend,
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
) -> float:
    """KL of the null-input distribution to uniform; one backend query."""
    prompt = render_prompt(template, space, demos, ordering, None)
    return kl_divergence(label_distribution(backend, prompt, space), uniform(space))


def criterion_prior(
    backend: Backend,
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
    dev_examples: Sequence[Example],
    prior: LabelDist,
) -> float:
    """KL of the observed (mean per-example) label distribution to the prior."""
    dists = _dev_distributions(backend, template, space, demos, ordering, dev_examples)
    return kl_divergence(mean_distribution(dists), prior)


def criterion_local_entropy(
    backend: Backend,
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
    dev_examples: Sequence[Example],
) -> float:
    """Sum over dev examples of each distribution's KL to uniform."""
    dists = _dev_distributions(backend, template, space, demos, ordering, dev_examples)
    unif = uniform(space)
    return sum(kl_divergence(d, unif) for d in dists)


def criterion_global_entropy(
    backend: Backend,
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
    dev_examples: Sequence[Example],
) -> float:
    """KL of the argmax-prediction histogram to uniform (= ln|Y| - H)."""
    dists = _dev_distributions(backend, template, space, demos, ordering, dev_examples)
    counts = [0.0] * space.size
    for d in dists:
        counts[d.argmax()] += 1.0  # the Direct prediction
    return kl_divergence(normalize(counts, space), uniform(space))


def criterion_oracle(
    backend: Backend,
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
    dev_examples: Sequence[Example],
) -> float:
    """Negated Direct accuracy on a labeled dev set."""
    for ex in dev_examples:
        if ex.label_id is None:
            raise UnlabeledExampleError(f"oracle needs labels; {ex.text!r} has none")
    dists = _dev_distributions(backend, template, space, demos, ordering, dev_examples)
    correct = sum(
        predict_direct(d).label_id == ex.label_id for d, ex in zip(dists, dev_examples)
    )
    return -correct / len(dev_examples)


@dataclass
class CriterionContext:
    """Everything a criterion needs beyond the ordering itself."""

    criterion: Criterion
    backend: Backend
    template: PromptTemplate
    space: LabelSpace
    demos: DemoSet
    dev_examples: Sequence[Example] = field(default_factory=tuple)
    prior: LabelDist | None = None

    def score(self, ordering: Ordering) -> float:
        c = self.criterion
        if c is Criterion.RANDOM:
            return 0.0
        if c is Criterion.PDO_FEWSHOT:
            return criterion_fewshot(
                self.backend, self.template, self.space, self.demos, ordering
            )
        if c is Criterion.PDO_PRIOR:
            prior = self.prior if self.prior is not None else uniform(self.space)
            return criterion_prior(
                self.backend, self.template, self.space, self.demos, ordering,
                self.dev_examples, prior,
            )
        if c is Criterion.LOCAL_E:
            return criterion_local_entropy(
                self.backend, self.template, self.space, self.demos, ordering,
                self.dev_examples,
            )
        if c is Criterion.GLOBAL_E:
            return criterion_global_entropy(
                self.backend, self.template, self.space, self.demos, ordering,
                self.dev_examples,
            )
        if c is Criterion.ORACLE_NEG_ACC:
            return criterion_oracle(
                self.backend, self.template, self.space, self.demos, ordering,
                self.dev_examples,
            )
        raise ValueError(f"unhandled criterion {c}")

    def score_all(self, orderings: Sequence[Ordering]) -> list[ScoredOrdering]:
        return [ScoredOrdering(o, self.score(o), self.criterion) for o in orderings]


def rank_and_select(scored: Sequence[ScoredOrdering], n_keep: int) -> list[ScoredOrdering]:
    """The n_keep lowest-score entries, ascending; ties keep sampling order."""
    if n_keep > len(scored):
        raise TooFewError(f"asked for {n_keep} of {len(scored)} scored orderings")
    return sorted(scored, key=lambda s: s.score)[:n_keep]  # sorted() is stable


@dataclass(frozen=True)
class ScoredDemoSet:
    """A candidate demo set with the sampled ordering it was scored under."""

    demos: DemoSet
    ordering: Ordering
    score: float
    criterion: Criterion


def select_example_sets(
    pool: Sequence[Example],
    k: int,
    n_sets: int,
    n_keep_sets: int,
    context_for: "CriterionContextFactory",
    seed: int,
) -> list[ScoredDemoSet]:
    """Sample n_sets k-example demo sets, score one random permutation each,
    and keep the n_keep_sets best by ascending criterion score (stable ties).
    """
    if len(pool) < k:
        raise PoolTooSmallError(f"pool of {len(pool)} cannot form {k}-example sets")
    if n_keep_sets > n_sets:
        raise TooFewError(f"asked for {n_keep_sets} of {n_sets} sets")
    rng = random.Random(seed)
    candidates: list[ScoredDemoSet] = []
    for _ in range(n_sets):
        members = rng.sample(range(len(pool)), k)
        demos = DemoSet(tuple(pool[i] for i in members))
        ordering = Ordering(tuple(rng.sample(range(k), k)))
        ctx = context_for(demos)
        candidates.append(
            ScoredDemoSet(demos, ordering, ctx.score(ordering), ctx.criterion)
        )
    return sorted(candidates, key=lambda c: c.score)[:n_keep_sets]


class CriterionContextFactory:
    """Builds a CriterionContext for each candidate demo set."""

    def __init__(
        self,
        criterion: Criterion,
        backend: Backend,
        template: PromptTemplate,
        space: LabelSpace,
        dev_examples: Sequence[Example] = (),
        prior: LabelDist | None = None,
    ):
        self.criterion = criterion
        self.backend = backend
        self.template = template
        self.space = space
        self.dev_examples = dev_examples
        self.prior = prior

    def __call__(self, demos: DemoSet) -> CriterionContext:
        return CriterionContext(
            criterion=self.criterion,
            backend=self.backend,
            template=self.template,
            space=self.space,
            demos=demos,
            dev_examples=self.dev_examples,
            prior=self.prior,
        )
