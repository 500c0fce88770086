"""Synthetic binary sentiment task for the MockLM.

Generates texts whose only signal is keyword occurrences the mock can
count, with tunable label balance and evidence strength. Every text embeds
its sample index so texts are unique and prompt injectivity arguments hold.
Used by the demo CLI configs and by the correlation/monotonicity studies.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .dist import LabelSpace
from .mock import MockLM
from .prompts import Example, PromptTemplate

SYNTH_SPACE = LabelSpace.from_pairs([("negative", "negative"), ("positive", "positive")])
SYNTH_TEMPLATE = PromptTemplate(input_prefix="Review:", label_prefix="Sentiment:")
SYNTH_KEYWORDS = {"negative": ["awful"], "positive": ["lovely"]}

_FILLERS = ("the", "film", "plot", "was", "rather", "quite", "overall")


@dataclass(frozen=True)
class SynthTask:
    """A generated pool plus the mock wired to score it."""

    train: tuple[Example, ...]
    test: tuple[Example, ...]
    mock: MockLM


def synth_example(rng: random.Random, index: int, label_id: str) -> Example:
    """One synthetic example: filler, an index token, and keyword evidence.

    Own-label keyword count is 0/1/2 with probabilities .25/.5/.25; a
    cross-label keyword appears with probability .2, so the evidence margin
    spans -1..2 and the mock's context bias can flip weak cases.
    """
    own = SYNTH_KEYWORDS[label_id][0]
    other = SYNTH_KEYWORDS["positive" if label_id == "negative" else "negative"][0]
    n_own = rng.choices((0, 1, 2), weights=(0.25, 0.5, 0.25))[0]
    n_other = 1 if rng.random() < 0.2 else 0
    words = [rng.choice(_FILLERS) for _ in range(3)]
    words += [own] * n_own + [other] * n_other
    rng.shuffle(words)
    return Example(text=f"s{index} " + " ".join(words), label_id=label_id)


def make_synth_task(
    seed: int,
    n_train: int = 64,
    n_test: int = 200,
    pos_rate: float = 0.5,
    alpha: float = 1.0,
    beta: float = 1.0,
    recency: float = 0.5,
) -> SynthTask:
    """Deterministic pool + test split + mock for one seed."""
    rng = random.Random(seed)
    examples = []
    for i in range(n_train + n_test):
        label = "positive" if rng.random() < pos_rate else "negative"
        examples.append(synth_example(rng, i, label))
    mock = MockLM(
        SYNTH_SPACE,
        SYNTH_TEMPLATE,
        keywords=SYNTH_KEYWORDS,
        alpha=alpha,
        beta=beta,
        recency=recency,
    )
    return SynthTask(
        train=tuple(examples[:n_train]),
        test=tuple(examples[n_train:]),
        mock=mock,
    )


def imbalanced_demo_set(pos: int, neg: int) -> list[Example]:
    """Labeled demos with a fixed pos/neg split (texts carry their evidence)."""
    demos = []
    for i in range(pos):
        demos.append(Example(text=f"d{i} such a lovely piece", label_id="positive"))
    for i in range(neg):
        demos.append(Example(text=f"d{pos + i} an awful mess", label_id="negative"))
    return demos
