"""Deterministic mock language model for tests, demos, and synthetic studies.

The mock scores each label from two ingredients:

  evidence: alpha * (occurrences of the label's keywords in the query text,
            0 for a null query), and
  context bias: beta * sum over demo positions i=1..k of w**(k-i) for demos
            carrying that label, so the most recent demo weighs w**0 = 1.

The label distribution is the softmax of those scores. This makes the mock
exhibit the recency bias that ordering selection exploits, while staying a
pure function of its configuration and inputs.

The mock honors the prompt-level backend protocol by inverting the template
it was built with. Demo and query texts must not embed the template's
separator+prefix byte sequences; rendering is otherwise round-tripped
exactly, including the null query (empty query text).
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping, Sequence

import numpy as np

from .dist import LabelDist, LabelSpace, softmax
from .errors import BadConfigError, ProtocolError
from .prompts import DemoSet, Ordering, PromptTemplate, render_prompt


class MockLM:
    """Keyword-evidence model with exponentially decaying demo-label bias."""

    def __init__(
        self,
        space: LabelSpace,
        template: PromptTemplate,
        keywords: Mapping[str, Sequence[str]] | None = None,
        alpha: float = 1.0,
        beta: float = 1.0,
        recency: float = 0.5,
    ):
        if alpha <= 0:
            raise BadConfigError(f"evidence weight must be positive, got {alpha}")
        if beta < 0:
            raise BadConfigError(f"bias weight must be nonnegative, got {beta}")
        if not 0 < recency < 1:
            raise BadConfigError(f"recency decay must lie in (0, 1), got {recency}")
        self.space = space
        self.template = template
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.recency = float(recency)
        kw = dict(keywords or {})
        for label_id in kw:
            space.index_of(label_id)  # unknown label -> KeyError
        self._keywords: tuple[frozenset[str], ...] = tuple(
            frozenset(w.lower() for w in kw.get(label_id, ())) for label_id in space.ids
        )

    @property
    def identity(self) -> str:
        config = {
            "labels": self.space.labels,
            "keywords": [sorted(ks) for ks in self._keywords],
            "alpha": self.alpha,
            "beta": self.beta,
            "recency": self.recency,
        }
        digest = hashlib.sha256(
            json.dumps(config, sort_keys=True).encode("utf-8")
        ).hexdigest()[:16]
        return f"mock:{digest}"

    def _evidence(self, query_text: str | None) -> np.ndarray:
        counts = np.zeros(self.space.size)
        if query_text:
            tokens = query_text.lower().split()
            for i, kws in enumerate(self._keywords):
                counts[i] = sum(tok in kws for tok in tokens)
        return counts

    def _bias(self, label_indices: Sequence[int]) -> np.ndarray:
        bias = np.zeros(self.space.size)
        k = len(label_indices)
        for pos, label_idx in enumerate(label_indices, start=1):
            bias[label_idx] += self.recency ** (k - pos)
        return bias

    def _scores(self, label_indices: Sequence[int], query_text: str | None) -> np.ndarray:
        return self.alpha * self._evidence(query_text) + self.beta * self._bias(label_indices)

    def forward(
        self, demos: DemoSet, ordering: Ordering, query_text: str | None
    ) -> LabelDist:
        """Label distribution for demos arranged by ordering plus the query."""
        labels = [
            self.space.index_of(demos.demos[idx].label_id) for idx in ordering.perm
        ]
        return softmax(self._scores(labels, query_text), self.space)

    def render(self, demos: DemoSet, ordering: Ordering, query_text: str | None) -> str:
        return render_prompt(self.template, self.space, demos, ordering, query_text)

    def query(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        """Backend protocol: log-probs of candidate verbalizers for a prompt."""
        label_indices, query_text = self._parse_prompt(prompt)
        dist = softmax(self._scores(label_indices, query_text), self.space)
        log_probs = np.log(dist.probs)
        out = []
        for cand in candidates:
            try:
                out.append(float(log_probs[self.space.verbalizer_index(cand)]))
            except KeyError:
                raise ProtocolError(
                    f"candidate {cand!r} is not a verbalizer of this mock's space"
                ) from None
        return out

    def _parse_prompt(self, prompt: str) -> tuple[list[int], str | None]:
        """Invert render_prompt: demo label indices in order, plus query text."""
        t = self.template
        tail = f"{t.field_separator}{t.label_prefix}"
        if not prompt.endswith(tail):
            raise ProtocolError(f"prompt does not end at the label prefix: {prompt!r}")
        body = prompt[: -len(tail)]
        lead = f"{t.input_prefix} "
        if not body.startswith(lead):
            raise ProtocolError(f"prompt does not start with the input prefix: {prompt!r}")
        chunks = body.split(f"{t.demo_separator}{lead}")
        chunks[0] = chunks[0][len(lead):]
        marker = f"{t.field_separator}{t.label_prefix} "
        label_indices = []
        for chunk in chunks[:-1]:
            _, found, verb = chunk.rpartition(marker)
            if not found:
                raise ProtocolError(f"demo block without a label: {chunk!r}")
            try:
                label_indices.append(self.space.verbalizer_index(verb))
            except KeyError:
                raise ProtocolError(f"unknown demo verbalizer {verb!r}") from None
        query_text = chunks[-1]
        return label_indices, (query_text if query_text else None)


def mock_forward(
    mock: MockLM, demos: DemoSet, ordering: Ordering, query_text: str | None
) -> LabelDist:
    """Functional alias for MockLM.forward."""
    return mock.forward(demos, ordering, query_text)
