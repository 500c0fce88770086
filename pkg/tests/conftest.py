"""Shared fixtures: label spaces, templates, and table-driven stub backends."""

from __future__ import annotations

import math

import pytest

from ordersmith import LabelSpace, PromptTemplate


@pytest.fixture
def binary_space() -> LabelSpace:
    return LabelSpace.from_pairs([("neg", "negative"), ("pos", "positive")])


@pytest.fixture
def sst2_space() -> LabelSpace:
    # verbalizer-as-id, matching the published template's label tokens
    return LabelSpace.from_pairs([("positive", "positive"), ("negative", "negative")])


@pytest.fixture
def review_template() -> PromptTemplate:
    return PromptTemplate(input_prefix="Review:", label_prefix="Sentiment:")


class TableBackend:
    """Deterministic stub: maps the prompt's query text to a fixed distribution.

    Keys off the rendered query block at the end of the prompt, so it slots
    under criteria without knowing anything about demos.
    """

    def __init__(self, space, template, table=None, null_probs=None, default=None):
        self.space = space
        self.template = template
        self.table = dict(table or {})
        self.null_probs = null_probs
        self.default = default

    @property
    def identity(self) -> str:
        return "table-stub"

    def _log_probs(self, probs, candidates):
        by_verb = dict(zip(self.space.verbalizers, probs))
        return [math.log(max(by_verb[c], 1e-300)) for c in candidates]

    def query(self, prompt, candidates):
        t = self.template
        if prompt.endswith(f"{t.input_prefix} {t.field_separator}{t.label_prefix}"):
            probs = self.null_probs or self.default
            if probs is None:
                raise AssertionError("stub got a null query but has no null_probs")
            return self._log_probs(probs, candidates)
        for text, probs in self.table.items():
            if prompt.endswith(f"{t.input_prefix} {text}{t.field_separator}{t.label_prefix}"):
                return self._log_probs(probs, candidates)
        if self.default is not None:
            return self._log_probs(self.default, candidates)
        raise AssertionError(f"stub has no entry for prompt {prompt!r}")
