"""Direct and PMI scoring of backend label distributions.

Direct predicts the argmax of the model's label distribution. PMI rescales
each label by how much the query raised its probability over the null
input, log(P(y|context,x) / P(y|context,null)), which cancels label bias
carried in from the context. PMI scores are renormalized to a calibration
distribution with a natural-exp softmax; the log base (two by default)
changes that distribution's sharpness but never the chosen label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dist import LabelDist, Q_FLOOR
from .errors import SpaceMismatchError

LogBase = Literal["natural", "two"]


@dataclass(frozen=True)
class Prediction:
    """A chosen label with its confidence and post-scoring distribution."""

    label_id: str
    confidence: float
    dist: LabelDist


def _prediction_from(dist: LabelDist) -> Prediction:
    idx = dist.argmax()  # ties resolve to the lowest label index
    return Prediction(dist.space.ids[idx], dist.max(), dist)


def predict_direct(dist_x: LabelDist) -> Prediction:
    """Argmax of the raw label distribution, passed through unchanged."""
    return _prediction_from(dist_x)


def predict_pmi(
    dist_x: LabelDist, dist_null: LabelDist, log_base: LogBase = "two"
) -> Prediction:
    """Score labels by log(dist_x / dist_null) and softmax back to probabilities.

    dist_null entries are clamped at Q_FLOOR; a zero dist_x entry becomes
    calibration probability exactly 0 (the -inf score limit).
    """
    if dist_x.space != dist_null.space:
        raise SpaceMismatchError(
            f"spaces differ: {dist_x.space.ids} vs {dist_null.space.ids}"
        )
    denom = np.maximum(dist_null.probs, Q_FLOOR)
    with np.errstate(divide="ignore"):
        scores = np.log(dist_x.probs) - np.log(denom)
    if log_base == "two":
        scores = scores / math.log(2)
    elif log_base != "natural":
        raise ValueError(f"log_base must be 'natural' or 'two', got {log_base!r}")
    # stable softmax that maps -inf scores to probability 0
    finite_max = scores[np.isfinite(scores)].max()
    exps = np.exp(scores - finite_max)
    calibrated = LabelDist(exps / exps.sum(), dist_x.space)
    return _prediction_from(calibrated)
