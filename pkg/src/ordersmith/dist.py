"""Probability vectors over a label space: normalization, softmax, entropy, KL.

Every divergence and entropy here is in nats. Zero numerator terms contribute
exactly 0 to KL; denominators are clamped at Q_FLOOR so a prior with a zero
class yields a finite, ranking-stable score instead of infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllZeroError,
    EmptyInputError,
    NegativeWeightError,
    NonFiniteError,
    SpaceMismatchError,
)

# KL denominator clamp: keeps zero-probability prior classes finite.
Q_FLOOR = 1e-12

# LabelDist entries must sum to 1 within this.
SUM_TOL = 1e-9


@dataclass(frozen=True)
class LabelSpace:
    """Ordered set of class labels, each paired with its verbalizer token.

    The order is fixed for the lifetime of a run; every LabelDist indexes
    into it positionally. Two spaces with equal (label_id, verbalizer)
    sequences are the same space.
    """

    labels: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if len(self.labels) < 2:
            raise ValueError(f"label space needs at least 2 labels, got {len(self.labels)}")
        ids = [lid for lid, _ in self.labels]
        verbs = [v for _, v in self.labels]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate label ids: {ids}")
        if len(set(verbs)) != len(verbs):
            raise ValueError(f"duplicate verbalizers: {verbs}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[str]]) -> "LabelSpace":
        return cls(tuple((str(i), str(v)) for i, v in pairs))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(lid for lid, _ in self.labels)

    @property
    def verbalizers(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.labels)

    def index_of(self, label_id: str) -> int:
        for i, (lid, _) in enumerate(self.labels):
            if lid == label_id:
                return i
        raise KeyError(f"label {label_id!r} not in space {self.ids}")

    def verbalizer_index(self, verbalizer: str) -> int:
        for i, (_, v) in enumerate(self.labels):
            if v == verbalizer:
                return i
        raise KeyError(f"verbalizer {verbalizer!r} not in space {self.verbalizers}")


@dataclass(frozen=True, eq=False)
class LabelDist:
    """Normalized probability vector aligned positionally with a LabelSpace."""

    probs: np.ndarray
    space: LabelSpace
    _validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)
        if self._validate:
            if arr.shape != (self.space.size,):
                raise ValueError(
                    f"expected {self.space.size} probabilities, got shape {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise NonFiniteError(f"non-finite probability in {arr}")
            if np.any(arr < 0):
                raise NegativeWeightError(f"negative probability in {arr}")
            total = float(arr.sum())
            if abs(total - 1.0) > SUM_TOL:
                raise ValueError(f"probabilities sum to {total!r}, not 1")

    def __len__(self) -> int:
        return self.space.size

    def argmax(self) -> int:
        """Index of the largest entry; ties resolve to the lowest index."""
        return int(np.argmax(self.probs))

    def max(self) -> float:
        return float(self.probs.max())

    def tolist(self) -> list[float]:
        return [float(p) for p in self.probs]


def uniform(space: LabelSpace) -> LabelDist:
    """Uniform distribution over the space."""
    return LabelDist(np.full(space.size, 1.0 / space.size), space)


def normalize(weights: Sequence[float] | np.ndarray, space: LabelSpace) -> LabelDist:
    """Scale nonnegative weights to sum to 1.

    Raises AllZeroError if every weight is 0 and NegativeWeightError if any
    weight is below 0.
    """
    arr = np.asarray(weights, dtype=np.float64)
    if arr.shape != (space.size,):
        raise ValueError(f"expected {space.size} weights, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite weight in {arr}")
    if np.any(arr < 0):
        raise NegativeWeightError(f"negative weight in {arr}")
    total = arr.sum()
    if total == 0.0:
        raise AllZeroError("all weights are zero")
    return LabelDist(arr / total, space)


def softmax(scores: Sequence[float] | np.ndarray, space: LabelSpace) -> LabelDist:
    """Natural-base softmax of finite scores, shifted for stability.

    Invariant to adding a constant to every score; preserves the argmax.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if arr.shape != (space.size,):
        raise ValueError(f"expected {space.size} scores, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite score in {arr}")
    exps = np.exp(arr - arr.max())
    return LabelDist(exps / exps.sum(), space)


def _check_same_space(p: LabelDist, q: LabelDist) -> None:
    if p.space != q.space:
        raise SpaceMismatchError(f"spaces differ: {p.space.ids} vs {q.space.ids}")


def kl_divergence(p: LabelDist, q: LabelDist) -> float:
    """KL(p || q) in nats over a shared label space.

    Terms with p_i = 0 contribute exactly 0; q entries are clamped at Q_FLOOR
    before division. Nonnegative up to clamping of rounding residue.
    """
    _check_same_space(p, q)
    mask = p.probs > 0
    if not mask.any():
        return 0.0
    pm = p.probs[mask]
    qm = np.maximum(q.probs[mask], Q_FLOOR)
    val = float(np.sum(pm * np.log(pm / qm)))
    return max(0.0, val)


def entropy(p: LabelDist) -> float:
    """Shannon entropy in nats; 0 <= H(p) <= ln|Y|."""
    mask = p.probs > 0
    pm = p.probs[mask]
    return max(0.0, float(-np.sum(pm * np.log(pm))))


def mean_distribution(dists: Sequence[LabelDist]) -> LabelDist:
    """Entrywise arithmetic mean of distributions over one space."""
    if len(dists) == 0:
        raise EmptyInputError("mean of zero distributions")
    first = dists[0]
    for d in dists[1:]:
        _check_same_space(first, d)
    stacked = np.stack([d.probs for d in dists])
    return LabelDist(stacked.mean(axis=0), first.space)
