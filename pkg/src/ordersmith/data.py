"""JSONL dataset ingestion and empirical prior estimation.

Dataset files are UTF-8 JSONL, one object per line:

    {"text": "the input", "label": "optional_label_id"}

Labels, when present, must exist in the configured label space.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from .dist import LabelDist, LabelSpace
from .errors import DatasetParseError, UnknownLabelError
from .prompts import Example


def load_dataset(path: str | Path, space: LabelSpace) -> list[Example]:
    """Order-preserving load of a JSONL dataset, validated against the space."""
    path = Path(path)
    examples: list[Example] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(record, dict) or "text" not in record:
                raise DatasetParseError(f"{path}:{lineno}: record has no \"text\" field")
            text = record["text"]
            if not isinstance(text, str) or not text.strip():
                raise DatasetParseError(f"{path}:{lineno}: \"text\" is not a nonempty string")
            label = record.get("label")
            if label is not None:
                if label not in space.ids:
                    raise UnknownLabelError(
                        f"{path}:{lineno}: label {label!r} not in space {space.ids}"
                    )
            examples.append(Example(text=text, label_id=label))
    return examples


def label_histogram(examples: Sequence[Example], space: LabelSpace) -> dict[str, int]:
    """Count of each label id among the labeled examples, in space order."""
    counts = Counter(ex.label_id for ex in examples if ex.label_id is not None)
    return {label_id: counts.get(label_id, 0) for label_id in space.ids}


def estimate_prior(examples: Sequence[Example], space: LabelSpace) -> LabelDist:
    """Unsmoothed empirical label frequencies.

    Classes absent from the sample get probability 0; downstream KL clamps
    zero denominators, so such priors stay usable.
    """
    if len(examples) == 0:
        raise ValueError("cannot estimate a prior from zero examples")
    for ex in examples:
        if ex.label_id is None:
            raise UnknownLabelError(f"unlabeled example {ex.text!r} in prior estimation")
    hist = label_histogram(examples, space)
    counts = np.array([hist[label_id] for label_id in space.ids], dtype=np.float64)
    return LabelDist(counts / counts.sum(), space)
