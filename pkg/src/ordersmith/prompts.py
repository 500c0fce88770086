"""Demo sets, orderings, and prompt rendering.

A rendered prompt is the k demos laid out in permutation order followed by
the query block, ending exactly at the label prefix so the model's next
token is the label verbalizer. A null query renders the query text as the
empty string, template otherwise intact.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dist import LabelSpace
from .errors import BadOrderingError


@dataclass(frozen=True)
class Example:
    """One task input; label_id is absent for unlabeled dev-set members."""

    text: str
    label_id: str | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("example text is empty")

    def unlabeled(self) -> "Example":
        return Example(self.text, None)


@dataclass(frozen=True)
class DemoSet:
    """The k labeled in-context examples in canonical storage order."""

    demos: tuple[Example, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "demos", tuple(self.demos))
        if len(self.demos) < 1:
            raise ValueError("a demo set needs at least one example")
        for d in self.demos:
            if d.label_id is None:
                raise ValueError(f"demo {d.text!r} is unlabeled")

    @property
    def k(self) -> int:
        return len(self.demos)


@dataclass(frozen=True)
class Ordering:
    """A permutation of demo indices 0..k-1."""

    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "perm", tuple(int(i) for i in self.perm))
        if sorted(self.perm) != list(range(len(self.perm))):
            raise BadOrderingError(f"{self.perm} is not a permutation of 0..{len(self.perm) - 1}")

    @property
    def k(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, k: int) -> "Ordering":
        return cls(tuple(range(k)))


@dataclass(frozen=True)
class PromptTemplate:
    """Minimal two-field prompt layout, e.g. "Review: ...\\nSentiment: ..."."""

    input_prefix: str
    label_prefix: str
    field_separator: str = "\n"
    demo_separator: str = "\n"

    def __post_init__(self) -> None:
        if not self.input_prefix or not self.label_prefix:
            raise ValueError("input_prefix and label_prefix must be nonempty")


def render_prompt(
    template: PromptTemplate,
    space: LabelSpace,
    demos: DemoSet,
    ordering: Ordering,
    query_text: str | None,
) -> str:
    """Concatenate demos in ordering sequence plus the trailing query block.

    query_text=None isolates the context's label bias: the query input is
    rendered as the empty string. The prompt ends at label_prefix with no
    trailing whitespace.
    """
    if ordering.k != demos.k:
        raise BadOrderingError(
            f"ordering over {ordering.k} indices does not fit {demos.k} demos"
        )
    t = template
    blocks = []
    for idx in ordering.perm:
        demo = demos.demos[idx]
        verb = space.labels[space.index_of(demo.label_id)][1]
        blocks.append(
            f"{t.input_prefix} {demo.text}{t.field_separator}{t.label_prefix} {verb}"
        )
    query = query_text if query_text is not None else ""
    blocks.append(f"{t.input_prefix} {query}{t.field_separator}{t.label_prefix}")
    return t.demo_separator.join(blocks)
