"""Prompt template constructors.

All four template families are pure text builders: class naming, entity
generation, the blanked-out null prompt that supplies the calibration prior,
and the two re-ranking templates.  The generation prompt always ends with the
entity delimiter so decoding starts outside any entity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "PromptConfig",
    "DEFAULT_DEMONSTRATIONS",
    "class_name_prompt",
    "generation_prompt",
    "meaningless_prompt",
    "ranking_templates",
]

# Stock in-context demonstrations for real backends; override per dataset so
# no demonstration class collides with an evaluated class.
DEFAULT_DEMONSTRATIONS: tuple[tuple[tuple[str, ...], str], ...] = (
    (("IPad", "Iphone", "MacBook Pro"), "Apple products"),
    (("Juliet", "Mars", "Moon"), "Natural satellites"),
)


@dataclass(frozen=True)
class PromptConfig:
    demonstrations: tuple[tuple[tuple[str, ...], str], ...] = DEFAULT_DEMONSTRATIONS
    blank_text: str = " "
    delimiter_text: str = ", "
    demo_separator: str = ". "
    allow_classless_fallback: bool = False

    def check_no_class_leakage(self, dataset_class_names: Sequence[str]) -> None:
        """Fail if a demonstration class name matches an evaluated class."""
        eval_names = {c.casefold() for c in dataset_class_names if c}
        for _, demo_class in self.demonstrations:
            if demo_class.casefold() in eval_names:
                raise ValueError(
                    f"demonstration class {demo_class!r} appears in the evaluation "
                    "dataset; replace the demonstrations for this run"
                )


def _join_with_and(surfaces: Sequence[str]) -> str:
    if len(surfaces) == 1:
        return surfaces[0]
    return ", ".join(surfaces[:-1]) + " and " + surfaces[-1]


def class_name_prompt(seeds: Sequence[str], cfg: PromptConfig) -> str:
    """In-context prompt whose natural continuation is the seeds' class name.

    Shape: "<e1>, <e2> and <e3> are <demo class>. ... <s1>, <s2> and <sn> are"
    with no trailing space.
    """
    if len(seeds) < 2:
        raise ValueError(f"need at least 2 seeds for class naming, got {len(seeds)}")
    parts = [
        f"{_join_with_and(ents)} are {name}" for ents, name in cfg.demonstrations
    ]
    parts.append(f"{_join_with_and(seeds)} are")
    return cfg.demo_separator.join(parts)


def generation_prompt(
    seeds: Sequence[str],
    class_name: str,
    cfg: PromptConfig = PromptConfig(),
) -> str:
    """List-style prompt "They are <c>: <s1>, <s2>, ..., <sn>,".

    Ends with the (stripped) delimiter so the next token begins a new entity.
    An empty class name is allowed only when the config permits the
    class-agnostic fallback "They are: ...".
    """
    if not seeds:
        raise ValueError("need at least 1 seed")
    class_name = class_name.strip()
    if not class_name and not cfg.allow_classless_fallback:
        raise ValueError("class name is empty and classless fallback is disabled")
    head = f"They are {class_name}:" if class_name else "They are:"
    delim = cfg.delimiter_text
    return f"{head} " + delim.join(seeds) + delim.rstrip()


def meaningless_prompt(n_seeds: int, cfg: PromptConfig = PromptConfig()) -> str:
    """The generation prompt with class and seeds replaced by blank fillers.

    Mirrors the generation prompt's shape slot for slot; its next-token
    distribution is the context-free prior used for calibration.
    """
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    blank = cfg.blank_text
    delim = cfg.delimiter_text
    return f"They are {blank}: " + delim.join([blank] * n_seeds) + delim.rstrip()


def ranking_templates(
    candidate: str, seed: str, class_name: str
) -> tuple[str, str]:
    """The two reverse-generation templates scored during re-ranking.

    Returns ("<candidate>, <seed>", "<candidate> is one of <class_name>");
    the candidate's tokens are the conditioning prefix when scoring.
    """
    if not candidate or not seed or not class_name:
        raise ValueError("candidate, seed and class name must be non-empty")
    return f"{candidate}, {seed}", f"{candidate} is one of {class_name}"
