"""Synthetic planted-class text used to train and probe the toy backend.

The generator emits four sentence families over each class:

* list sentences      "They are <name>: m1, m2, ... , mn,"   (stride orders)
* pair fragments      "m1, m2,"                              (bare, no head)
* naming sentences    "m1, m2 and m3 are <name>."
* is-a sentences      "m1 is one of <name>."

Pair fragments cover every ordered pair of same-class members, so a
short-context n-gram model can continue any member with any other member of
its class.  The families are balanced: every member occurs the same number
of times in the same positional roles, so template positions a short-context
model cannot possibly discriminate (e.g. the class-name slot of the is-a
template, four tokens away from the member) score exactly equal instead of
adding frequency noise.  Naming sentences cover every member in the slot
right before "are" and outnumber list sentences, so class naming terminates
with "." from any seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

__all__ = [
    "ClassSpec",
    "generate_synthetic_corpus",
    "planted_classes",
]

_CONSONANTS = "bdfglmnprstvz"
_VOWELS = "aeiou"
_SYLLABLES = [c + v for c in _CONSONANTS for v in _VOWELS]


@dataclass(frozen=True)
class ClassSpec:
    """A semantic class: a name plus its member entity surfaces."""

    name: str
    members: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("class name is empty")
        if len(self.members) < 4:
            raise ValueError(
                f"class {self.name!r} has {len(self.members)} members; need >= 4"
            )


def _list_strides(n: int, rounds: int) -> list[int]:
    strides = [s for s in range(1, n) if math.gcd(s, n) == 1]
    return [strides[i % len(strides)] for i in range(rounds)]


def generate_synthetic_corpus(
    classes: list[ClassSpec] | tuple[ClassSpec, ...],
    seed: int,
    *,
    list_rounds: int = 2,
    naming_rounds: int = 2,
    isa_sentences_per_member: int = 2,
    pair_coverage: bool = True,
) -> str:
    """Deterministic training text for the given classes.

    Same (classes, seed) always produces identical text; the seed only
    shuffles line order, which per-line n-gram training ignores.  Each list
    round walks all members once in a stride order (stride coprime with the
    class size), and each naming round puts every member exactly once in
    each of the three slots, keeping per-member counts identical.
    """
    if not classes:
        raise ValueError("no classes given")
    rng = random.Random(seed)
    lines: list[str] = []
    for cls in classes:
        members = list(cls.members)
        n = len(members)
        if naming_rounds > n - 2:
            raise ValueError(
                f"class {cls.name!r}: naming_rounds {naming_rounds} needs "
                f"at least {naming_rounds + 2} members"
            )
        for r, stride in enumerate(_list_strides(n, list_rounds)):
            walk = [members[(r + j * stride) % n] for j in range(n)]
            lines.append(f"They are {cls.name}: " + ", ".join(walk) + ",")
        if pair_coverage:
            for a in members:
                for b in members:
                    if a != b:
                        lines.append(f"{a}, {b},")
        for t in range(naming_rounds):
            for i in range(n):
                a = members[(i + 1 + t) % n]
                b = members[(i + 2 + t) % n]
                lines.append(f"{a}, {b} and {members[i]} are {cls.name}.")
        for m in members:
            for _ in range(isa_sentences_per_member):
                lines.append(f"{m} is one of {cls.name}.")
    rng.shuffle(lines)
    return "\n".join(lines) + "\n"


def _fresh_word(rng: random.Random, taken: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if word not in taken:
            taken.add(word)
            return word


def planted_classes(
    n_classes: int,
    members_per_class: int,
    seed: int,
    *,
    two_token_fraction: float = 0.2,
) -> list[ClassSpec]:
    """Deterministic pseudoword classes for desk-scale experiments.

    A fraction of members are two-word surfaces; half of those extend an
    existing single-word member of the same class so the token prefix
    relation (one entity being a prefix of another) is exercised.
    """
    if members_per_class < 4:
        raise ValueError("members_per_class must be >= 4")
    rng = random.Random(seed)
    taken: set[str] = {"They", "are", "and", "is", "one", "of"}
    classes = []
    for _ in range(n_classes):
        name = _fresh_word(rng, taken)
        singles = [_fresh_word(rng, taken) for _ in range(members_per_class)]
        members = list(singles)
        n_two = int(members_per_class * two_token_fraction)
        kept = singles[: members_per_class - n_two]
        for j in range(n_two):
            if j % 2 == 0 and kept:
                base = rng.choice(kept)
            else:
                base = _fresh_word(rng, taken)
            surface = f"{base} {_fresh_word(rng, taken)}"
            members[members_per_class - 1 - j] = surface
        classes.append(ClassSpec(name=name, members=tuple(members)))
    return classes
