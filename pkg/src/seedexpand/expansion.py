"""Iterative expansion loop, reciprocal-rank accumulation, and generative re-ranking.

Each iteration shuffles the current seed set into m prompt permutations,
decodes each under the trie constraint (current seeds excluded), pools the
decodes by best score into one iteration ranking, accumulates reciprocal
ranks into M1, and grows the seed set by the iteration's top k entities.
After the loop the best rerank_pool candidates by M1 are re-scored with two
reverse templates ("<candidate>, <seed>" and "<candidate> is one of <class>"),
giving reciprocal-rank scores M2 and M3, and fused as

    C(e) = (1 - lambda) * M1(e) + lambda * (M2(e) + M3(e)).

Only the user's original seeds are excluded from the output; entities that
were promoted into the seed set along the way remain candidates.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

from .decoder import (
    CalibrationMode,
    CalibrationState,
    ClassNameError,
    constrained_beam_search,
    generate_class_name,
)
from .lm import LmBackend
from .prompts import (
    PromptConfig,
    class_name_prompt,
    generation_prompt,
    meaningless_prompt,
    ranking_templates,
)
from .vocab import EntityVocabulary, PrefixTrie

__all__ = [
    "ExpansionConfig",
    "ExpansionState",
    "RankedEntry",
    "RankedExpansion",
    "expand",
    "update_m1",
    "template_logprob",
    "generative_rank",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExpansionConfig:
    iterations: int = 5
    permutations: int = 5
    growth_k: int = 5
    beam: int = 30
    target_size: int = 50
    ranking_weight: float = 0.9
    rerank_pool: int = 100
    mu: float = 0.5
    calibration_mode: CalibrationMode = CalibrationMode.PER_STEP
    max_class_name_tokens: int = 10
    normalize_by_suffix: bool = False
    regenerate_class_name: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.permutations < 1:
            raise ValueError("permutations must be >= 1")
        if self.growth_k < 0:
            raise ValueError("growth_k must be >= 0")
        if self.beam < 1:
            raise ValueError("beam must be >= 1")
        if self.target_size < 1:
            raise ValueError("target_size must be >= 1")
        if not 0.0 <= self.ranking_weight <= 1.0:
            raise ValueError("ranking_weight must be within [0, 1]")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must be within [0, 1]")
        if self.rerank_pool < self.target_size:
            raise ValueError("rerank_pool must be >= target_size")


@dataclass
class ExpansionState:
    """Mutable loop state: growing seed list and accumulated M1 scores."""

    seeds: list[int]
    class_name: str
    rng_seed: int
    mrr_m1: dict[int, float] = field(default_factory=dict)
    per_iteration_ranks: dict[tuple[int, int], int] = field(default_factory=dict)


class RankedEntry(NamedTuple):
    entity_id: int
    m1: float
    m2: float
    m3: float
    score: float


@dataclass
class RankedExpansion:
    """Final ordered expansion with per-entity component scores."""

    entries: list[RankedEntry]
    query_id: str
    class_name: str
    elapsed_s: float


def update_m1(
    state: ExpansionState, iteration_ranked: Sequence[int], iteration: int
) -> ExpansionState:
    """Add 1/rank for each entity of one iteration's pooled ranking."""
    seen: set[int] = set()
    for rank, eid in enumerate(iteration_ranked, start=1):
        if eid in seen:
            raise ValueError(f"entity {eid} appears twice in iteration {iteration}")
        seen.add(eid)
        state.mrr_m1[eid] = state.mrr_m1.get(eid, 0.0) + 1.0 / rank
        state.per_iteration_ranks[(iteration, eid)] = rank
    return state


def template_logprob(
    backend: LmBackend,
    template_text: str,
    conditioning_len: int,
    *,
    normalize_by_suffix: bool = False,
) -> float:
    """Negative mean log-probability of a template's suffix tokens.

    The first `conditioning_len` tokens are the candidate-entity region; the
    returned value is -(1/N) * sum of log p over the remaining positions
    (lower means the model generates the suffix more readily).  The divisor
    is the full template length N; `normalize_by_suffix` switches it to the
    number of scored positions.
    """
    ids = backend.tokenize(template_text)
    n = len(ids)
    m = conditioning_len
    if m >= n:
        raise ValueError(
            f"conditioning length {m} must be < template length {n} "
            f"for {template_text!r}"
        )
    items = [(ids[:i], [ids[i]]) for i in range(m, n)]
    values = backend.batch_next_token_logprobs_restricted(items)
    total = sum(float(v[0]) for v in values)
    divisor = (n - m) if normalize_by_suffix else n
    return -total / divisor


def _reciprocal_ranks(
    keyed: list[tuple[float, str, int]]
) -> dict[int, float]:
    """1/rank per entity after an ascending sort of the template scores.

    Competition ranking: entities with exactly equal scores share the rank
    of the first of them (1, 1, 3, ...), so quantized backends do not crown
    an arbitrary lexicographic winner.  Distinct scores give plain 1..n.
    """
    out = {}
    rank = 0
    prev: float | None = None
    for pos, (score, _, eid) in enumerate(sorted(keyed), start=1):
        if prev is None or score != prev:
            rank = pos
            prev = score
        out[eid] = 1.0 / rank
    return out


def generative_rank(
    backend: LmBackend,
    candidates: Sequence[int],
    vocab: EntityVocabulary,
    seeds: Sequence[str],
    class_name: str,
    ranking_weight: float,
    m1_scores: dict[int, float],
    *,
    normalize_by_suffix: bool = False,
) -> list[RankedEntry]:
    """Fuse M1 with the two reverse-template reciprocal ranks into C(e).

    The pair template is scored once per seed and averaged; both template
    rankings sort ascending by score value with (surface, id) tie-breaks.
    Output is ordered by C descending, ties broken by higher M1 then surface.
    """
    if not 0.0 <= ranking_weight <= 1.0:
        raise ValueError("ranking_weight must be within [0, 1]")
    if not seeds:
        raise ValueError("need at least one seed for template ranking")
    if not candidates:
        return []
    if len(set(candidates)) != len(candidates):
        raise ValueError("candidate list contains duplicates")

    # one batched backend call covering every scored template position
    items: list[tuple[list[int], list[int]]] = []
    spans: list[tuple[int, int]] = []  # (start, count) per template
    divisors: list[int] = []
    per_entity = len(seeds) + 1
    for eid in candidates:
        surface = vocab.surface(eid)
        cand_ids = backend.tokenize(surface)
        m = len(cand_ids)
        if class_name:
            templates = [ranking_templates(surface, s, class_name)[0] for s in seeds]
            templates.append(ranking_templates(surface, seeds[0], class_name)[1])
        else:
            # classless fallback: bare templates without the class slot
            templates = [f"{surface}, {s}" for s in seeds]
            templates.append(f"{surface} is one of")
        for text in templates:
            ids = backend.tokenize(text)
            if ids[:m] != cand_ids:
                raise ValueError(
                    f"template {text!r} does not start with the candidate's tokens"
                )
            spans.append((len(items), len(ids) - m))
            divisors.append((len(ids) - m) if normalize_by_suffix else len(ids))
            for i in range(m, len(ids)):
                items.append((ids[:i], [ids[i]]))
    values = backend.batch_next_token_logprobs_restricted(items)

    pair_keyed: list[tuple[float, str, int]] = []
    isa_keyed: list[tuple[float, str, int]] = []
    for c, eid in enumerate(candidates):
        surface = vocab.surface(eid)
        ls = []
        for t in range(per_entity):
            start, count = spans[c * per_entity + t]
            total = sum(float(values[start + i][0]) for i in range(count))
            ls.append(-total / divisors[c * per_entity + t])
        pair_keyed.append((sum(ls[:-1]) / len(seeds), surface, eid))
        isa_keyed.append((ls[-1], surface, eid))

    m2 = _reciprocal_ranks(pair_keyed)
    m3 = _reciprocal_ranks(isa_keyed)
    lam = ranking_weight
    entries = [
        RankedEntry(
            entity_id=eid,
            m1=m1_scores.get(eid, 0.0),
            m2=m2[eid],
            m3=m3[eid],
            score=(1.0 - lam) * m1_scores.get(eid, 0.0) + lam * (m2[eid] + m3[eid]),
        )
        for eid in candidates
    ]
    entries.sort(key=lambda e: (-e.score, -e.m1, vocab.surface(e.entity_id)))
    return entries


def _fit_seed_surfaces(
    backend: LmBackend,
    surfaces: list[str],
    class_name: str,
    prompt_cfg: PromptConfig,
) -> list[str]:
    """Drop oldest seed mentions until the generation prompt fits the context."""
    limit = backend.context_limit
    if limit is None:
        return surfaces
    headroom = 16
    kept = list(surfaces)
    while len(kept) > 1:
        prompt = generation_prompt(kept, class_name, prompt_cfg)
        if len(backend.tokenize(prompt)) <= limit - headroom:
            return kept
        kept = kept[1:]
    logger.warning("prompt truncated to a single seed to fit the context window")
    return kept


def _usable_demonstrations(
    backend: LmBackend, prompt_cfg: PromptConfig
) -> PromptConfig:
    """Drop in-context demonstrations the backend cannot tokenize.

    Demonstrations are hints; a backend with a closed token space (the toy
    n-gram) simply proceeds without the ones outside it.
    """
    kept = []
    for ents, name in prompt_cfg.demonstrations:
        try:
            backend.tokenize(f"{', '.join(ents)} and x are {name}.")
        except Exception:
            logger.warning(
                "dropping demonstration %r: not tokenizable by this backend", name
            )
            continue
        kept.append((ents, name))
    if len(kept) == len(prompt_cfg.demonstrations):
        return prompt_cfg
    return replace(prompt_cfg, demonstrations=tuple(kept))


def _decode_class_name(
    backend: LmBackend,
    seed_surfaces: Sequence[str],
    cfg: ExpansionConfig,
    prompt_cfg: PromptConfig,
) -> str:
    if len(seed_surfaces) < 2:
        if prompt_cfg.allow_classless_fallback:
            return ""
        raise ClassNameError(
            "class naming needs at least 2 seeds; enable the classless fallback "
            "to expand without a class name"
        )
    prompt = class_name_prompt(
        seed_surfaces, _usable_demonstrations(backend, prompt_cfg)
    )
    try:
        return generate_class_name(backend, prompt, cfg.max_class_name_tokens)
    except ClassNameError:
        if prompt_cfg.allow_classless_fallback:
            logger.warning("class-name decode failed; continuing class-agnostic")
            return ""
        raise


def expand(
    backend: LmBackend,
    trie: PrefixTrie,
    vocab: EntityVocabulary,
    seeds: Sequence[str],
    cfg: ExpansionConfig = ExpansionConfig(),
    prompt_cfg: PromptConfig = PromptConfig(),
    query_id: str = "",
) -> RankedExpansion:
    """Run the full expansion pipeline for one query.

    Seeds must resolve in the vocabulary.  The run is deterministic given
    (backend, cfg, prompt_cfg, seeds): permutations come from a private RNG
    seeded with cfg.rng_seed.
    """
    t0 = time.perf_counter()
    seed_ids = vocab.resolve(seeds)
    original = list(dict.fromkeys(seed_ids))
    rng = random.Random(cfg.rng_seed)

    class_name = _decode_class_name(
        backend, [vocab.surface(i) for i in original], cfg, prompt_cfg
    )
    state = ExpansionState(
        seeds=list(original), class_name=class_name, rng_seed=cfg.rng_seed
    )

    for iteration in range(1, cfg.iterations + 1):
        if cfg.regenerate_class_name and iteration > 1:
            state.class_name = _decode_class_name(
                backend, [vocab.surface(i) for i in state.seeds], cfg, prompt_cfg
            )
        pooled: dict[int, float] = {}
        for _ in range(cfg.permutations):
            perm = list(state.seeds)
            rng.shuffle(perm)
            surfaces = _fit_seed_surfaces(
                backend, [vocab.surface(i) for i in perm], state.class_name, prompt_cfg
            )
            prompt = generation_prompt(surfaces, state.class_name, prompt_cfg)
            calib = None
            if cfg.mu > 0.0:
                null_prompt = meaningless_prompt(len(surfaces), prompt_cfg)
                calib = CalibrationState(
                    mu=cfg.mu,
                    mode=cfg.calibration_mode,
                    null_prefix=tuple(backend.tokenize(null_prompt)),
                )
            result = constrained_beam_search(
                backend, trie, vocab, prompt, cfg.beam, calib, excluded=state.seeds
            )
            for ent in result.entities:
                prev = pooled.get(ent.entity_id)
                if prev is None or ent.log_score > prev:
                    pooled[ent.entity_id] = ent.log_score
        if not pooled:
            logger.warning(
                "query %s: iteration %d decoded nothing; stopping early",
                query_id or "<unnamed>", iteration,
            )
            break
        ranked_ids = [
            eid
            for _, _, eid in sorted(
                (-score, vocab.surface(eid), eid) for eid, score in pooled.items()
            )
        ]
        update_m1(state, ranked_ids, iteration)
        grown = [e for e in ranked_ids[: cfg.growth_k] if e not in state.seeds]
        state.seeds.extend(grown)

    original_set = set(original)
    candidates = [e for e in state.mrr_m1 if e not in original_set]
    candidates.sort(key=lambda e: (-state.mrr_m1[e], vocab.surface(e), e))
    pool = candidates[: cfg.rerank_pool]
    entries = generative_rank(
        backend,
        pool,
        vocab,
        [vocab.surface(i) for i in original],
        state.class_name,
        cfg.ranking_weight,
        state.mrr_m1,
        normalize_by_suffix=cfg.normalize_by_suffix,
    )
    if len(entries) < cfg.target_size:
        logger.warning(
            "query %s: produced %d entities (< target %d); candidate pool exhausted",
            query_id or "<unnamed>", len(entries), cfg.target_size,
        )
    return RankedExpansion(
        entries=entries,
        query_id=query_id,
        class_name=state.class_name,
        elapsed_s=time.perf_counter() - t0,
    )
