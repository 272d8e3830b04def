"""Calibrated, trie-constrained beam search plus greedy class-name decoding.

At every step a hypothesis may only emit tokens that extend a vocabulary
entity (children of its trie cursor) or, once its cursor completes an entity,
the entity delimiter that terminates the hypothesis.  The delimiter step's
score is part of the entity score, so stopping at "Florida" competes fairly
with continuing to "Florida State".

Scores are sums of per-token calibrated log-probabilities:

    score_step(t) = log p(t | prompt, generated) - mu * log p_null(t | ...)

where p_null comes from the blanked-out null prompt.  Calibrated scores are
ranking scores, not a renormalized distribution, and with mu > 0 they are not
necessarily <= 0.  Finished hypotheses are moved to a result pool without
occupying beam slots, so with beam >= |V| the search enumerates the full
reachable vocabulary; the pool's top `beam` entries are returned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .lm import LmBackend, TokenDistribution
from .vocab import EntityVocabulary, PrefixTrie

__all__ = [
    "CalibrationMode",
    "CalibrationState",
    "BeamPhase",
    "BeamHypothesis",
    "DecodedEntity",
    "DecodeResult",
    "ClassNameError",
    "calibrate_step",
    "compute_prior",
    "constrained_beam_search",
    "generate_class_name",
]

logger = logging.getLogger(__name__)


class ClassNameError(RuntimeError):
    """Greedy class-name decoding produced nothing usable."""


class CalibrationMode(Enum):
    """How often the null-prompt prior is recomputed during a decode."""

    PER_STEP = "per_step"
    FIRST_TOKEN = "first_token"


@dataclass
class CalibrationState:
    """Null-prompt prior configuration for one decode.

    In PER_STEP mode the null prefix is extended in lockstep with the tokens
    generated so far; in FIRST_TOKEN mode the distribution after the bare
    null prefix is computed once and reused for every step.
    """

    mu: float
    mode: CalibrationMode = CalibrationMode.PER_STEP
    null_prefix: tuple[int, ...] = ()
    _cached_first: TokenDistribution | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must be within [0, 1], got {self.mu}")

    @property
    def active(self) -> bool:
        return self.mu > 0.0

    def first_token_prior(self, backend: LmBackend) -> TokenDistribution:
        if self._cached_first is None:
            self._cached_first = backend.next_token_logprobs(self.null_prefix)
        return self._cached_first


def calibrate_step(
    dist: TokenDistribution | np.ndarray,
    prior: TokenDistribution | np.ndarray,
    mu: float,
) -> np.ndarray:
    """Per-token ranking scores `logp - mu * prior_logp`.

    mu = 0 returns the model scores unchanged.  Hard-masked tokens
    (logp = -inf) stay impossible regardless of the prior.  The output is not
    renormalized.
    """
    d = dist.logprobs if isinstance(dist, TokenDistribution) else np.asarray(dist)
    p = prior.logprobs if isinstance(prior, TokenDistribution) else np.asarray(prior)
    if d.shape != p.shape:
        raise ValueError(f"shape mismatch: dist {d.shape} vs prior {p.shape}")
    if mu == 0.0:
        return d.copy()
    out = d - mu * p
    masked = np.isneginf(d)
    if masked.any():
        out = np.where(masked, -np.inf, out)
    return out


def compute_prior(
    backend: LmBackend,
    calib_prompt: str,
    mode: CalibrationMode,
    generated_so_far: Sequence[int] = (),
) -> TokenDistribution:
    """Null-prompt next-token distribution for the current decode position."""
    null_prefix = tuple(backend.tokenize(calib_prompt))
    if mode is CalibrationMode.PER_STEP:
        return backend.next_token_logprobs(null_prefix + tuple(generated_so_far))
    return backend.next_token_logprobs(null_prefix)


class BeamPhase(Enum):
    OUTSIDE_ENTITY = "outside"
    INSIDE_ENTITY = "inside"


class BeamHypothesis(NamedTuple):
    """One partial decode: emitted tokens, cumulative score, trie position."""

    generated: tuple[int, ...]
    log_score: float
    cursor: int
    token_scores: tuple[float, ...]

    @property
    def phase(self) -> BeamPhase:
        return BeamPhase.INSIDE_ENTITY if self.generated else BeamPhase.OUTSIDE_ENTITY


class DecodedEntity(NamedTuple):
    entity_id: int
    log_score: float
    token_scores: tuple[float, ...]


@dataclass
class DecodeResult:
    """Entities recovered by one decode, best score first."""

    entities: list[DecodedEntity]
    beam_size_used: int
    diagnostic: str | None = None

    def entity_ids(self) -> list[int]:
        return [e.entity_id for e in self.entities]


def _result_order_key(vocab: EntityVocabulary):
    def key(e: DecodedEntity):
        return (-e.log_score, vocab.surface(e.entity_id), e.entity_id)

    return key


def _excluded_subtree_counts(
    trie: PrefixTrie, vocab: EntityVocabulary, excluded: frozenset[int]
) -> dict[int, int]:
    """Per-node count of excluded terminals, for dead-subtree pruning.

    Cost is O(|excluded| * depth), independent of vocabulary size.  An
    excluded id whose token path terminates under a different entity id
    (duplicate tokenization, first occurrence owns the node) prunes nothing.
    """
    counts: dict[int, int] = {}
    for eid in excluded:
        if not 0 <= eid < len(vocab):
            continue
        node = PrefixTrie.ROOT
        path = [node]
        for t in vocab[eid].tokens:
            node = trie.step(node, t)
            if node == -1:
                break
            path.append(node)
        else:
            if trie.entity_at(node) == eid:
                for p in path:
                    counts[p] = counts.get(p, 0) + 1
    return counts


def constrained_beam_search(
    backend: LmBackend,
    trie: PrefixTrie,
    vocab: EntityVocabulary,
    prompt: str,
    beam: int,
    calib: CalibrationState | None = None,
    excluded: Iterable[int] = (),
) -> DecodeResult:
    """Beam decode constrained to vocabulary entities, excluding `excluded`.

    Returns up to `beam` distinct entities ordered by calibrated log score
    (ties broken by surface, then entity id).  A hypothesis terminates when
    it emits the delimiter at a completed entity; completed hypotheses are
    pooled and do not consume beam width.  Subtrees whose every terminal is
    excluded are masked outright, so excluded entities neither finalize nor
    waste beam slots.
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    if not prompt:
        raise ValueError("prompt is empty")
    if len(trie) <= 1:
        raise ValueError("trie is empty")
    excluded_set = frozenset(excluded)
    prompt_ids = tuple(backend.tokenize(prompt))
    backend.check_context(prompt_ids)
    delim = backend.delimiter_tokens[0]
    calibrating = calib is not None and calib.active
    per_step = calibrating and calib.mode is CalibrationMode.PER_STEP
    excl_under = _excluded_subtree_counts(trie, vocab, excluded_set)

    def alive(node: int) -> bool:
        return trie.terminal_count(node) > excl_under.get(node, 0)

    live = [BeamHypothesis((), 0.0, PrefixTrie.ROOT, ())]
    pool: dict[int, DecodedEntity] = {}

    while live:
        metas = []  # (hyp, child pairs, finishing entity id or -1)
        items = []
        for h in live:
            finish_eid = -1
            if trie.is_terminal(h.cursor):
                eid = trie.entity_at(h.cursor)
                if eid not in excluded_set and eid not in pool:
                    finish_eid = eid
            pairs = trie.sorted_children(h.cursor)
            if h.cursor in excl_under:
                # only nodes on an excluded path need per-child liveness checks
                pairs = tuple(p for p in pairs if alive(p[1]))
            if not pairs and finish_eid == -1:
                continue
            ids = [t for t, _ in pairs]
            if finish_eid != -1:
                ids.append(delim)
            metas.append((h, pairs, finish_eid))
            items.append((prompt_ids + h.generated, ids))
        if not metas:
            break

        reals = backend.batch_next_token_logprobs_restricted(items)
        if per_step:
            null_items = [
                (calib.null_prefix + meta[0].generated, item[1])
                for meta, item in zip(metas, items)
            ]
            priors = backend.batch_next_token_logprobs_restricted(null_items)
        elif calibrating:
            first = calib.first_token_prior(backend).logprobs
            priors = [
                first[np.asarray(item[1], dtype=np.int64)] for item in items
            ]
        else:
            priors = None

        # score all extensions as flat arrays; materialize only survivors
        parent_idx: list[np.ndarray] = []
        slot_idx: list[np.ndarray] = []
        step_scores: list[np.ndarray] = []
        total_scores: list[np.ndarray] = []
        for j, (h, pairs, finish_eid) in enumerate(metas):
            if priors is None:
                scores = reals[j]
            else:
                scores = calibrate_step(reals[j], priors[j], calib.mu)
            if finish_eid != -1:
                s = float(scores[-1])
                if s != -np.inf:
                    # the trailing delimiter slot: hypothesis completes
                    pool[finish_eid] = DecodedEntity(
                        finish_eid, h.log_score + s, h.token_scores + (s,)
                    )
                scores = scores[:-1]
            n = len(scores)
            if n:
                parent_idx.append(np.full(n, j))
                slot_idx.append(np.arange(n))
                step_scores.append(scores)
                total_scores.append(scores + h.log_score)
        if not total_scores:
            break
        flat_total = np.concatenate(total_scores)
        flat_step = np.concatenate(step_scores)
        flat_parent = np.concatenate(parent_idx)
        flat_slot = np.concatenate(slot_idx)
        keep = flat_step != -np.inf
        if not keep.all():
            flat_total, flat_step, flat_parent, flat_slot = (
                flat_total[keep], flat_step[keep], flat_parent[keep], flat_slot[keep]
            )

        def materialize(sel) -> list[BeamHypothesis]:
            out = []
            for i in sel:
                h, pairs, _ = metas[flat_parent[i]]
                tok, child = pairs[flat_slot[i]]
                s = float(flat_step[i])
                out.append(
                    BeamHypothesis(
                        h.generated + (tok,), h.log_score + s, child,
                        h.token_scores + (s,),
                    )
                )
            return out

        if len(flat_total) <= beam:
            next_live = materialize(range(len(flat_total)))
        else:
            kth = np.partition(flat_total, len(flat_total) - beam)[
                len(flat_total) - beam
            ]
            above = np.nonzero(flat_total > kth)[0]
            tied = np.nonzero(flat_total == kth)[0]
            next_live = materialize(above)
            boundary = sorted(materialize(tied), key=lambda h: h.generated)
            next_live.extend(boundary[: beam - len(above)])
        next_live.sort(key=lambda h: (-h.log_score, h.generated))
        live = next_live[:beam]

    entries = sorted(pool.values(), key=_result_order_key(vocab))[:beam]
    diagnostic = None
    if not entries:
        diagnostic = (
            f"no reachable entity: {len(excluded_set)} excluded of {len(vocab)}; "
            "every beam path was masked or excluded"
        )
        logger.warning("%s", diagnostic)
    return DecodeResult(entities=entries, beam_size_used=beam, diagnostic=diagnostic)


_TERMINATORS = (".", "\n")


def generate_class_name(
    backend: LmBackend, prompt: str, max_tokens: int = 10
) -> str:
    """Greedy, unconstrained, uncalibrated short decode of a class name.

    Stops at a sentence terminator or after `max_tokens`; the terminator and
    surrounding whitespace are stripped.
    """
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
    prefix = list(backend.tokenize(prompt))
    backend.check_context(prefix)
    generated: list[int] = []
    for _ in range(max_tokens):
        dist = backend.next_token_logprobs(prefix + generated)
        generated.append(int(np.argmax(dist.logprobs)))
        text = backend.detokenize(generated)
        if any(t in text for t in _TERMINATORS):
            break
    text = backend.detokenize(generated)
    for t in _TERMINATORS:
        cut = text.find(t)
        if cut != -1:
            text = text[:cut]
    text = text.strip()
    if not text:
        raise ClassNameError("class-name decode produced only terminators/whitespace")
    return text
