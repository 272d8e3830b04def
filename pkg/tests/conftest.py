"""Shared fixtures: deterministic backends, reference oracles, planted worlds.

The oracles here are intentionally independent of the library's decode path:
they score entities by direct full-distribution backend calls, token by
token, and never touch the trie or the beam.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np
import pytest

from seedexpand.decoder import CalibrationMode
from seedexpand.lm import LmBackend, TokenDistribution
from seedexpand.prompts import PromptConfig
from seedexpand.synth import generate_synthetic_corpus, planted_classes
from seedexpand.toylm import ToyLm, toy_tokenize_text, train_toy_lm
from seedexpand.vocab import EntityRecord, EntityVocabulary, build_trie

GLUE = ["They", "are", "is", "one", "of", "and", ",", ":", "."]


class HashLm(LmBackend):
    """Pseudo-random but fully deterministic backend for fuzzing.

    The next-token distribution is the log-softmax of normals drawn from a
    generator seeded by a hash of (salt, prefix), so it is a pure function
    of the prefix with no structure a decoder could rely on.
    """

    def __init__(self, n_words: int = 40, salt: int = 0):
        self._tokens = [f"w{i:02d}" for i in range(n_words)] + GLUE
        self._ids = {t: i for i, t in enumerate(self._tokens)}
        self._salt = salt

    @property
    def vocab_size(self) -> int:
        return len(self._tokens)

    @property
    def tokenizer_id(self) -> str:
        return f"hashlm-{len(self._tokens)}-{self._salt}"

    @property
    def delimiter_tokens(self) -> tuple[int, ...]:
        return (self._ids[","],)

    def word_tokens(self) -> list[str]:
        return [t for t in self._tokens if t not in GLUE]

    def tokenize(self, text: str, in_continuation: bool = False) -> list[int]:
        return [self._ids[w] for w in toy_tokenize_text(text)]

    def detokenize(self, token_ids) -> str:
        return " ".join(self._tokens[t] for t in token_ids)

    def next_token_logprobs(self, prefix) -> TokenDistribution:
        digest = hashlib.sha256(
            (str(self._salt) + ":" + ",".join(map(str, prefix))).encode()
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        logits = rng.standard_normal(len(self._tokens)) * 2.0
        logits -= logits.max()
        logprobs = logits - np.log(np.exp(logits).sum())
        return TokenDistribution(logprobs)


def make_vocab(backend: LmBackend, surfaces) -> EntityVocabulary:
    records = []
    seen_tokens = set()
    for s in surfaces:
        toks = tuple(backend.tokenize(s, in_continuation=True))
        if toks in seen_tokens:
            continue
        seen_tokens.add(toks)
        records.append(EntityRecord(id=len(records), surface=s, tokens=toks))
    return EntityVocabulary(records, backend.tokenizer_id)


def random_vocab(backend, rng: random.Random, size: int) -> EntityVocabulary:
    """Random multi-token vocabulary over the backend's word tokens."""
    words = backend.word_tokens()
    surfaces = []
    seen = set()
    attempts = 0
    while len(surfaces) < size and attempts < size * 50:
        attempts += 1
        n = rng.choice((1, 1, 2, 2, 3))
        s = " ".join(rng.choice(words) for _ in range(n))
        if s not in seen:
            seen.add(s)
            surfaces.append(s)
    return make_vocab(backend, surfaces)


def oracle_entity_ranking(
    backend: LmBackend,
    vocab: EntityVocabulary,
    prompt: str,
    mu: float,
    mode: CalibrationMode,
    null_prompt: str | None,
    excluded=frozenset(),
):
    """Brute-force per-entity scoring: the independent check on beam decoding.

    Scores every non-excluded entity by walking its tokens plus the
    delimiter, summing calibrated log-probs from full-distribution calls.
    Entities hitting a hard-masked (-inf) step are unreachable and skipped.
    Returns [(entity_id, score)] sorted by (-score, surface, id).
    """
    prompt_ids = tuple(backend.tokenize(prompt))
    delim = backend.delimiter_tokens[0]
    null_ids = tuple(backend.tokenize(null_prompt)) if null_prompt else ()
    first_prior = (
        backend.next_token_logprobs(null_ids).logprobs if mu > 0 else None
    )
    scored = []
    for rec in vocab:
        if rec.id in excluded:
            continue
        total = 0.0
        generated: list[int] = []
        reachable = True
        for t in list(rec.tokens) + [delim]:
            d = backend.next_token_logprobs(prompt_ids + tuple(generated)).logprobs
            if mu > 0:
                if mode is CalibrationMode.PER_STEP:
                    p = backend.next_token_logprobs(null_ids + tuple(generated)).logprobs
                else:
                    p = first_prior
                step = float(d[t] - mu * p[t])
                if d[t] == -np.inf:
                    step = -np.inf
            else:
                step = float(d[t])
            if step == -np.inf:
                reachable = False
                break
            total += step
            generated.append(t)
        if reachable:
            scored.append((rec.id, total))
    scored.sort(key=lambda pair: (-pair[1], vocab.surface(pair[0]), pair[0]))
    return scored


def reference_average_precision(ranked, gold, k, seeds=(), denominator="hits"):
    """Straight-from-definition AP@K used to cross-check the metric module."""
    seeds = set(seeds)
    gold = [g for g in gold if g not in seeds]
    ranked = [r for r in ranked if r not in seeds]
    precisions = []
    hits = 0
    for i in range(min(k, len(ranked))):
        if ranked[i] in gold:
            hits += 1
            precisions.append(hits / (i + 1))
    if denominator == "hits":
        denom = hits
    else:
        denom = min(k, len(gold))
    return sum(precisions) / denom if denom else 0.0


@pytest.fixture(scope="session")
def planted_world():
    """Toy backend + vocabulary + trie over 4 planted classes of 12 members."""
    classes = planted_classes(4, 12, seed=303, two_token_fraction=0.25)
    corpus = generate_synthetic_corpus(classes, seed=303)
    backend = train_toy_lm(corpus, order=3, smoothing=0.1)
    vocab = make_vocab(backend, [m for c in classes for m in c.members])
    trie = build_trie(vocab)
    return {
        "classes": classes,
        "corpus": corpus,
        "backend": backend,
        "vocab": vocab,
        "trie": trie,
        "prompt_cfg": PromptConfig(demonstrations=()),
    }


@pytest.fixture(scope="session")
def hash_backend():
    return HashLm(n_words=40, salt=7)
