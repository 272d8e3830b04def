"""Deterministic add-k n-gram backend used as the desk-scale test substrate.

The token space is the whitespace vocabulary of the training text, with the
punctuation marks `, : .` split off as standalone tokens so that the entity
delimiter "," exists as its own token and list-style sentences teach entity
boundaries.  Tokenization is position-independent, so the continuation flag
of the backend contract is a no-op here.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from .lm import LmBackend, TokenDistribution

__all__ = ["ToyLm", "train_toy_lm", "toy_tokenize_text"]

_FORMAT = "seedexpand-toy-lm/1"
_PUNCT_RE = re.compile(r"([,:.])")


def toy_tokenize_text(text: str) -> list[str]:
    """Whitespace tokens of `text` with `, : .` separated out."""
    return _PUNCT_RE.sub(r" \1 ", text).split()


class ToyLm(LmBackend):
    """Smoothed n-gram model over a fixed token space.

    Count tables are kept for every context length 0..order-1; a query uses
    the longest context the prefix affords.  Probabilities are add-k:

        P(t | ctx) = (count(ctx, t) + k) / (count(ctx, *) + k * |V|)

    With k = 0 an unseen context falls back to the uniform distribution so
    that every prefix still yields a valid distribution.
    """

    def __init__(self, order: int, smoothing: float, tokens: list[str]):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if smoothing < 0:
            raise ValueError(f"smoothing must be >= 0, got {smoothing}")
        self.order = order
        self.smoothing = smoothing
        self._tokens = list(tokens)
        self._token_ids = {t: i for i, t in enumerate(self._tokens)}
        if len(self._token_ids) != len(self._tokens):
            raise ValueError("duplicate tokens in token space")
        # counts[L][ctx][tok] and totals[L][ctx] for context length L
        self._counts: list[dict[tuple[int, ...], Counter]] = [
            {} for _ in range(order)
        ]
        self._totals: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]
        self._tokenizer_id: str | None = None

    # -- training ----------------------------------------------------------

    def _observe(self, ids: list[int]) -> None:
        for i, tok in enumerate(ids):
            for length in range(self.order):
                if i - length < 0:
                    break
                ctx = tuple(ids[i - length : i])
                table = self._counts[length]
                bucket = table.get(ctx)
                if bucket is None:
                    bucket = table[ctx] = Counter()
                bucket[tok] += 1
                self._totals[length][ctx] = self._totals[length].get(ctx, 0) + 1

    # -- backend contract ----------------------------------------------------

    @property
    def vocab_size(self) -> int:
        return len(self._tokens)

    @property
    def tokenizer_id(self) -> str:
        if self._tokenizer_id is None:
            h = hashlib.sha256("\x00".join(self._tokens).encode("utf-8"))
            self._tokenizer_id = f"toyws1-{h.hexdigest()[:16]}"
        return self._tokenizer_id

    @property
    def delimiter_tokens(self) -> tuple[int, ...]:
        comma = self._token_ids.get(",")
        if comma is None:
            raise ValueError("token space has no ',' token; train on list-style text")
        return (comma,)

    def token_strings(self) -> list[str]:
        return list(self._tokens)

    def tokenize(self, text: str, in_continuation: bool = False) -> list[int]:
        ids = []
        for tok in toy_tokenize_text(text):
            tid = self._token_ids.get(tok)
            if tid is None:
                raise ValueError(f"token {tok!r} not in toy LM token space")
            ids.append(tid)
        return ids

    def detokenize(self, token_ids: Sequence[int]) -> str:
        return " ".join(self._tokens[int(t)] for t in token_ids)

    def next_token_logprobs(self, prefix: Sequence[int]) -> TokenDistribution:
        self.check_context(prefix)
        length = min(len(prefix), self.order - 1)
        ctx = tuple(int(t) for t in prefix[len(prefix) - length :])
        counts = self._counts[length].get(ctx)
        total = self._totals[length].get(ctx, 0)
        v = self.vocab_size
        k = self.smoothing
        denom = total + k * v
        if denom == 0.0:
            # k = 0 and unseen context: fall back to uniform
            return TokenDistribution(np.full(v, -np.log(v)))
        dense = np.full(v, k, dtype=np.float64)
        if counts:
            idx = np.fromiter(counts.keys(), dtype=np.int64, count=len(counts))
            val = np.fromiter(counts.values(), dtype=np.float64, count=len(counts))
            dense[idx] += val
        with np.errstate(divide="ignore"):
            logprobs = np.log(dense) - np.log(denom)
        return TokenDistribution(logprobs)

    # -- serialization -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        payload = {
            "format": _FORMAT,
            "order": self.order,
            "smoothing": self.smoothing,
            "tokens": self._tokens,
            "counts": [
                {
                    ",".join(map(str, ctx)): dict(sorted(bucket.items()))
                    for ctx, bucket in sorted(table.items())
                }
                for table in self._counts
            ],
        }
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, separators=(",", ":")),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "ToyLm":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != _FORMAT:
            raise ValueError(f"not a toy LM file (format={payload.get('format')!r})")
        model = cls(payload["order"], payload["smoothing"], payload["tokens"])
        for length, table in enumerate(payload["counts"]):
            for ctx_key, bucket in table.items():
                ctx = tuple(int(t) for t in ctx_key.split(",")) if ctx_key else ()
                model._counts[length][ctx] = Counter(
                    {int(t): int(n) for t, n in bucket.items()}
                )
                model._totals[length][ctx] = sum(model._counts[length][ctx].values())
        return model


def train_toy_lm(corpus: str, order: int = 3, smoothing: float = 0.1) -> ToyLm:
    """Train a deterministic n-gram backend from plain text.

    Token ids follow first occurrence order in the corpus, so the same text
    always produces the same model.  Lines are treated as independent
    sentences: contexts never span a line break.
    """
    words = toy_tokenize_text(corpus)
    if not words:
        raise ValueError("corpus is empty")
    tokens: list[str] = []
    seen: set[str] = set()
    for w in words:
        if w not in seen:
            seen.add(w)
            tokens.append(w)
    model = ToyLm(order, smoothing, tokens)
    for line in corpus.splitlines():
        line_words = toy_tokenize_text(line)
        if line_words:
            model._observe([model._token_ids[w] for w in line_words])
    return model
