"""Autoregressive scoring contract shared by all language-model backends.

A backend maps a token prefix to the full next-token log-probability
distribution over its own token space.  Everything downstream (trie masking,
calibration, beam scoring, template scoring) works in log space; raw
probabilities are never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "BackendError",
    "ContextOverflowError",
    "TokenDistribution",
    "LmBackend",
    "logsumexp",
]


class BackendError(RuntimeError):
    """A backend failed to produce a distribution (I/O, protocol, state)."""


class ContextOverflowError(BackendError):
    """The requested prefix exceeds the backend's context limit."""


def logsumexp(logprobs: np.ndarray) -> float:
    """Numerically stable log of summed exponentials of a log-space vector."""
    m = np.max(logprobs)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(logprobs - m))))


@dataclass(frozen=True)
class TokenDistribution:
    """Dense next-token log-probability vector indexed by token id.

    Entries are finite log-probabilities or -inf for hard-masked tokens.
    A proper distribution satisfies logsumexp(logprobs) == 0 within 1e-4.
    """

    logprobs: np.ndarray

    def __len__(self) -> int:
        return len(self.logprobs)

    def validate(self, tol: float = 1e-4) -> None:
        if np.any(np.isnan(self.logprobs)) or np.any(self.logprobs == np.inf):
            raise ValueError("distribution contains NaN or +inf entries")
        z = logsumexp(self.logprobs)
        if abs(z) > tol:
            raise ValueError(f"distribution not normalized: logsumexp={z:.6g}")


class LmBackend:
    """Base class for autoregressive backends.

    Subclasses must provide `tokenize`, `detokenize`, `next_token_logprobs`
    and the identity properties.  `next_token_logprobs` must be a pure,
    deterministic function of the prefix.  The restricted/batch entry points
    have loop-and-slice defaults; remote backends override them to save
    bandwidth and round trips.
    """

    @property
    def vocab_size(self) -> int:
        raise NotImplementedError

    @property
    def tokenizer_id(self) -> str:
        """Stable identifier of the token space (trie caches key on this)."""
        raise NotImplementedError

    @property
    def delimiter_tokens(self) -> tuple[int, ...]:
        """Token ids separating entities in a list context (the ", " glue).

        The first id is what a decode emits to terminate a completed entity;
        any following whitespace is carried by the next entity's
        continuation-context tokens.
        """
        raise NotImplementedError

    @property
    def context_limit(self) -> int | None:
        """Maximum prefix length in tokens, or None if unbounded."""
        return None

    def tokenize(self, text: str, in_continuation: bool = False) -> list[int]:
        """Token ids for `text`.

        With `in_continuation` the text is tokenized as it would appear
        mid-sentence after ", " (subword tokenizers emit word-initial pieces
        there); backends whose tokenization is position-independent treat the
        flag as a no-op.
        """
        raise NotImplementedError

    def detokenize(self, token_ids: Sequence[int]) -> str:
        raise NotImplementedError

    def next_token_logprobs(self, prefix: Sequence[int]) -> TokenDistribution:
        """Full normalized next-token distribution after `prefix`."""
        raise NotImplementedError

    def next_token_logprobs_restricted(
        self, prefix: Sequence[int], token_ids: Sequence[int]
    ) -> np.ndarray:
        """Log-probabilities of just `token_ids` after `prefix`.

        Values equal the corresponding entries of the full distribution; the
        result is a projection, not a renormalized distribution.
        """
        dist = self.next_token_logprobs(prefix)
        return dist.logprobs[np.asarray(token_ids, dtype=np.int64)]

    def batch_next_token_logprobs_restricted(
        self, items: Sequence[tuple[Sequence[int], Sequence[int]]]
    ) -> list[np.ndarray]:
        """Elementwise `next_token_logprobs_restricted` over (prefix, ids) pairs."""
        return [self.next_token_logprobs_restricted(p, ids) for p, ids in items]

    def check_context(self, prefix: Sequence[int]) -> None:
        limit = self.context_limit
        if limit is not None and len(prefix) > limit:
            raise ContextOverflowError(
                f"prefix of {len(prefix)} tokens exceeds context limit {limit}"
            )
