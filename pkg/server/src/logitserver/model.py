"""Checkpoint loading and deterministic next-token scoring.

One model instance is loaded at startup and shared; inference runs in eval
mode under no_grad with requests serialized behind a lock, so responses are
a pure function of (checkpoint, request).
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

logger = logging.getLogger(__name__)

# text prepended when tokenizing in continuation context; entities appear
# after ", " in prompts, so their word-initial pieces carry the space
_CONTINUATION_CONTEXT = ","


class ContextOverflow(ValueError):
    """Request exceeds the model's usable context length."""


@dataclass
class ServerConfig:
    model_id: str
    device: str = "cpu"
    context_limit: int | None = None
    port: int = 8100
    host: str = "127.0.0.1"


class ModelRunner:
    """Tokenizer + causal LM behind a thread-safe scoring interface."""

    def __init__(self, cfg: ServerConfig):
        self.cfg = cfg
        logger.info("loading tokenizer and model from %s", cfg.model_id)
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.model_id)
        self.model = AutoModelForCausalLM.from_pretrained(
            cfg.model_id, torch_dtype=torch.float32
        )
        self.model.to(cfg.device)
        self.model.eval()
        self._lock = threading.Lock()
        model_max = getattr(self.model.config, "max_position_embeddings", None)
        limits = [l for l in (model_max, cfg.context_limit) if l]
        self.context_limit = min(limits) if limits else 2048
        self.vocab_size = int(self.model.config.vocab_size)
        self.delimiter_token_ids = self.tokenize(_CONTINUATION_CONTEXT)
        if not self.delimiter_token_ids:
            raise ValueError("tokenizer produced no ids for the entity delimiter")
        logger.info(
            "ready: vocab %d, context %d, delimiter ids %s",
            self.vocab_size, self.context_limit, self.delimiter_token_ids,
        )

    # -- tokenization --------------------------------------------------------

    def tokenize(self, text: str, in_continuation: bool = False) -> list[int]:
        """Token ids for `text`, optionally as it appears mid-list.

        Continuation mode tokenizes behind a comma and strips the comma's
        ids, so subword pieces match what decoding sees after ", ".
        """
        if not in_continuation:
            return self.tokenizer.encode(text, add_special_tokens=False)
        ctx_ids = self.tokenizer.encode(
            _CONTINUATION_CONTEXT, add_special_tokens=False
        )
        full = self.tokenizer.encode(
            _CONTINUATION_CONTEXT + " " + text.lstrip(), add_special_tokens=False
        )
        if full[: len(ctx_ids)] != ctx_ids:
            raise ValueError(
                f"continuation context merged into {text!r}; cannot strip prefix"
            )
        return full[len(ctx_ids):]

    def detokenize(self, token_ids: list[int]) -> str:
        return self.tokenizer.decode(token_ids, skip_special_tokens=False)

    # -- scoring ---------------------------------------------------------------

    def _check_context(self, prefix_ids: list[int]) -> None:
        if len(prefix_ids) > self.context_limit:
            raise ContextOverflow(
                f"prefix of {len(prefix_ids)} tokens exceeds context limit "
                f"{self.context_limit}"
            )
        if any(not 0 <= t < self.vocab_size for t in prefix_ids):
            raise ValueError("prefix contains out-of-range token ids")

    def next_token_logprobs(
        self, prefix_ids: list[int], restrict_ids: list[int] | None = None
    ) -> np.ndarray:
        """Log-softmax of the final-position logits, full or projected.

        With `restrict_ids` the returned values are exactly the requested
        entries of the full vector (a projection, not a renormalization).
        """
        if not prefix_ids:
            raise ValueError("prefix_ids is empty")
        self._check_context(prefix_ids)
        if restrict_ids is not None and any(
            not 0 <= t < self.vocab_size for t in restrict_ids
        ):
            raise ValueError("restrict_ids contains out-of-range token ids")
        with self._lock, torch.no_grad():
            ids = torch.tensor([prefix_ids], dtype=torch.long, device=self.cfg.device)
            logits = self.model(ids).logits[0, -1, :]
            logprobs = torch.log_softmax(logits.float(), dim=-1)
        vec = logprobs.cpu().numpy()
        if restrict_ids is not None:
            vec = vec[np.asarray(restrict_ids, dtype=np.int64)]
        return vec
