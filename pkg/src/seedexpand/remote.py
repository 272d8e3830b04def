"""HTTP client for a logits server exposing a real causal language model.

Protocol (JSON over HTTP/1.1):

    GET  /info        -> {model_id, vocab_size, context_limit, delimiter_token_ids}
    POST /tokenize    {text, in_continuation}        -> {token_ids}
    POST /detokenize  {token_ids}                    -> {text}
    POST /logprobs    {prefix_ids, restrict_ids?}    -> {logprobs} | {logprobs_b64}
    POST /logprobs_batch {items: [{prefix_ids, restrict_ids?}]} -> {results: [...]}

Restricted responses are projections of the full log-softmax aligned with
restrict_ids.  When the request carries `Accept: application/x-logprobs-b64`
the server may return vectors as base64 little-endian float32 to cut
bandwidth on large vocabularies; the client asks for that by default.
"""

from __future__ import annotations

import base64
import logging
import threading
import time
from typing import Sequence

import numpy as np
import requests

from .lm import BackendError, ContextOverflowError, LmBackend, TokenDistribution

__all__ = ["RemoteBackend", "ACCEPT_B64"]

logger = logging.getLogger(__name__)

ACCEPT_B64 = "application/x-logprobs-b64"


def _decode_vector(payload: dict) -> np.ndarray:
    if "logprobs_b64" in payload:
        raw = base64.b64decode(payload["logprobs_b64"])
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return np.asarray(payload["logprobs"], dtype=np.float64)


class RemoteBackend(LmBackend):
    """LmBackend speaking the logits-server protocol.

    In-flight requests are bounded by a semaphore; transient failures are
    retried with backoff before surfacing as BackendError.
    """

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        retries: int = 2,
        use_b64: bool = True,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.use_b64 = use_b64
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight)
        info = self._request("GET", "/info")
        self._model_id = str(info["model_id"])
        self._vocab_size = int(info["vocab_size"])
        self._context_limit = (
            int(info["context_limit"]) if info.get("context_limit") else None
        )
        self._delimiter = tuple(int(t) for t in info["delimiter_token_ids"])
        if not self._delimiter:
            raise BackendError("server reported empty delimiter token ids")

    # -- transport -----------------------------------------------------------

    def _request(self, method: str, path: str, body: dict | None = None) -> dict:
        url = self.base_url + path
        headers = {"Accept": ACCEPT_B64} if self.use_b64 else {}
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                with self._gate:
                    resp = self._session.request(
                        method, url, json=body, timeout=self.timeout, headers=headers
                    )
                if resp.status_code == 413:
                    raise ContextOverflowError(resp.json().get("detail", "context overflow"))
                if resp.status_code >= 400:
                    raise BackendError(
                        f"{method} {path} failed with {resp.status_code}: {resp.text[:200]}"
                    )
                return resp.json()
            except ContextOverflowError:
                raise
            except (requests.RequestException, BackendError) as e:
                last = e
                if attempt < self.retries:
                    time.sleep(0.2 * (attempt + 1))
        raise BackendError(f"{method} {path} failed after {self.retries + 1} attempts: {last}")

    # -- backend contract ------------------------------------------------------

    @property
    def vocab_size(self) -> int:
        return self._vocab_size

    @property
    def tokenizer_id(self) -> str:
        return f"remote-{self._model_id}"

    @property
    def delimiter_tokens(self) -> tuple[int, ...]:
        return self._delimiter

    @property
    def context_limit(self) -> int | None:
        return self._context_limit

    def tokenize(self, text: str, in_continuation: bool = False) -> list[int]:
        payload = self._request(
            "POST", "/tokenize", {"text": text, "in_continuation": in_continuation}
        )
        return [int(t) for t in payload["token_ids"]]

    def detokenize(self, token_ids: Sequence[int]) -> str:
        payload = self._request(
            "POST", "/detokenize", {"token_ids": [int(t) for t in token_ids]}
        )
        return str(payload["text"])

    def next_token_logprobs(self, prefix: Sequence[int]) -> TokenDistribution:
        self.check_context(prefix)
        payload = self._request(
            "POST", "/logprobs", {"prefix_ids": [int(t) for t in prefix]}
        )
        dist = TokenDistribution(_decode_vector(payload))
        dist.validate(tol=1e-3)
        return dist

    def next_token_logprobs_restricted(
        self, prefix: Sequence[int], token_ids: Sequence[int]
    ) -> np.ndarray:
        self.check_context(prefix)
        payload = self._request(
            "POST",
            "/logprobs",
            {
                "prefix_ids": [int(t) for t in prefix],
                "restrict_ids": [int(t) for t in token_ids],
            },
        )
        vec = _decode_vector(payload)
        if len(vec) != len(token_ids):
            raise BackendError(
                f"restricted response has {len(vec)} values for {len(token_ids)} ids"
            )
        return vec

    def batch_next_token_logprobs_restricted(
        self, items: Sequence[tuple[Sequence[int], Sequence[int]]]
    ) -> list[np.ndarray]:
        if not items:
            return []
        body = {
            "items": [
                {
                    "prefix_ids": [int(t) for t in prefix],
                    "restrict_ids": [int(t) for t in ids],
                }
                for prefix, ids in items
            ]
        }
        payload = self._request("POST", "/logprobs_batch", body)
        results = payload["results"]
        if len(results) != len(items):
            raise BackendError(
                f"batch response has {len(results)} results for {len(items)} items"
            )
        return [_decode_vector(r) for r in results]
