"""Timing benchmark: per-query expansion time across entity-vocabulary sizes.

Decoding work per step is bounded by the beam width and the backend's token
space, not by how many entities the trie holds, so per-query time should stay
flat as the vocabulary grows.  The harness measures exactly that: the same
backend, config and query batch against vocabularies scaled by padding with
multi-token distractor surfaces built from the backend's own token space.
No retrieval baseline is run; the flatness of this engine is what is checked.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .expansion import ExpansionConfig, expand
from .lm import LmBackend
from .prompts import PromptConfig
from .vocab import EntityRecord, EntityVocabulary, build_trie

__all__ = ["BenchRow", "BenchReport", "scaled_surfaces", "run_benchmark"]


@dataclass
class BenchRow:
    vocab_size: int
    trie_nodes: int
    build_s: float
    queries: int
    total_s: float
    per_query_s: float
    per_query_best_s: float  # mean of per-query minima across repeats


@dataclass
class BenchReport:
    rows: list[BenchRow]
    config: dict

    def to_dict(self) -> dict:
        return {
            "rows": [vars(r) for r in self.rows],
            "config": self.config,
            "note": (
                "per-query decode time should be flat in vocab size; "
                "no retrieval baseline is included"
            ),
        }

    def render_table(self) -> str:
        lines = [f"{'|V|':>10s} {'nodes':>10s} {'build(s)':>9s} "
                 f"{'queries':>8s} {'total(s)':>9s} {'per-query(s)':>13s} "
                 f"{'best(s)':>9s}"]
        for r in self.rows:
            lines.append(
                f"{r.vocab_size:>10d} {r.trie_nodes:>10d} {r.build_s:>9.3f} "
                f"{r.queries:>8d} {r.total_s:>9.3f} {r.per_query_s:>13.4f} "
                f"{r.per_query_best_s:>9.4f}"
            )
        return "\n".join(lines)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )


def _distractor_words(backend: LmBackend) -> list[str]:
    words = []
    for tid in range(backend.vocab_size):
        w = backend.detokenize([tid]).strip()
        if w and w.isalpha():
            words.append(w)
    return sorted(set(words))


def scaled_surfaces(
    backend: LmBackend,
    base_surfaces: Sequence[str],
    size: int,
    *,
    arity: int = 3,
    word_pool: int = 52,
    seed: int = 0,
) -> list[str]:
    """`base_surfaces` padded to `size` with sampled multi-token distractors.

    Distractors are `arity`-token joins sampled (seeded, without repeats)
    from a fixed pool of the backend's word tokens.  Arity and pool are held
    constant across sizes so that entity length and trie fan-out profiles do
    not vary with the vocabulary size being measured; only the candidate
    count does.
    """
    if size < len(base_surfaces):
        raise ValueError(
            f"size {size} smaller than the {len(base_surfaces)} base surfaces"
        )
    surfaces = list(dict.fromkeys(base_surfaces))
    taken = set(surfaces)
    words = _distractor_words(backend)[:word_pool]
    if not words:
        raise ValueError("backend token space has no usable words for distractors")
    capacity = len(words) ** arity
    needed = size - len(surfaces)
    if needed > capacity * 0.9:
        raise ValueError(
            f"need {needed} distractors but arity {arity} over {len(words)} words "
            f"caps at {capacity}; raise arity or word_pool"
        )
    rng = random.Random(seed)
    seen_combos: set[tuple[int, ...]] = set()
    while len(surfaces) < size:
        combo = tuple(rng.randrange(len(words)) for _ in range(arity))
        if combo in seen_combos:
            continue
        seen_combos.add(combo)
        s = " ".join(words[i] for i in combo)
        if s not in taken:
            taken.add(s)
            surfaces.append(s)
    return surfaces


def _vocabulary_from_surfaces(
    surfaces: Sequence[str], backend: LmBackend
) -> EntityVocabulary:
    records = [
        EntityRecord(id=i, surface=s, tokens=tuple(backend.tokenize(s, True)))
        for i, s in enumerate(surfaces)
    ]
    return EntityVocabulary(records, backend.tokenizer_id)


def run_benchmark(
    backend: LmBackend,
    vocab_sizes: Sequence[int],
    cfg: ExpansionConfig,
    query_seeds: Sequence[Sequence[str]],
    base_surfaces: Sequence[str],
    prompt_cfg: PromptConfig = PromptConfig(),
    repeats: int = 3,
) -> BenchReport:
    """Time the fixed query batch at each vocabulary size, sequentially.

    The first query runs once untimed per size (allocator warmup); each
    query is then timed individually across `repeats` passes.  per_query_s
    averages every timing (the protocol for comparing methods across runs);
    per_query_best_s averages each query's minimum, which estimates the
    interference-free cost on a loaded machine.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rows = []
    for size in vocab_sizes:
        surfaces = scaled_surfaces(backend, base_surfaces, size)
        t0 = time.perf_counter()
        vocab = _vocabulary_from_surfaces(surfaces, backend)
        trie = build_trie(vocab)
        build_s = time.perf_counter() - t0
        expand(backend, trie, vocab, list(query_seeds[0]), cfg, prompt_cfg,
               query_id=f"bench-{size}-warmup")
        times: list[list[float]] = [[] for _ in query_seeds]
        for _ in range(repeats):
            for qi, seeds in enumerate(query_seeds):
                t0 = time.perf_counter()
                expand(backend, trie, vocab, list(seeds), cfg, prompt_cfg,
                       query_id=f"bench-{size}-{qi}")
                times[qi].append(time.perf_counter() - t0)
        n = max(1, len(query_seeds))
        total_s = sum(sum(t) for t in times) / repeats
        rows.append(
            BenchRow(
                vocab_size=len(vocab),
                trie_nodes=len(trie),
                build_s=build_s,
                queries=len(query_seeds),
                total_s=total_s,
                per_query_s=total_s / n,
                per_query_best_s=sum(min(t) for t in times) / n,
            )
        )
    return BenchReport(
        rows=rows,
        config={
            "iterations": cfg.iterations,
            "permutations": cfg.permutations,
            "growth_k": cfg.growth_k,
            "beam": cfg.beam,
            "mu": cfg.mu,
            "calibration_mode": cfg.calibration_mode.value,
            "rng_seed": cfg.rng_seed,
            "repeats": repeats,
        },
    )
