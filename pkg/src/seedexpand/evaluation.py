"""Dataset loading and MAP@K scoring.

A dataset file is JSON: either a list of query records or an object with a
"queries" list.  Each record holds {id, seeds, gold, class_hint?}; gold may
be ordered or not (it is treated as a set).  Seeds are removed from both the
ranking and the gold set before scoring, since they are given, not found.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

from .expansion import ExpansionConfig, expand
from .lm import LmBackend
from .prompts import PromptConfig
from .vocab import EntityVocabulary, PrefixTrie

__all__ = [
    "DatasetError",
    "Query",
    "QueryResult",
    "EvalReport",
    "average_precision_at_k",
    "load_dataset",
    "evaluate_queries",
]

logger = logging.getLogger(__name__)

DEFAULT_KS = (10, 20, 50)


class DatasetError(ValueError):
    """Dataset file malformed or inconsistent with the vocabulary."""


@dataclass(frozen=True)
class Query:
    id: str
    seeds: tuple[str, ...]
    gold: tuple[str, ...]
    class_hint: str | None = None

    def __post_init__(self):
        if not self.seeds:
            raise ValueError(f"query {self.id!r} has no seeds")
        if not self.gold:
            raise ValueError(f"query {self.id!r} has no gold entities")


def average_precision_at_k(
    ranked: Sequence[Hashable],
    gold: Iterable[Hashable],
    k: int,
    *,
    seeds: Iterable[Hashable] = (),
    denominator: str = "hits",
) -> float:
    """Average precision of `ranked` against `gold`, truncated at rank k.

    denominator="hits" divides by the number of gold items found in the top
    k (1.0 means every retrieved gold item sits above every miss);
    denominator="min_k_gold" divides by min(k, |gold|) so missing items are
    penalized.  Seeds are stripped from both sides first.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if denominator not in ("hits", "min_k_gold"):
        raise ValueError(f"unknown denominator convention {denominator!r}")
    seed_set = set(seeds)
    gold_set = {g for g in gold if g not in seed_set}
    filtered = [r for r in ranked if r not in seed_set]
    if len(set(filtered)) != len(filtered):
        raise ValueError("ranked list contains duplicates")
    hits = 0
    total = 0.0
    for i, item in enumerate(filtered[:k], start=1):
        if item in gold_set:
            hits += 1
            total += hits / i
    denom = hits if denominator == "hits" else min(k, len(gold_set))
    return total / denom if denom else 0.0


def _parse_query(record: dict, index: int) -> Query:
    if not isinstance(record, dict):
        raise DatasetError(f"record {index}: expected an object, got {type(record).__name__}")
    try:
        qid = str(record["id"])
        seeds = tuple(str(s) for s in record["seeds"])
        gold = tuple(str(g) for g in record["gold"])
    except KeyError as e:
        raise DatasetError(f"record {index}: missing field {e.args[0]!r}") from None
    class_hint = record.get("class_hint")
    try:
        return Query(id=qid, seeds=seeds, gold=gold,
                     class_hint=str(class_hint) if class_hint is not None else None)
    except ValueError as e:
        raise DatasetError(f"record {index}: {e}") from None


def load_dataset(
    path: str | Path, vocab: EntityVocabulary | None = None
) -> list[Query]:
    """Parse a dataset file, optionally reconciling it with a vocabulary.

    With a vocabulary, gold entities missing from it are dropped with a
    warning (a query losing all gold is dropped entirely); unresolvable
    seeds are an error, because such a query cannot be posed at all.
    """
    p = Path(path)
    try:
        payload = json.loads(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetError(f"cannot read dataset {p}: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetError(f"{p}: invalid JSON at line {e.lineno}: {e.msg}") from e
    records = payload.get("queries") if isinstance(payload, dict) else payload
    if not isinstance(records, list) or not records:
        raise DatasetError(f"{p}: expected a non-empty list of query records")
    queries = [_parse_query(r, i) for i, r in enumerate(records)]

    if vocab is None:
        return queries
    kept: list[Query] = []
    for q in queries:
        missing_seeds = [s for s in q.seeds if vocab.find(s) is None]
        if missing_seeds:
            raise DatasetError(
                f"query {q.id!r}: seeds not in vocabulary: {missing_seeds}"
            )
        gold = tuple(g for g in q.gold if vocab.find(g) is not None)
        dropped = len(q.gold) - len(gold)
        if dropped:
            logger.warning(
                "query %s: dropped %d gold entities absent from the vocabulary",
                q.id, dropped,
            )
        if not gold:
            logger.warning("query %s: no gold entities left; query dropped", q.id)
            continue
        kept.append(Query(id=q.id, seeds=q.seeds, gold=gold, class_hint=q.class_hint))
    if not kept:
        raise DatasetError(f"{p}: no usable queries after vocabulary reconciliation")
    return kept


@dataclass
class QueryResult:
    query_id: str
    class_name: str
    ap: dict[int, float]
    n_results: int
    elapsed_s: float


@dataclass
class EvalReport:
    ks: tuple[int, ...]
    denominator: str
    per_query: list[QueryResult]
    map_at: dict[int, float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def finalize(self) -> "EvalReport":
        for k in self.ks:
            vals = [r.ap[k] for r in self.per_query]
            self.map_at[k] = sum(vals) / len(vals) if vals else 0.0
        return self

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "denominator": self.denominator,
            "map_at": {str(k): self.map_at[k] for k in self.ks},
            "per_query": [
                {
                    "id": r.query_id,
                    "class_name": r.class_name,
                    "ap": {str(k): r.ap[k] for k in self.ks},
                    "n_results": r.n_results,
                    "elapsed_s": r.elapsed_s,
                }
                for r in self.per_query
            ],
            "config": self.config,
        }

    def render_table(self) -> str:
        lines = ["query" + "".join(f"  AP@{k:<4d}" for k in self.ks) + "  time(s)"]
        for r in self.per_query:
            cells = "".join(f"  {r.ap[k]:6.4f}" for k in self.ks)
            lines.append(f"{r.query_id:<12s}{cells}  {r.elapsed_s:7.2f}")
        cells = "".join(f"  {self.map_at[k]:6.4f}" for k in self.ks)
        lines.append(f"{'MAP':<12s}{cells}")
        return "\n".join(lines)


def evaluate_queries(
    backend: LmBackend,
    trie: PrefixTrie,
    vocab: EntityVocabulary,
    queries: Sequence[Query],
    cfg: ExpansionConfig = ExpansionConfig(),
    prompt_cfg: PromptConfig = PromptConfig(),
    *,
    ks: Sequence[int] = DEFAULT_KS,
    denominator: str = "hits",
    jobs: int = 1,
) -> EvalReport:
    """Expand every query and score the rankings with MAP@K."""
    prompt_cfg.check_no_class_leakage(
        [q.class_hint for q in queries if q.class_hint]
    )

    def run(q: Query) -> QueryResult:
        t0 = time.perf_counter()
        result = expand(backend, trie, vocab, list(q.seeds), cfg, prompt_cfg, q.id)
        ranked = [vocab.surface(e.entity_id) for e in result.entries]
        ap = {
            k: average_precision_at_k(
                ranked, q.gold, k, seeds=q.seeds, denominator=denominator
            )
            for k in ks
        }
        return QueryResult(
            query_id=q.id,
            class_name=result.class_name,
            ap=ap,
            n_results=len(ranked),
            elapsed_s=time.perf_counter() - t0,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_query = list(pool.map(run, queries))
    else:
        per_query = [run(q) for q in queries]
    report = EvalReport(
        ks=tuple(ks),
        denominator=denominator,
        per_query=per_query,
        config={
            "iterations": cfg.iterations,
            "permutations": cfg.permutations,
            "growth_k": cfg.growth_k,
            "beam": cfg.beam,
            "target_size": cfg.target_size,
            "ranking_weight": cfg.ranking_weight,
            "rerank_pool": cfg.rerank_pool,
            "mu": cfg.mu,
            "calibration_mode": cfg.calibration_mode.value,
            "rng_seed": cfg.rng_seed,
        },
    )
    return report.finalize()
