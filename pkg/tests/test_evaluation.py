"""MAP@K metric, dataset loading, and the evaluation harness."""

import json
import logging
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seedexpand.evaluation import (
    DatasetError,
    Query,
    average_precision_at_k,
    evaluate_queries,
    load_dataset,
)
from seedexpand.expansion import ExpansionConfig

from conftest import reference_average_precision


class TestAveragePrecision:
    def test_gold_prefix_is_perfect(self):
        gold = [f"g{i}" for i in range(30)]
        for k in (10, 20):
            assert average_precision_at_k(gold, gold, k) == 1.0
            assert average_precision_at_k(gold, gold, k, denominator="min_k_gold") == 1.0

    def test_zero_hits_is_zero(self):
        assert average_precision_at_k(["x", "y"], {"g"}, 10) == 0.0
        assert average_precision_at_k(["x", "y"], {"g"}, 10, denominator="min_k_gold") == 0.0

    def test_documented_hand_case(self):
        # ranked [g, x, g2], K=3: (1/1 + 2/3) / 2 under the hit denominator
        got = average_precision_at_k(["g", "x", "g2"], {"g", "g2", "g3"}, 3)
        assert got == pytest.approx(0.83333333, abs=1e-6)

    def test_min_k_gold_denominator_penalizes_misses(self):
        got = average_precision_at_k(
            ["g", "x", "y"], {"g", "g2", "g3"}, 3, denominator="min_k_gold"
        )
        assert got == pytest.approx(1.0 / 3.0)

    def test_seeds_removed_from_both_sides(self):
        ranked = ["s", "g", "x"]
        gold = {"s", "g"}
        assert average_precision_at_k(ranked, gold, 2, seeds={"s"}) == 1.0

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicates"):
            average_precision_at_k(["a", "a"], {"a"}, 5)

    def test_invalid_k(self):
        with pytest.raises(ValueError, match="k"):
            average_precision_at_k(["a"], {"a"}, 0)

    def test_unknown_convention(self):
        with pytest.raises(ValueError, match="denominator"):
            average_precision_at_k(["a"], {"a"}, 1, denominator="weird")

    def test_matches_reference_on_random_cases(self):
        rng = random.Random(1234)
        items = [f"e{i}" for i in range(40)]
        for _ in range(1000):
            ranked = rng.sample(items, rng.randint(0, 30))
            gold = set(rng.sample(items, rng.randint(1, 20)))
            seeds = set(rng.sample(items, rng.randint(0, 3)))
            k = rng.choice((1, 3, 10, 20, 50))
            for conv in ("hits", "min_k_gold"):
                got = average_precision_at_k(
                    ranked, gold, k, seeds=seeds, denominator=conv
                )
                want = reference_average_precision(ranked, gold, k, seeds, conv)
                assert got == want

    @settings(max_examples=80, deadline=None)
    @given(st.data())
    def test_promoting_a_gold_item_never_hurts(self, data):
        items = [f"e{i}" for i in range(12)]
        ranked = data.draw(st.permutations(items))
        gold = set(data.draw(st.sets(st.sampled_from(items), min_size=1, max_size=6)))
        k = data.draw(st.integers(2, 12))
        idx = [i for i, r in enumerate(ranked) if r in gold and i > 0]
        if not idx:
            return
        i = data.draw(st.sampled_from(idx))
        promoted = list(ranked)
        promoted[i - 1], promoted[i] = promoted[i], promoted[i - 1]
        before = average_precision_at_k(ranked, gold, k, denominator="min_k_gold")
        after = average_precision_at_k(promoted, gold, k, denominator="min_k_gold")
        assert after >= before - 1e-12


class TestLoadDataset:
    def _write(self, tmp_path, payload):
        p = tmp_path / "d.json"
        p.write_text(json.dumps(payload), encoding="utf-8")
        return p

    def test_wiki_style_three_seeds(self, tmp_path):
        p = self._write(
            tmp_path,
            {"queries": [{"id": "q1", "seeds": ["a", "b", "c"],
                          "gold": ["a", "b", "c", "d"], "class_hint": "letters"}]},
        )
        (q,) = load_dataset(p)
        assert len(q.seeds) == 3 and q.class_hint == "letters"

    def test_conll_style_ten_seeds(self, tmp_path):
        seeds = [f"s{i}" for i in range(10)]
        p = self._write(tmp_path, [{"id": "q", "seeds": seeds, "gold": seeds + ["x"]}])
        (q,) = load_dataset(p)
        assert len(q.seeds) == 10

    def test_empty_gold_rejected(self, tmp_path):
        p = self._write(tmp_path, [{"id": "q", "seeds": ["a"], "gold": []}])
        with pytest.raises(DatasetError, match="gold"):
            load_dataset(p)

    def test_missing_field_named(self, tmp_path):
        p = self._write(tmp_path, [{"id": "q", "seeds": ["a"]}])
        with pytest.raises(DatasetError, match="gold"):
            load_dataset(p)

    def test_invalid_json_has_line(self, tmp_path):
        p = tmp_path / "d.json"
        p.write_text('{"queries": [}', encoding="utf-8")
        with pytest.raises(DatasetError, match="line"):
            load_dataset(p)

    def test_unknown_gold_dropped_with_warning(self, tmp_path, caplog, planted_world):
        vocab = planted_world["vocab"]
        s = [vocab.surface(i) for i in range(3)]
        p = self._write(
            tmp_path,
            [{"id": "q", "seeds": s, "gold": s + ["not-a-real-entity"]}],
        )
        with caplog.at_level(logging.WARNING):
            (q,) = load_dataset(p, vocab)
        assert "not-a-real-entity" not in q.gold
        assert any("dropped" in r.message for r in caplog.records)

    def test_unresolvable_seed_is_error(self, tmp_path, planted_world):
        vocab = planted_world["vocab"]
        p = self._write(
            tmp_path,
            [{"id": "q", "seeds": ["ghost"], "gold": [vocab.surface(0)]}],
        )
        with pytest.raises(DatasetError, match="ghost"):
            load_dataset(p, vocab)


class TestEvaluateQueries:
    def test_planted_dataset_perfect_map(self, planted_world):
        vocab, trie = planted_world["vocab"], planted_world["trie"]
        backend, pcfg = planted_world["backend"], planted_world["prompt_cfg"]
        queries = []
        for cls in planted_world["classes"][:2]:
            singles = [m for m in cls.members if " " not in m]
            queries.append(
                Query(id=cls.name, seeds=tuple(singles[:3]), gold=tuple(singles),
                      class_hint=cls.name)
            )
        cfg = ExpansionConfig(
            iterations=2, permutations=2, growth_k=2, beam=8,
            target_size=5, rerank_pool=10, rng_seed=0,
        )
        report = evaluate_queries(
            backend, trie, vocab, queries, cfg, pcfg, ks=(5,), jobs=1
        )
        assert set(report.map_at) == {5}
        assert len(report.per_query) == len(queries)
        for r in report.per_query:
            assert 0.0 <= r.ap[5] <= 1.0
            assert r.elapsed_s > 0

    def test_parallel_matches_sequential(self, planted_world):
        vocab, trie = planted_world["vocab"], planted_world["trie"]
        backend, pcfg = planted_world["backend"], planted_world["prompt_cfg"]
        cls = planted_world["classes"][0]
        queries = [
            Query(id=f"q{i}", seeds=tuple(cls.members[i:i + 3]),
                  gold=tuple(cls.members))
            for i in range(3)
        ]
        cfg = ExpansionConfig(
            iterations=1, permutations=1, growth_k=0, beam=6,
            target_size=3, rerank_pool=6, rng_seed=1,
        )
        seq = evaluate_queries(backend, trie, vocab, queries, cfg, pcfg, ks=(5,), jobs=1)
        par = evaluate_queries(backend, trie, vocab, queries, cfg, pcfg, ks=(5,), jobs=3)
        assert [r.query_id for r in seq.per_query] == [r.query_id for r in par.per_query]
        assert [r.ap for r in seq.per_query] == [r.ap for r in par.per_query]

    def test_leakage_guard_fires(self, planted_world):
        from seedexpand.prompts import PromptConfig

        vocab, trie = planted_world["vocab"], planted_world["trie"]
        backend = planted_world["backend"]
        cls = planted_world["classes"][0]
        queries = [Query(id="q", seeds=tuple(cls.members[:3]),
                         gold=tuple(cls.members), class_hint="Apple products")]
        with pytest.raises(ValueError, match="Apple products"):
            evaluate_queries(
                backend, trie, vocab, queries, ExpansionConfig(), PromptConfig()
            )
