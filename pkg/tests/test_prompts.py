"""Prompt constructors: exact template strings and shape invariants."""

import pytest

from seedexpand.prompts import (
    DEFAULT_DEMONSTRATIONS,
    PromptConfig,
    class_name_prompt,
    generation_prompt,
    meaningless_prompt,
    ranking_templates,
)
from seedexpand.toylm import train_toy_lm


class TestClassNamePrompt:
    def test_worked_example(self):
        cfg = PromptConfig()
        text = class_name_prompt(["Nevada", "Texas", "Ohio"], cfg)
        assert text == (
            "IPad, Iphone and MacBook Pro are Apple products. "
            "Juliet, Mars and Moon are Natural satellites. "
            "Nevada, Texas and Ohio are"
        )

    def test_two_seed_suffix(self):
        cfg = PromptConfig(demonstrations=())
        assert class_name_prompt(["A", "B"], cfg) == "A and B are"

    def test_empty_demonstrations(self):
        cfg = PromptConfig(demonstrations=())
        assert class_name_prompt(["X", "Y", "Z"], cfg) == "X, Y and Z are"

    def test_no_trailing_space(self):
        text = class_name_prompt(["A", "B"], PromptConfig())
        assert not text.endswith(" ")

    def test_requires_two_seeds(self):
        with pytest.raises(ValueError, match="2 seeds"):
            class_name_prompt(["only"], PromptConfig())


class TestGenerationPrompt:
    def test_worked_example(self):
        text = generation_prompt(["Nevada", "Texas", "Ohio"], "US states")
        assert text == "They are US states: Nevada, Texas, Ohio,"

    def test_single_seed(self):
        assert generation_prompt(["X"], "things") == "They are things: X,"

    def test_ends_with_delimiter(self):
        text = generation_prompt(["A", "B"], "c")
        assert text.endswith(",") and not text.endswith(", ")

    def test_permutation_same_mentions(self):
        def mentions(text):
            body = text.removeprefix("They are c: ").removesuffix(",")
            return sorted(body.split(", "))

        a = generation_prompt(["X", "Y", "Z"], "c")
        b = generation_prompt(["Z", "X", "Y"], "c")
        assert a != b
        assert mentions(a) == mentions(b) == ["X", "Y", "Z"]

    def test_empty_class_requires_fallback(self):
        with pytest.raises(ValueError, match="classless"):
            generation_prompt(["X"], "  ")
        cfg = PromptConfig(allow_classless_fallback=True)
        assert generation_prompt(["X"], "", cfg) == "They are: X,"

    def test_no_seeds(self):
        with pytest.raises(ValueError, match="seed"):
            generation_prompt([], "c")


class TestMeaninglessPrompt:
    def test_three_blank_template(self):
        assert meaningless_prompt(3) == "They are  :  ,  ,  ,"

    def test_single_blank(self):
        assert meaningless_prompt(1) == "They are  :  ,"

    def test_mirrors_generation_shape(self):
        # the null prompt must have the same number of delimiter tokens as
        # the real prompt it calibrates
        lm = train_toy_lm("They are colors : red , blue , green , .")
        real = lm.tokenize(generation_prompt(["red", "blue", "green"], "colors"))
        null = lm.tokenize(meaningless_prompt(3))
        comma = lm.delimiter_tokens[0]
        assert real.count(comma) == null.count(comma)
        assert real[-1] == comma and null[-1] == comma

    def test_custom_blank(self):
        cfg = PromptConfig(blank_text="_")
        assert meaningless_prompt(2, cfg) == "They are _: _, _,"

    def test_requires_positive_slots(self):
        with pytest.raises(ValueError, match="n_seeds"):
            meaningless_prompt(0)


class TestRankingTemplates:
    def test_shapes(self):
        pair, isa = ranking_templates("Florida", "Nevada", "US states")
        assert pair == "Florida, Nevada"
        assert isa == "Florida is one of US states"

    def test_identical_candidate_and_seed(self):
        pair, _ = ranking_templates("X", "X", "c")
        assert pair == "X, X"

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ranking_templates("", "s", "c")
        with pytest.raises(ValueError):
            ranking_templates("e", "s", "")


class TestConfig:
    def test_purity(self):
        cfg = PromptConfig()
        seeds = ["A", "B", "C"]
        assert class_name_prompt(seeds, cfg) == class_name_prompt(seeds, cfg)
        assert meaningless_prompt(4, cfg) == meaningless_prompt(4, cfg)

    def test_default_demonstrations_are_stock_pair(self):
        assert DEFAULT_DEMONSTRATIONS[0][1] == "Apple products"
        assert DEFAULT_DEMONSTRATIONS[1][1] == "Natural satellites"

    def test_leakage_check(self):
        cfg = PromptConfig()
        cfg.check_no_class_leakage(["Countries", "US states"])
        with pytest.raises(ValueError, match="Apple products"):
            cfg.check_no_class_leakage(["apple PRODUCTS"])
