"""Fixtures: a tiny deterministic causal LM checkpoint built locally.

The tokenizer is a byte-level BPE trained here on entity-style text, so
continuation-context tokenization exercises real subword semantics (leading
space pieces); the model is a 2-layer random-weight causal LM seeded for
reproducibility.  No pretrained weights or network access are involved.
"""

from __future__ import annotations

import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

US_STATES = [
    "Alabama", "Alaska", "Arizona", "Arkansas", "California", "Colorado",
    "Connecticut", "Delaware", "Florida", "Georgia", "Hawaii", "Idaho",
    "Illinois", "Indiana", "Iowa", "Kansas", "Kentucky", "Louisiana",
    "Maine", "Maryland", "Massachusetts", "Michigan", "Minnesota",
    "Mississippi", "Missouri", "Montana", "Nebraska", "Nevada",
    "New Hampshire", "New Jersey", "New Mexico", "New York",
    "North Carolina", "North Dakota", "Ohio", "Oklahoma", "Oregon",
    "Pennsylvania", "Rhode Island", "South Carolina", "South Dakota",
    "Tennessee", "Texas", "Utah", "Vermont", "Virginia", "Washington",
    "West Virginia", "Wisconsin", "Wyoming",
]

COUNTRIES = [
    "Albania", "Argentina", "Australia", "Austria", "Belgium", "Bolivia",
    "Brazil", "Bulgaria", "Cambodia", "Canada", "Chile", "China",
    "Colombia", "Croatia", "Denmark", "Ecuador", "Egypt", "Estonia",
    "Finland", "France", "Germany", "Ghana", "Greece", "Hungary",
    "Iceland", "India", "Indonesia", "Ireland", "Italy", "Japan",
    "Kenya", "Latvia", "Lithuania", "Malaysia", "Mexico", "Morocco",
    "Nepal", "Netherlands", "Nigeria", "Norway", "Peru", "Poland",
    "Portugal", "Romania", "Senegal", "Spain", "Sweden", "Thailand",
    "Uruguay", "Vietnam",
]


def _training_lines() -> list[str]:
    lines = []
    for group in (US_STATES, COUNTRIES):
        for i in range(0, len(group) - 3, 3):
            a, b, c = group[i], group[i + 1], group[i + 2]
            lines.append(f"They are places: {a}, {b}, {c},")
            lines.append(f"{a}, {b} and {c} are places.")
            lines.append(f"{a} is one of many places.")
    return lines


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("tiny-causal-lm")
    tok = Tokenizer(models.BPE(unk_token=None))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=384,
        special_tokens=["<|endoftext|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        show_progress=False,
    )
    tok.train_from_iterator(_training_lines(), trainer)
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        eos_token="<|endoftext|>",
        bos_token="<|endoftext|>",
        unk_token=None,
    )
    fast.save_pretrained(out)

    torch.manual_seed(1234)
    config = GPT2Config(
        vocab_size=fast.vocab_size,
        n_positions=128,
        n_embd=64,
        n_layer=2,
        n_head=2,
        bos_token_id=fast.bos_token_id,
        eos_token_id=fast.eos_token_id,
    )
    model = GPT2LMHeadModel(config)
    model.save_pretrained(out)
    return str(out)
