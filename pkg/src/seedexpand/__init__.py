"""Generative entity set expansion over a closed candidate vocabulary.

Given a handful of seed entities, the engine names their semantic class,
decodes same-class entities with a trie-constrained calibrated beam search,
grows the seed set iteratively, and fuses decode ranks with two
reverse-template rankings into a final ordering.  Expansion cost depends on
prompt, class-name and entity lengths, not on vocabulary or corpus size.
"""

from .bench import BenchReport, run_benchmark, scaled_surfaces
from .decoder import (
    BeamHypothesis,
    CalibrationMode,
    CalibrationState,
    ClassNameError,
    DecodedEntity,
    DecodeResult,
    calibrate_step,
    compute_prior,
    constrained_beam_search,
    generate_class_name,
)
from .evaluation import (
    DatasetError,
    EvalReport,
    Query,
    average_precision_at_k,
    evaluate_queries,
    load_dataset,
)
from .expansion import (
    ExpansionConfig,
    ExpansionState,
    RankedEntry,
    RankedExpansion,
    expand,
    generative_rank,
    template_logprob,
    update_m1,
)
from .lm import BackendError, ContextOverflowError, LmBackend, TokenDistribution
from .prompts import (
    PromptConfig,
    class_name_prompt,
    generation_prompt,
    meaningless_prompt,
    ranking_templates,
)
from .remote import RemoteBackend
from .synth import ClassSpec, generate_synthetic_corpus, planted_classes
from .toylm import ToyLm, train_toy_lm
from .vocab import (
    EntityRecord,
    EntityVocabulary,
    PrefixTrie,
    TrieCacheError,
    VocabularyError,
    allowed_next,
    build_trie,
    load_trie_cache,
    load_vocabulary,
    save_trie_cache,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BeamHypothesis",
    "BenchReport",
    "CalibrationMode",
    "CalibrationState",
    "ClassNameError",
    "ClassSpec",
    "ContextOverflowError",
    "DatasetError",
    "DecodeResult",
    "DecodedEntity",
    "EntityRecord",
    "EntityVocabulary",
    "EvalReport",
    "ExpansionConfig",
    "ExpansionState",
    "LmBackend",
    "PrefixTrie",
    "PromptConfig",
    "Query",
    "RankedEntry",
    "RankedExpansion",
    "RemoteBackend",
    "ToyLm",
    "TokenDistribution",
    "TrieCacheError",
    "VocabularyError",
    "allowed_next",
    "average_precision_at_k",
    "build_trie",
    "calibrate_step",
    "class_name_prompt",
    "compute_prior",
    "constrained_beam_search",
    "evaluate_queries",
    "expand",
    "generate_class_name",
    "generate_synthetic_corpus",
    "generation_prompt",
    "generative_rank",
    "load_dataset",
    "load_trie_cache",
    "load_vocabulary",
    "meaningless_prompt",
    "planted_classes",
    "ranking_templates",
    "run_benchmark",
    "save_trie_cache",
    "scaled_surfaces",
    "template_logprob",
    "train_toy_lm",
    "update_m1",
]
