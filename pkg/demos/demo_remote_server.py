"""Expand against a live logits server instead of the in-process toy backend.

Start the server first (it lives in the sibling server/ package), e.g.:

    python -m logitserver --model /path/to/checkpoint --port 8100

then run this script:

    SEEDEXPAND_SERVER_URL=http://127.0.0.1:8100 python demos/demo_remote_server.py \\
        --vocab us_states_and_countries.txt --seeds "Nevada,Texas,Ohio"

The vocabulary file holds one candidate entity per line.  With a real
pre-trained checkpoint the top of the ranking should be dominated by the
seeds' class; tiny random-weight checkpoints will produce arbitrary but
valid (in-vocabulary) output.
"""

import argparse
import os

from seedexpand import (
    ExpansionConfig,
    PromptConfig,
    RemoteBackend,
    build_trie,
    expand,
    load_vocabulary,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--url", default=os.environ.get("SEEDEXPAND_SERVER_URL",
                                                    "http://127.0.0.1:8100"))
    ap.add_argument("--vocab", required=True)
    ap.add_argument("--seeds", required=True, help="comma-separated seed entities")
    ap.add_argument("--beam", type=int, default=30)
    args = ap.parse_args()

    backend = RemoteBackend(args.url)
    print(f"server: {backend.tokenizer_id}, vocab {backend.vocab_size}, "
          f"context {backend.context_limit}")
    vocab = load_vocabulary(args.vocab, backend)
    trie = build_trie(vocab)
    print(f"loaded {len(vocab)} entities, trie {trie.stats()}")

    seeds = [s.strip() for s in args.seeds.split(",")]
    cfg = ExpansionConfig(iterations=2, permutations=2, growth_k=3,
                          beam=args.beam, target_size=10, rerank_pool=20)
    result = expand(backend, trie, vocab, seeds, cfg, PromptConfig())
    print(f"class name: {result.class_name!r}  ({result.elapsed_s:.1f}s)")
    for i, e in enumerate(result.entries[:15], 1):
        print(f"{i:>3}  {vocab.surface(e.entity_id):<28} C={e.score:.3f}")


if __name__ == "__main__":
    main()
