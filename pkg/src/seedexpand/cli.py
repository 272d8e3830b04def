"""Command-line surface.

Subcommands: train-toy, build-trie, expand, evaluate, bench.  Results are
machine-readable JSON on stdout (stable byte-for-byte for a fixed rng seed
and backend); human tables appear under --pretty; timing and diagnostics go
to stderr.

Exit codes: 0 success, 1 unexpected failure, 2 unreadable input file,
3 unresolvable seed entities, 4 dataset errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bench import run_benchmark
from .config import ConfigError, load_config_file, make_expansion_config, make_prompt_config
from .evaluation import DatasetError, evaluate_queries, load_dataset
from .expansion import expand
from .lm import BackendError, LmBackend
from .remote import RemoteBackend
from .toylm import ToyLm, train_toy_lm
from .vocab import (
    VocabularyError,
    build_trie,
    load_trie_cache,
    load_vocabulary,
    save_trie_cache,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_SEEDS = 3
EXIT_DATASET = 4

SERVER_URL_ENV = "SEEDEXPAND_SERVER_URL"
CACHE_DIR_ENV = "SEEDEXPAND_CACHE_DIR"

logger = logging.getLogger(__name__)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAILURE):
        super().__init__(message)
        self.code = code


def _make_backend(spec: str | None) -> LmBackend:
    if spec is None:
        url = os.environ.get(SERVER_URL_ENV)
        if not url:
            raise CliError(
                f"no backend given: pass --backend toy:MODEL or remote:URL, "
                f"or set {SERVER_URL_ENV}", EXIT_INPUT,
            )
        spec = f"remote:{url}"
    kind, _, arg = spec.partition(":")
    if kind == "toy":
        if not arg:
            raise CliError("--backend toy:PATH needs a model file path", EXIT_INPUT)
        if not Path(arg).exists():
            raise CliError(f"toy model file not found: {arg}", EXIT_INPUT)
        return ToyLm.load(arg)
    if kind == "remote":
        url = arg or os.environ.get(SERVER_URL_ENV, "")
        if not url:
            raise CliError(
                f"--backend remote needs a URL or {SERVER_URL_ENV}", EXIT_INPUT
            )
        try:
            return RemoteBackend(url)
        except BackendError as e:
            raise CliError(f"cannot reach logits server at {url}: {e}", EXIT_INPUT)
    raise CliError(f"unknown backend spec {spec!r} (use toy:PATH or remote:URL)", EXIT_INPUT)


def _load_vocab(args, backend: LmBackend):
    if getattr(args, "trie_cache", None):
        cache = Path(args.trie_cache)
        if not cache.exists():
            raise CliError(f"trie cache not found: {cache}", EXIT_INPUT)
        vocab = load_trie_cache(cache, backend)
    elif getattr(args, "vocab", None):
        path = Path(args.vocab)
        if not path.exists():
            raise CliError(f"vocabulary file not found: {path}", EXIT_INPUT)
        vocab = load_vocabulary(path, backend)
    else:
        raise CliError("pass --vocab FILE or --trie-cache FILE", EXIT_INPUT)
    return vocab


def _overrides(args) -> dict:
    return {
        "beam": args.beam,
        "mu": args.mu,
        "ranking_weight": getattr(args, "lambda_", None),
        "iterations": args.iterations,
        "permutations": args.permutations,
        "growth_k": args.growth_k,
        "target_size": args.target_size,
        "rerank_pool": args.rerank_pool,
        "rng_seed": args.rng_seed,
        "calibration_mode": args.calibration_mode,
    }


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def cmd_train_toy(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.exists():
        raise CliError(f"corpus file not found: {corpus}", EXIT_INPUT)
    model = train_toy_lm(
        corpus.read_text(encoding="utf-8"), order=args.order, smoothing=args.smoothing
    )
    model.save(args.out)
    print(
        f"trained toy LM: order={args.order} smoothing={args.smoothing} "
        f"tokens={model.vocab_size} -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_build_trie(args) -> int:
    backend = _make_backend(args.backend)
    path = Path(args.vocab)
    if not path.exists():
        raise CliError(f"vocabulary file not found: {path}", EXIT_INPUT)
    vocab = load_vocabulary(path, backend)
    trie = build_trie(vocab)
    out = args.out
    if out is None:
        cache_dir = Path(os.environ.get(CACHE_DIR_ENV, "."))
        out = cache_dir / (path.stem + ".trie")
    save_trie_cache(out, vocab)
    stats = trie.stats()
    mean_tokens = sum(len(r.tokens) for r in vocab) / len(vocab)
    print(
        f"trie cached to {out}: entities={stats['entities']} nodes={stats['nodes']} "
        f"max_depth={stats['max_depth']} mean_tokens_per_entity={mean_tokens:.2f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_expand(args) -> int:
    backend = _make_backend(args.backend)
    file_cfg = load_config_file(args.config)
    cfg = make_expansion_config(file_cfg, _overrides(args))
    prompt_cfg = make_prompt_config(file_cfg)
    vocab = _load_vocab(args, backend)
    trie = build_trie(vocab)
    if args.seeds:
        seeds = [s.strip() for s in args.seeds.split(",") if s.strip()]
    elif args.seeds_file:
        p = Path(args.seeds_file)
        if not p.exists():
            raise CliError(f"seeds file not found: {p}", EXIT_INPUT)
        seeds = [line.strip() for line in p.read_text(encoding="utf-8").splitlines()
                 if line.strip()]
    else:
        raise CliError("pass --seeds or --seeds-file", EXIT_INPUT)
    try:
        result = expand(backend, trie, vocab, seeds, cfg, prompt_cfg,
                        query_id=args.query_id)
    except VocabularyError as e:
        raise CliError(str(e), EXIT_SEEDS)
    payload = {
        "query_id": result.query_id,
        "class_name": result.class_name,
        "seeds": seeds,
        "config": {
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
        "entries": [
            {
                "surface": vocab.surface(e.entity_id),
                "m1": e.m1,
                "m2": e.m2,
                "m3": e.m3,
                "score": e.score,
            }
            for e in result.entries
        ],
    }
    if args.pretty:
        lines = [f"class name: {result.class_name}"]
        lines.append(f"{'rank':>4s}  {'entity':<30s} {'M1':>8s} {'M2':>8s} {'M3':>8s} {'C':>8s}")
        for i, e in enumerate(result.entries, 1):
            lines.append(
                f"{i:>4d}  {vocab.surface(e.entity_id):<30s} "
                f"{e.m1:>8.4f} {e.m2:>8.4f} {e.m3:>8.4f} {e.score:>8.4f}"
            )
        _emit("\n".join(lines), args.output)
    else:
        _emit(json.dumps(payload, sort_keys=True, indent=2), args.output)
    print(f"expanded {len(result.entries)} entities in {result.elapsed_s:.2f}s",
          file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    backend = _make_backend(args.backend)
    file_cfg = load_config_file(args.config)
    cfg = make_expansion_config(file_cfg, _overrides(args))
    prompt_cfg = make_prompt_config(file_cfg)
    vocab = _load_vocab(args, backend)
    trie = build_trie(vocab)
    try:
        queries = load_dataset(args.dataset, vocab)
    except DatasetError as e:
        raise CliError(str(e), EXIT_DATASET)
    t0 = time.perf_counter()
    report = evaluate_queries(
        backend, trie, vocab, queries, cfg, prompt_cfg,
        ks=tuple(args.ks), denominator=args.ap_denominator, jobs=args.jobs,
    )
    if args.pretty:
        _emit(report.render_table(), args.output)
    else:
        _emit(json.dumps(report.to_dict(), sort_keys=True, indent=2), args.output)
    print(f"evaluated {len(queries)} queries in {time.perf_counter() - t0:.2f}s",
          file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    backend = _make_backend(args.backend)
    file_cfg = load_config_file(args.config)
    cfg = make_expansion_config(file_cfg, _overrides(args))
    prompt_cfg = make_prompt_config(file_cfg)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes:
        raise CliError("pass --sizes as a comma-separated list", EXIT_INPUT)
    base = Path(args.base_vocab)
    if not base.exists():
        raise CliError(f"base vocabulary file not found: {base}", EXIT_INPUT)
    base_surfaces = [
        line.strip() for line in base.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    seeds_groups = []
    for chunk in args.query_seeds:
        seeds_groups.append([s.strip() for s in chunk.split(",") if s.strip()])
    report = run_benchmark(backend, sizes, cfg, seeds_groups, base_surfaces, prompt_cfg)
    if args.data_out:
        report.save(args.data_out)
    _emit(report.render_table(), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seedexpand",
        description="Generative entity set expansion over a closed vocabulary.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress details to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_backend(p):
        p.add_argument("--backend", help="toy:MODEL.json or remote:URL "
                       f"(default: remote using ${SERVER_URL_ENV})")

    def add_run_opts(p):
        p.add_argument("--config", help="engine config file (JSON)")
        p.add_argument("--beam", type=int)
        p.add_argument("--mu", type=float)
        p.add_argument("--lambda", dest="lambda_", type=float,
                       help="ranking weight for M2+M3")
        p.add_argument("--iterations", type=int)
        p.add_argument("--permutations", type=int)
        p.add_argument("--growth-k", dest="growth_k", type=int)
        p.add_argument("--target-size", dest="target_size", type=int)
        p.add_argument("--rerank-pool", dest="rerank_pool", type=int)
        p.add_argument("--rng-seed", dest="rng_seed", type=int)
        p.add_argument("--calibration-mode", dest="calibration_mode",
                       choices=["per_step", "first_token"])
        p.add_argument("--output", help="write the result here instead of stdout")
        p.add_argument("--pretty", action="store_true", help="human-readable table")

    p = sub.add_parser("train-toy", help="train the deterministic n-gram backend")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", type=float, default=0.1)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("build-trie", help="tokenize a vocabulary and cache its trie")
    add_backend(p)
    p.add_argument("--vocab", required=True, help="one entity per line, UTF-8")
    p.add_argument("--out", help=f"cache path (default: ${CACHE_DIR_ENV}/<vocab>.trie)")
    p.set_defaults(func=cmd_build_trie)

    p = sub.add_parser("expand", help="expand seed entities into a ranked list")
    add_backend(p)
    p.add_argument("--vocab")
    p.add_argument("--trie-cache", dest="trie_cache")
    p.add_argument("--seeds", help='comma-separated, e.g. "Nevada,Texas,Ohio"')
    p.add_argument("--seeds-file", dest="seeds_file", help="one seed per line")
    p.add_argument("--query-id", dest="query_id", default="")
    add_run_opts(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("evaluate", help="run a query dataset and report MAP@K")
    add_backend(p)
    p.add_argument("--vocab")
    p.add_argument("--trie-cache", dest="trie_cache")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ks", type=int, nargs="+", default=[10, 20, 50])
    p.add_argument("--ap-denominator", dest="ap_denominator",
                   choices=["hits", "min_k_gold"], default="hits")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel queries (timing stays per-query)")
    add_run_opts(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time expansion across vocabulary sizes")
    add_backend(p)
    p.add_argument("--sizes", required=True, help='e.g. "1000,10000,100000"')
    p.add_argument("--base-vocab", dest="base_vocab", required=True,
                   help="surfaces that must exist at every size")
    p.add_argument("--query-seeds", dest="query_seeds", action="append", required=True,
                   help='repeatable; comma-separated seeds for one query')
    p.add_argument("--data-out", dest="data_out", help="plot-ready JSON data file")
    add_run_opts(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (VocabularyError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except DatasetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATASET
    except BackendError as e:
        print(f"backend error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
