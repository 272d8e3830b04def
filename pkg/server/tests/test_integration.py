"""End-to-end: the expansion engine driving a live server over HTTP.

The tiny random-weight checkpoint cannot know anything about the world, so
these tests assert protocol-level properties: the full pipeline runs, every
result is a vocabulary entity, and repeated runs are identical.
"""

import socket
import threading
import time

import pytest
import requests
import uvicorn

from logitserver import ServerConfig, create_app

from seedexpand import (
    ExpansionConfig,
    PromptConfig,
    RemoteBackend,
    build_trie,
    expand,
    load_vocabulary,
)

from conftest import COUNTRIES, US_STATES


@pytest.fixture(scope="module")
def live_server(tiny_checkpoint):
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    app = create_app(ServerConfig(model_id=tiny_checkpoint, context_limit=120))
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if requests.get(f"{url}/info", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.1)
    else:
        raise RuntimeError("server did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture(scope="module")
def world(live_server, tmp_path_factory):
    backend = RemoteBackend(live_server)
    vocab_file = tmp_path_factory.mktemp("vocab") / "entities.txt"
    states = ["Nevada", "Texas", "Ohio"] + [
        s for s in US_STATES if s not in ("Nevada", "Texas", "Ohio")
    ][:12]
    vocab_file.write_text(
        "\n".join(states + COUNTRIES[:15]), encoding="utf-8"
    )
    vocab = load_vocabulary(vocab_file, backend)
    trie = build_trie(vocab)
    return backend, vocab, trie


CFG = ExpansionConfig(
    iterations=1, permutations=2, growth_k=2, beam=5,
    target_size=5, rerank_pool=10, rng_seed=0, mu=0.5,
)


class TestLivePipeline:
    def test_expansion_returns_vocabulary_entities(self, world):
        backend, vocab, trie = world
        result = expand(
            backend, trie, vocab, ["Nevada", "Texas", "Ohio"], CFG, PromptConfig()
        )
        assert result.entries
        seeds = {"Nevada", "Texas", "Ohio"}
        for e in result.entries:
            surface = vocab.surface(e.entity_id)
            assert vocab.find(surface) is not None
            assert surface not in seeds
        assert result.class_name

    def test_expansion_is_deterministic_over_http(self, world):
        backend, vocab, trie = world
        runs = [
            expand(backend, trie, vocab, ["Nevada", "Texas", "Ohio"],
                   CFG, PromptConfig())
            for _ in range(2)
        ]
        assert runs[0].class_name == runs[1].class_name
        assert [e.entity_id for e in runs[0].entries] == [
            e.entity_id for e in runs[1].entries
        ]

    def test_vocabulary_tokens_round_trip_through_server(self, world):
        backend, vocab, _ = world
        for rec in list(vocab)[:8]:
            assert backend.detokenize(rec.tokens) == f" {rec.surface}"
