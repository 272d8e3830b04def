"""Entity vocabulary ingestion and the token prefix tree that constrains decoding.

Entities are tokenized in continuation context (as they would appear after
", " in a running list), so the trie's token space matches what the decoder
sees mid-prompt.  The trie is immutable after build and safe to share across
concurrent decodes.
"""

from __future__ import annotations

import hashlib
import io
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from .lm import LmBackend

__all__ = [
    "VocabularyError",
    "TrieCacheError",
    "EntityRecord",
    "EntityVocabulary",
    "PrefixTrie",
    "load_vocabulary",
    "build_trie",
    "allowed_next",
    "save_trie_cache",
    "load_trie_cache",
]

logger = logging.getLogger(__name__)

_CACHE_MAGIC = b"SXVOC1\n"


class VocabularyError(ValueError):
    """Vocabulary file unusable (missing, empty, or untokenizable lines)."""


class TrieCacheError(ValueError):
    """Cache file unreadable or built for different inputs."""


@dataclass(frozen=True)
class EntityRecord:
    """One candidate entity: dense id, surface form, continuation tokens."""

    id: int
    surface: str
    tokens: tuple[int, ...]

    def __post_init__(self):
        if not self.surface.strip():
            raise ValueError("entity surface is empty")
        if not self.tokens:
            raise ValueError(f"entity {self.surface!r} has no tokens")


class EntityVocabulary:
    """Ordered, deduplicated candidate entities with surface/id lookups."""

    def __init__(self, records: Sequence[EntityRecord], tokenizer_id: str):
        self.records = list(records)
        self.tokenizer_id = tokenizer_id
        self._by_surface = {r.surface: r for r in self.records}
        h = hashlib.sha256()
        for r in self.records:
            h.update(r.surface.encode("utf-8"))
            h.update(b"\n")
        self.content_hash = h.hexdigest()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EntityRecord]:
        return iter(self.records)

    def __getitem__(self, entity_id: int) -> EntityRecord:
        return self.records[entity_id]

    def surface(self, entity_id: int) -> str:
        return self.records[entity_id].surface

    def find(self, surface: str) -> EntityRecord | None:
        return self._by_surface.get(surface)

    def resolve(self, surfaces: Sequence[str]) -> list[int]:
        """Entity ids for the given surfaces; raises listing all misses."""
        ids, missing = [], []
        for s in surfaces:
            rec = self._by_surface.get(s)
            if rec is None:
                missing.append(s)
            else:
                ids.append(rec.id)
        if missing:
            raise VocabularyError(
                "seed entities not in vocabulary: " + ", ".join(repr(m) for m in missing)
            )
        return ids


def load_vocabulary(path: str | Path, backend: LmBackend) -> EntityVocabulary:
    """Read one entity surface per line (UTF-8, LF or CRLF) and tokenize each.

    Duplicate surfaces collapse to the first occurrence (exact byte equality,
    no case folding).  Lines containing the entity delimiter "," are rejected
    with a warning, since the delimiter terminates entities during decoding.
    Tokenization failures raise with the offending line number.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise VocabularyError(f"cannot read vocabulary file {p}: {e}") from e
    records: list[EntityRecord] = []
    seen: set[str] = set()
    rejected = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        surface = raw.strip()
        if not surface:
            continue
        if "," in surface:
            logger.warning(
                "%s:%d: entity %r contains the delimiter ',' and was rejected",
                p, lineno, surface,
            )
            rejected += 1
            continue
        if surface in seen:
            continue
        seen.add(surface)
        try:
            tokens = tuple(backend.tokenize(surface, in_continuation=True))
        except Exception as e:
            raise VocabularyError(f"{p}:{lineno}: cannot tokenize {surface!r}: {e}") from e
        if not tokens:
            raise VocabularyError(f"{p}:{lineno}: {surface!r} tokenized to nothing")
        records.append(EntityRecord(id=len(records), surface=surface, tokens=tokens))
    if rejected:
        logger.warning("%s: rejected %d line(s) containing ','", p, rejected)
    if not records:
        raise VocabularyError(f"vocabulary file {p} contains no usable entities")
    return EntityVocabulary(records, backend.tokenizer_id)


class PrefixTrie:
    """Token-id trie whose root-to-terminal paths are the vocabulary entities.

    Nodes are integer indices into parallel arrays; child lookup is one dict
    get.  A node can be terminal and still have children (one entity being a
    token prefix of another).  Instances are frozen after `build_trie`.
    """

    ROOT = 0

    def __init__(self):
        self._children: list[dict[int, int]] = [{}]
        self._entity: list[int] = [-1]
        self._terminals: list[int] = [0]  # terminals in the subtree at each node
        self._sorted: list[tuple[tuple[int, int], ...]] = []  # frozen at seal
        self._sealed = False

    def _seal(self) -> None:
        self._sorted = [
            tuple(sorted(children.items())) for children in self._children
        ]
        self._sealed = True

    def _insert(self, tokens: Sequence[int], entity_id: int) -> None:
        if self._sealed:
            raise RuntimeError("trie is immutable after build")
        node = self.ROOT
        path = [node]
        for t in tokens:
            nxt = self._children[node].get(t)
            if nxt is None:
                nxt = len(self._children)
                self._children[node][t] = nxt
                self._children.append({})
                self._entity.append(-1)
                self._terminals.append(0)
            node = nxt
            path.append(node)
        if self._entity[node] == -1:
            # distinct surfaces may tokenize identically; first one wins
            self._entity[node] = entity_id
            for p in path:
                self._terminals[p] += 1

    def children(self, node: int) -> dict[int, int]:
        return self._children[node]

    def sorted_children(self, node: int) -> tuple[tuple[int, int], ...]:
        """(token id, child node) pairs in token order; available once built."""
        return self._sorted[node]

    def step(self, node: int, token_id: int) -> int:
        """Child node for `token_id`, or -1."""
        return self._children[node].get(token_id, -1)

    def entity_at(self, node: int) -> int:
        """Entity id completed at `node`, or -1 if not terminal."""
        return self._entity[node]

    def is_terminal(self, node: int) -> bool:
        return self._entity[node] != -1

    def terminal_count(self, node: int) -> int:
        """Number of entities completed within the subtree rooted at `node`."""
        return self._terminals[node]

    def __len__(self) -> int:
        return len(self._children)

    def enumerate(self) -> Iterator[tuple[tuple[int, ...], int]]:
        """All (token path, entity id) pairs, depth-first in token-id order."""
        stack: list[tuple[int, tuple[int, ...]]] = [(self.ROOT, ())]
        while stack:
            node, path = stack.pop()
            eid = self._entity[node]
            if eid != -1:
                yield path, eid
            for t in sorted(self._children[node], reverse=True):
                stack.append((self._children[node][t], path + (t,)))

    def stats(self) -> dict:
        n_entities = sum(1 for e in self._entity if e != -1)
        max_depth = 0
        stack = [(self.ROOT, 0)]
        while stack:
            node, d = stack.pop()
            max_depth = max(max_depth, d)
            stack.extend((c, d + 1) for c in self._children[node].values())
        return {
            "entities": n_entities,
            "nodes": len(self._children),
            "max_depth": max_depth,
        }


def build_trie(vocab: EntityVocabulary) -> PrefixTrie:
    """Immutable trie over the vocabulary's token sequences."""
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    trie = PrefixTrie()
    for rec in vocab:
        trie._insert(rec.tokens, rec.id)
    trie._seal()
    return trie


def allowed_next(trie: PrefixTrie, cursor: int) -> tuple[dict[int, int], bool]:
    """(token id -> child node, terminal flag) for the trie position `cursor`.

    When the flag is true the cursor completes an entity and the decoder may
    additionally emit the entity delimiter to terminate.
    """
    return trie.children(cursor), trie.is_terminal(cursor)


def _write_str(buf: io.BytesIO, s: str) -> None:
    b = s.encode("utf-8")
    buf.write(struct.pack("<I", len(b)))
    buf.write(b)


def _read_str(buf: io.BytesIO) -> str:
    (n,) = struct.unpack("<I", buf.read(4))
    return buf.read(n).decode("utf-8")


def save_trie_cache(path: str | Path, vocab: EntityVocabulary) -> None:
    """Write a versioned binary cache of the tokenized vocabulary.

    The trie itself is rebuilt on load (the build is deterministic), so the
    cache stores surfaces and token sequences keyed by (vocab hash,
    tokenizer id).  Output bytes are a pure function of the inputs.
    """
    buf = io.BytesIO()
    buf.write(_CACHE_MAGIC)
    _write_str(buf, vocab.tokenizer_id)
    _write_str(buf, vocab.content_hash)
    buf.write(struct.pack("<I", len(vocab)))
    for rec in vocab:
        _write_str(buf, rec.surface)
        buf.write(struct.pack("<I", len(rec.tokens)))
        buf.write(struct.pack(f"<{len(rec.tokens)}I", *rec.tokens))
    Path(path).write_bytes(buf.getvalue())


def load_trie_cache(path: str | Path, backend: LmBackend) -> EntityVocabulary:
    """Load a cached vocabulary, failing if it was built for another tokenizer."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise TrieCacheError(f"cannot read trie cache {path}: {e}") from e
    buf = io.BytesIO(raw)
    if buf.read(len(_CACHE_MAGIC)) != _CACHE_MAGIC:
        raise TrieCacheError(f"{path} is not a trie cache file")
    tokenizer_id = _read_str(buf)
    if tokenizer_id != backend.tokenizer_id:
        raise TrieCacheError(
            f"trie cache was built with tokenizer {tokenizer_id!r}, "
            f"backend has {backend.tokenizer_id!r}"
        )
    stored_hash = _read_str(buf)
    (count,) = struct.unpack("<I", buf.read(4))
    records = []
    for i in range(count):
        surface = _read_str(buf)
        (n,) = struct.unpack("<I", buf.read(4))
        tokens = struct.unpack(f"<{n}I", buf.read(4 * n))
        records.append(EntityRecord(id=i, surface=surface, tokens=tokens))
    vocab = EntityVocabulary(records, tokenizer_id)
    if vocab.content_hash != stored_hash:
        raise TrieCacheError(f"trie cache {path} is corrupt (content hash mismatch)")
    return vocab
