"""
Named, splittable random streams.

Every (seed, node id, tag) triple maps to its own PCG64 stream through a
hash, so adding a node or a subsystem never shifts another stream's draws.
"""

import hashlib

import numpy as np


def _words(seed: int, node_id: int, tag: str) -> list[int]:
    digest = hashlib.blake2b(
        f"{seed}:{node_id}:{tag}".encode(), digest_size=16, person=b"agrotrack-rng"
    ).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def substream(seed: int, node_id: int, tag: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_words(seed, node_id, tag))))


def derive_seed(seed: int, *parts: object) -> int:
    """A 63-bit child seed, e.g. for the replicates of a sweep."""
    text = ":".join(str(p) for p in (seed, *parts))
    digest = hashlib.blake2b(text.encode(), digest_size=8, person=b"agrotrack-seed").digest()
    return int.from_bytes(digest, "little") >> 1


class NodeStreams:
    """Lazily created substreams for one node."""

    __slots__ = ("_cache", "node_id", "seed")

    def __init__(self, seed: int, node_id: int) -> None:
        self.seed = seed
        self.node_id = node_id
        self._cache: dict[str, np.random.Generator] = {}

    def __getitem__(self, tag: str) -> np.random.Generator:
        gen = self._cache.get(tag)
        if gen is None:
            gen = self._cache[tag] = substream(self.seed, self.node_id, tag)
        return gen


__all__ = ["NodeStreams", "derive_seed", "substream"]
