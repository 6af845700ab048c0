"""Shared generators for test data.

Structured samples are word-salad text: compressible (roughly 1.5-3 bits per
byte under the LZ backend) without being degenerate single-motif runs, which
is the regime the normalized self-distance bounds are stated for.
"""

import random

import pytest

_WORDS = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
    "hotel", "india", "juliet", "kilo", "lima", "mike", "november",
]


def structured_bytes(n: int, seed: int = 0) -> bytes:
    rng = random.Random(seed)
    parts = []
    size = 0
    while size < n:
        word = rng.choice(_WORDS)
        parts.append(word)
        size += len(word) + 1
    return (" ".join(parts).encode("ascii"))[:n]


def random_bytes(n: int, seed: int = 0) -> bytes:
    rng = random.Random(seed)
    return bytes(rng.randrange(256) for _ in range(n))


def motif_bytes(n: int, period: int, seed: int = 0) -> bytes:
    rng = random.Random(seed)
    motif = bytes(rng.randrange(256) for _ in range(period))
    return (motif * (n // period + 1))[:n]


@pytest.fixture(scope="session")
def toy_corpus_text() -> str:
    from pathlib import Path

    import redkit

    path = Path(redkit.__file__).parent / "data" / "toy_corpus.txt"
    return path.read_text(encoding="utf-8")
