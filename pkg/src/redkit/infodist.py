"""Information distances over byte strings and corpus term frequencies.

The compression distances approximate the joint-versus-individual code
length gap; the term distance does the same with document-frequency code
lengths from a corpus provider. Compressor order sensitivity is removed by
taking the cheaper of the two concatenation orders, which makes every
pairwise distance here exactly symmetric.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

from .compressor import Backend, compress_len, concat_len
from .errors import InputError, UndefinedDistanceError


class FrequencyProvider(Protocol):
    """Document-frequency source backing the term distance."""

    @property
    def total_docs(self) -> int: ...

    def count(self, term: str) -> int: ...

    def cocount(self, a: str, b: str) -> int: ...


class CorpusFrequencyProvider:
    """Counts documents containing terms in a one-document-per-line corpus.

    Documents are whitespace-tokenized. ``cocount`` is symmetric by
    construction and ``cocount(t, t) == count(t)``.
    """

    def __init__(self, text: str):
        docs = [line.split() for line in text.splitlines() if line.strip()]
        if not docs:
            raise InputError("corpus contains no documents")
        self._n = len(docs)
        self._docs_with: dict[str, set[int]] = {}
        for i, terms in enumerate(docs):
            for term in terms:
                self._docs_with.setdefault(term, set()).add(i)

    @classmethod
    def from_file(cls, path) -> "CorpusFrequencyProvider":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(fh.read())

    @property
    def total_docs(self) -> int:
        return self._n

    def count(self, term: str) -> int:
        return len(self._docs_with.get(term, ()))

    def cocount(self, a: str, b: str) -> int:
        da = self._docs_with.get(a)
        db = self._docs_with.get(b)
        if not da or not db:
            return 0
        return len(da & db)


def _sym_concat_len(x: bytes, y: bytes, backend) -> float:
    return min(concat_len(x, y, backend), concat_len(y, x, backend))


def aid_approx(x: bytes, y: bytes, backend=Backend.LZ) -> float:
    """Joint code length minus the cheaper single code length, in bits.

    Clamped at zero: real compressors can land a hair below on highly
    redundant pairs, and the ideal quantity is non-negative.
    """
    joint = _sym_concat_len(x, y, backend)
    single = min(compress_len(x, backend), compress_len(y, backend))
    return max(0.0, joint - single)


def nid_approx(x: bytes, y: bytes, backend=Backend.LZ) -> float:
    """Normalized information distance via compressed code lengths."""
    return aid_approx(x, y, backend) / max(compress_len(x, backend), compress_len(y, backend))


def ncd(x: bytes, y: bytes, backend=Backend.LZ) -> float:
    """Normalized compression distance; numerically identical to nid_approx."""
    return nid_approx(x, y, backend)


def cond_len(x: bytes, y: bytes, backend=Backend.LZ) -> float:
    """Bits needed for ``x`` when ``y`` is already available, clamped at 0."""
    return max(0.0, concat_len(y, x, backend) - compress_len(y, backend))


def nwd(a: str, b: str, provider: FrequencyProvider) -> float:
    """Term distance from document-frequency code lengths.

    The pair code length uses co-occurrence counts. Raises
    UndefinedDistanceError when any involved count is zero (the caller
    decides how to handle unseen terms). Not a metric: the bundled toy
    corpus contains a triangle-inequality violation by design.
    """
    n = provider.total_docs
    count_a = provider.count(a)
    count_b = provider.count(b)
    if count_a <= 0 or count_b <= 0:
        missing = a if count_a <= 0 else b
        raise UndefinedDistanceError(f"term {missing!r} appears in no document")
    pair = provider.cocount(a, b)
    if pair <= 0:
        raise UndefinedDistanceError(f"terms {a!r} and {b!r} never co-occur")
    g_a = -math.log2(count_a / n)
    g_b = -math.log2(count_b / n)
    g_ab = -math.log2(pair / n)
    hi = max(g_a, g_b)
    lo = min(g_a, g_b)
    if hi <= 0.0:
        # both terms occur in every document
        if g_ab <= 1e-12:
            return 0.0
        raise UndefinedDistanceError(
            f"terms {a!r} and {b!r} are ubiquitous; distance undefined"
        )
    return (g_ab - lo) / hi


@dataclass(frozen=True)
class DistanceMatrix:
    items: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def to_csv(self) -> str:
        lines = [",".join(self.items)]
        for row in self.values:
            lines.append(",".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"


def distance_matrix(
    items: Sequence[bytes],
    backend=Backend.LZ,
    metric: str = "ncd",
    ids: Sequence[str] | None = None,
    max_workers: int | None = None,
) -> DistanceMatrix:
    """Pairwise distances, computed once per unordered pair (diagonal included).

    Results are identical whether pairs are evaluated serially or fanned out
    to a thread pool: the pair list is fixed up front and values land by
    index.
    """
    if not items:
        raise InputError("distance matrix needs at least one item")
    if metric not in ("ncd", "nid"):
        raise InputError(f"unknown matrix metric {metric!r} (expected 'ncd' or 'nid')")
    n = len(items)
    if ids is None:
        ids = [f"item-{i}" for i in range(n)]
    elif len(ids) != n:
        raise InputError("ids and items must have the same length")
    fn = ncd if metric == "ncd" else nid_approx
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    def compute(pair):
        i, j = pair
        return fn(items[i], items[j], backend)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            flat = list(pool.map(compute, pairs))
    else:
        flat = [compute(p) for p in pairs]

    grid = [[0.0] * n for _ in range(n)]
    for (i, j), value in zip(pairs, flat):
        grid[i][j] = value
        grid[j][i] = value
    return DistanceMatrix(tuple(ids), tuple(tuple(row) for row in grid))
