"""Exact k-nearest-neighbor search over small/medium vector collections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class Neighbor:
    id: str
    score: float  # distance for euclidean, similarity for cosine


@dataclass
class VectorIndex:
    dim: int
    ids: list[str]
    matrix: np.ndarray  # cosine indexes store row-normalized copies
    metric: str


def build(entries: Iterable[tuple[str, Sequence[float]]], metric: str) -> VectorIndex:
    """Build a queryable index; cosine entries are normalized once here."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim = -1
    for entry_id, vec in entries:
        vec = np.asarray(vec, dtype=np.float64)
        if dim == -1:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise ValueError(
                f"entry {entry_id!r} has dim {vec.shape[0]}, index dim is {dim}"
            )
        if entry_id in seen:
            raise ValueError(f"duplicate id {entry_id!r}")
        seen.add(entry_id)
        ids.append(entry_id)
        rows.append(vec)
    if not ids:
        raise ValueError("cannot build an empty index")
    matrix = np.vstack(rows)
    if metric == "cosine":
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            bad = ids[int(np.argmin(norms))]
            raise ValueError(f"zero vector for id {bad!r} under cosine metric")
        matrix = matrix / norms[:, None]
    return VectorIndex(dim=dim, ids=ids, matrix=matrix, metric=metric)


def query(
    index: VectorIndex, q: Sequence[float], k: int, exclude: set[str] = frozenset()
) -> list[Neighbor]:
    """Exact top-k by exhaustive scan; ties broken by ascending id.

    Euclidean results sort ascending by distance, cosine descending by
    similarity.  k clamps to the number of non-excluded entries.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (index.dim,):
        raise ValueError(f"query has shape {q.shape}, index dim is {index.dim}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    if index.metric == "euclidean":
        diffs = index.matrix - q
        scores = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
        keyed = sorted(
            (
                (scores[i], index.ids[i])
                for i in range(len(index.ids))
                if index.ids[i] not in exclude
            ),
        )
    else:
        qn = np.linalg.norm(q)
        if qn == 0.0:
            raise ValueError("cosine query must be nonzero")
        scores = index.matrix @ (q / qn)
        keyed = sorted(
            (
                (-scores[i], index.ids[i])
                for i in range(len(index.ids))
                if index.ids[i] not in exclude
            ),
        )
    top = keyed[:k]
    if index.metric == "euclidean":
        return [Neighbor(id=i, score=float(s)) for s, i in top]
    return [Neighbor(id=i, score=float(-s)) for s, i in top]
