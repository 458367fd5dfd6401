"""Multimodal result blending: late fusion and the sequential early-fusion pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import zip_longest

import numpy as np

from . import knnindex
from .catalog import Catalog
from .embed import EmbeddingTable, embed_text

WARN_TEXT_OOV = "text query has no in-vocabulary word; text stage skipped"


@dataclass
class MultimodalQuery:
    """A (visual, text) query; ``query_item_id`` set when the image is a catalog item."""

    visual: np.ndarray | None = None
    text: str = ""
    query_item_id: str | None = None


@dataclass(frozen=True)
class BlendParams:
    """n1 visual candidates, n2 context neighbors per visual hit, n3 final results."""

    n1: int = 3
    n2: int = 4
    n3: int = 4

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1 or self.n3 < 1:
            raise ValueError(f"blend params must all be >= 1, got {self}")


@dataclass
class ResultEntry:
    item_id: str
    score: float
    provenance: dict[str, int]  # stage name -> 1-based rank at that stage


@dataclass
class ResultList:
    entries: list[ResultEntry]
    warnings: list[str] = field(default_factory=list)
    stages: dict[str, list[str]] = field(default_factory=dict)

    def ids(self) -> list[str]:
        return [e.item_id for e in self.entries]


@dataclass
class SearchSpaces:
    """Immutable retrieval state shared by the blending pipelines.

    ``visual`` is a Euclidean index over unit-norm item features; ``desc_index``
    a cosine index over per-item description embeddings; ``context_index`` a
    cosine index over item-id context vectors (None until a context table is
    trained).
    """

    catalog: Catalog
    visual: knnindex.VectorIndex
    word_table: EmbeddingTable
    desc_vectors: dict[str, np.ndarray]
    desc_index: knnindex.VectorIndex | None = None
    context_table: EmbeddingTable | None = None
    context_index: knnindex.VectorIndex | None = None


def _require_both(query: MultimodalQuery) -> None:
    if query.visual is None:
        raise ValueError("fusion requires a visual query")
    if not query.text.strip():
        raise ValueError("fusion requires a text query")


def late_fusion(query: MultimodalQuery, k: int, spaces: SearchSpaces) -> ResultList:
    """Independent per-modality top-ceil(k/2) retrieval, union-deduplicated.

    Merging interleaves visual-first (v1, t1, v2, t2, ...), keeps the first
    occurrence of a duplicate and truncates to k.  An out-of-vocabulary text
    query degrades to visual-only with a warning.
    """
    _require_both(query)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    exclude = {query.query_item_id} if query.query_item_id else set()
    half = math.ceil(k / 2)

    text_vec = embed_text(query.text, spaces.word_table)
    if text_vec is None or spaces.desc_index is None:
        vis = knnindex.query(spaces.visual, query.visual, k, exclude=exclude)
        entries = [
            ResultEntry(n.id, n.score, {"visual": rank})
            for rank, n in enumerate(vis, start=1)
        ]
        warn = (
            WARN_TEXT_OOV
            if text_vec is None
            else "no description embeddings available; text stage skipped"
        )
        return ResultList(entries=entries, warnings=[warn])

    vis = knnindex.query(spaces.visual, query.visual, half, exclude=exclude)
    txt = knnindex.query(spaces.desc_index, text_vec, half, exclude=exclude)

    ranks: dict[str, dict[str, int]] = {}
    for rank, n in enumerate(vis, start=1):
        ranks.setdefault(n.id, {})["visual"] = rank
    for rank, n in enumerate(txt, start=1):
        ranks.setdefault(n.id, {})["text"] = rank

    merged: list[ResultEntry] = []
    seen: set[str] = set()
    for pair in zip_longest(vis, txt):
        for neighbor in pair:
            if neighbor is None or neighbor.id in seen:
                continue
            seen.add(neighbor.id)
            merged.append(ResultEntry(neighbor.id, neighbor.score, ranks[neighbor.id]))
    return ResultList(entries=merged[:k])


def early_fusion(
    query: MultimodalQuery, params: BlendParams, spaces: SearchSpaces
) -> ResultList:
    """Sequential blending: visual candidates -> context expansion -> text re-rank.

    Stage sets (visual / context / candidates / final) are recorded on the
    result for inspection.  The query item is excluded at every stage; items
    absent from the context vocabulary contribute no context neighbors; items
    without a description embedding are skipped by the text re-rank.
    """
    _require_both(query)
    if spaces.context_table is None or spaces.context_index is None:
        raise ValueError("early fusion requires a trained context space")
    exclude = {query.query_item_id} if query.query_item_id else set()

    vis = knnindex.query(spaces.visual, query.visual, params.n1, exclude=exclude)
    r_vis = [n.id for n in vis]

    r_cont: list[str] = []
    cont_seen: set[str] = set()
    for n in vis:
        ctx_vec = spaces.context_table.vector(n.id)
        if ctx_vec is None:
            continue
        hits = knnindex.query(
            spaces.context_index, ctx_vec, params.n2, exclude=exclude | {n.id}
        )
        for hit in hits:
            if hit.id not in cont_seen:
                cont_seen.add(hit.id)
                r_cont.append(hit.id)

    r_cand = list(r_vis)
    cand_seen = set(r_vis)
    for item_id in r_cont:
        if item_id not in cand_seen:
            cand_seen.add(item_id)
            r_cand.append(item_id)

    vis_rank = {n.id: rank for rank, n in enumerate(vis, start=1)}
    cont_rank = {item_id: rank for rank, item_id in enumerate(r_cont, start=1)}

    def provenance(item_id: str) -> dict[str, int]:
        prov: dict[str, int] = {}
        if item_id in vis_rank:
            prov["visual"] = vis_rank[item_id]
        if item_id in cont_rank:
            prov["context"] = cont_rank[item_id]
        return prov

    warnings: list[str] = []
    text_vec = embed_text(query.text, spaces.word_table)
    if text_vec is None:
        # Degenerate path: keep pipeline order (visual rank, then discovery).
        warnings.append(WARN_TEXT_OOV)
        entries = [
            ResultEntry(item_id, float(rank), provenance(item_id))
            for rank, item_id in enumerate(r_cand[: params.n3], start=1)
        ]
        final_ids = [e.item_id for e in entries]
    else:
        scored: list[tuple[float, str]] = []
        for item_id in r_cand:
            desc_vec = spaces.desc_vectors.get(item_id)
            if desc_vec is None:
                continue
            denom = np.linalg.norm(desc_vec) * np.linalg.norm(text_vec)
            d_text = 1.0 - float(desc_vec @ text_vec / denom)
            scored.append((d_text, item_id))
        scored.sort()
        entries = []
        for rank, (d_text, item_id) in enumerate(scored[: params.n3], start=1):
            prov = provenance(item_id)
            prov["text"] = rank
            entries.append(ResultEntry(item_id, d_text, prov))
        final_ids = [e.item_id for e in entries]

    return ResultList(
        entries=entries,
        warnings=warnings,
        stages={
            "visual": r_vis,
            "context": r_cont,
            "candidates": r_cand,
            "final": final_ids,
        },
    )
