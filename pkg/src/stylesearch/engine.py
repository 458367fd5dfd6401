"""Artifact loading and retrieval-method dispatch shared by the CLI and the service.

Keeping a single dispatch path means a CLI query and an HTTP query with the
same inputs run literally the same code, so their results cannot drift apart.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

import numpy as np

from . import blend, deepstyle, knnindex
from .blend import BlendParams, MultimodalQuery, ResultEntry, ResultList, SearchSpaces
from .catalog import Catalog, load_catalog
from .deepstyle import DeepStyleBlock
from .embed import EmbeddingTable, embed_text
from .visfeat import load_features

METHODS = ("late", "early", "deepstyle", "siamese", "random")


class EngineError(Exception):
    """Base class for query-time failures with a specific client meaning."""


class BadQueryError(EngineError):
    """Malformed query: wrong fields, bad types, unusable values."""


class UnknownItemError(EngineError):
    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__(f"unknown item id {item_id!r}")


class MethodUnavailableError(EngineError):
    def __init__(self, method: str):
        self.method = method
        super().__init__(f"method {method!r} is not available; train or load its artifacts")


class DimensionMismatchError(EngineError):
    """Inline feature vector does not match the indexed dimension."""


def description_vectors(catalog: Catalog, word_table: EmbeddingTable) -> dict[str, np.ndarray]:
    """Mean-word-vector embedding of every item description with vocabulary overlap."""
    out: dict[str, np.ndarray] = {}
    for item_id in sorted(catalog.items):
        vec = embed_text(catalog.items[item_id].description, word_table)
        if vec is not None:
            out[item_id] = vec
    return out


def build_spaces(
    catalog: Catalog,
    word_table: EmbeddingTable,
    features: dict[str, np.ndarray],
    context_table: EmbeddingTable | None = None,
) -> SearchSpaces:
    if not features:
        raise EngineError("no item has a feature vector; nothing to index")
    visual = knnindex.build(
        [(item_id, features[item_id]) for item_id in sorted(features)], metric="euclidean"
    )
    desc_vectors = description_vectors(catalog, word_table)
    desc_index = None
    if desc_vectors:
        desc_index = knnindex.build(
            [(item_id, desc_vectors[item_id]) for item_id in sorted(desc_vectors)],
            metric="cosine",
        )
    context_index = None
    if context_table is not None:
        entries = [
            (token, context_table.vectors[i])
            for i, token in enumerate(context_table.tokens)
            if token in catalog.items
        ]
        entries.sort(key=lambda e: e[0])
        if not entries:
            raise EngineError("context table holds no catalog item id")
        context_index = knnindex.build(entries, metric="cosine")
    return SearchSpaces(
        catalog=catalog,
        visual=visual,
        word_table=word_table,
        desc_vectors=desc_vectors,
        desc_index=desc_index,
        context_table=context_table,
        context_index=context_index,
    )


@dataclass
class Engine:
    catalog: Catalog
    spaces: SearchSpaces
    features: dict[str, np.ndarray]
    deepstyle_block: DeepStyleBlock | None = None
    deepstyle_index: knnindex.VectorIndex | None = None
    siamese_block: DeepStyleBlock | None = None
    siamese_index: knnindex.VectorIndex | None = None
    seed: int = 1
    fingerprints: dict[str, str] = field(default_factory=dict)

    def available(self) -> dict[str, bool]:
        """Method name -> readiness, given which artifacts are loaded."""
        return {
            "late": self.spaces.desc_index is not None,
            "early": self.spaces.context_index is not None and self.spaces.desc_index is not None,
            "deepstyle": self.deepstyle_index is not None,
            "siamese": self.siamese_index is not None,
            "random": True,
        }

    def resolve_query(
        self,
        item_id: str | None = None,
        features: list[float] | np.ndarray | None = None,
        text: str = "",
    ) -> MultimodalQuery:
        """Turn (item id | inline vector) + text into a query, validating inputs."""
        if (item_id is None) == (features is None):
            raise BadQueryError("exactly one of item_id and features is required")
        if item_id is not None:
            if item_id not in self.catalog.items:
                raise UnknownItemError(item_id)
            vec = self.features.get(item_id)
            if vec is None:
                raise BadQueryError(f"item {item_id!r} has no feature vector")
            return MultimodalQuery(visual=vec, text=text, query_item_id=item_id)
        try:
            vec = np.asarray(features, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise BadQueryError(f"features is not a numeric vector: {exc}") from None
        dim = self.spaces.visual.dim
        if vec.ndim != 1 or vec.shape[0] != dim:
            raise DimensionMismatchError(
                f"feature vector has shape {vec.shape}, index expects ({dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise BadQueryError("feature vector must be finite")
        return MultimodalQuery(visual=vec, text=text)

    def run(
        self,
        query: MultimodalQuery,
        method: str,
        k: int,
        params: BlendParams | None = None,
    ) -> ResultList:
        """Dispatch one query; ``k`` overrides n3 for the blended pipeline."""
        if method not in METHODS:
            raise BadQueryError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
        if k < 1:
            raise BadQueryError(f"k must be >= 1, got {k}")
        if not self.available()[method]:
            raise MethodUnavailableError(method)
        if method == "late":
            return blend.late_fusion(query, k, self.spaces)
        if method == "early":
            base = params or BlendParams()
            return blend.early_fusion(
                query, BlendParams(n1=base.n1, n2=base.n2, n3=k), self.spaces
            )
        if method == "deepstyle":
            return deepstyle.retrieve(
                self.deepstyle_block, query, self.deepstyle_index, self.spaces.word_table, k
            )
        if method == "siamese":
            return deepstyle.retrieve(
                self.siamese_block, query, self.siamese_index, self.spaces.word_table, k
            )
        return self._random(query, k)

    def _random(self, query: MultimodalQuery, k: int) -> ResultList:
        """Uniform baseline; seeded per query so repeat runs are identical."""
        pool = [i for i in self.catalog.item_ids() if i != query.query_item_id]
        rng = random.Random(f"{self.seed}|{query.query_item_id or ''}|{query.text}")
        chosen = rng.sample(pool, min(k, len(pool)))
        entries = [
            ResultEntry(item_id, 0.0, {"random": rank})
            for rank, item_id in enumerate(chosen, start=1)
        ]
        return ResultList(entries=entries)

    def method_fn(self, method: str, params: BlendParams | None = None):
        """Close over one method as a (query, k) -> ResultList callable."""

        def call(query: MultimodalQuery, k: int) -> ResultList:
            return self.run(query, method, k, params=params)

        return call

    def early_factory(self):
        """BlendParams -> retrieval callable, for the n1 x n2 sweep."""

        def factory(params: BlendParams):
            def call(query: MultimodalQuery, k: int) -> ResultList:  # noqa: ARG001
                return blend.early_fusion(query, params, self.spaces)

            return call

        return factory


def build_engine(
    catalog: Catalog,
    word_table: EmbeddingTable,
    features: dict[str, np.ndarray] | None = None,
    context_table: EmbeddingTable | None = None,
    deepstyle_block: DeepStyleBlock | None = None,
    siamese_block: DeepStyleBlock | None = None,
    seed: int = 1,
    fingerprints: dict[str, str] | None = None,
) -> Engine:
    """Assemble an engine from in-memory artifacts (features default to inline ones)."""
    if features is None:
        features = {
            item_id: item.features
            for item_id, item in sorted(catalog.items.items())
            if item.features is not None
        }
    spaces = build_spaces(catalog, word_table, features, context_table=context_table)
    engine = Engine(
        catalog=catalog,
        spaces=spaces,
        features=features,
        seed=seed,
        fingerprints=fingerprints or {},
    )
    if deepstyle_block is not None:
        engine.deepstyle_block = deepstyle_block
        engine.deepstyle_index = deepstyle.embed_catalog(
            deepstyle_block, features, spaces.desc_vectors
        )
    if siamese_block is not None:
        engine.siamese_block = siamese_block
        engine.siamese_index = deepstyle.embed_catalog(
            siamese_block, features, spaces.desc_vectors
        )
    return engine


def _fingerprint(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:12]


def resolve_features(
    catalog: Catalog, features_path: str | None = None
) -> dict[str, np.ndarray]:
    """Merge inline feature vectors with a feature file resolved via feature_key."""
    loaded = (
        load_features(features_path, expected_dim=catalog.feature_dim)
        if features_path
        else {}
    )
    features: dict[str, np.ndarray] = {}
    for item_id, item in sorted(catalog.items.items()):
        if item.features is not None:
            features[item_id] = item.features
        elif item.feature_key is not None:
            vec = loaded.get(item.feature_key)
            if vec is None:
                raise EngineError(
                    f"item {item_id!r} references feature key {item.feature_key!r} "
                    "absent from the feature file"
                )
            features[item_id] = vec
    return features


def load_engine(
    catalog_path: str,
    word_vectors_path: str,
    features_path: str | None = None,
    context_vectors_path: str | None = None,
    deepstyle_path: str | None = None,
    siamese_path: str | None = None,
    seed: int = 1,
) -> Engine:
    """Load every artifact from disk and assemble the engine."""
    catalog = load_catalog(catalog_path)
    word_table = EmbeddingTable.load(word_vectors_path)
    features = resolve_features(catalog, features_path)
    context_table = (
        EmbeddingTable.load(context_vectors_path) if context_vectors_path else None
    )
    deepstyle_block = deepstyle.load_model(deepstyle_path) if deepstyle_path else None
    siamese_block = deepstyle.load_model(siamese_path) if siamese_path else None

    fingerprints = {"catalog": _fingerprint(catalog_path), "words": _fingerprint(word_vectors_path)}
    if context_vectors_path:
        fingerprints["context"] = _fingerprint(context_vectors_path)
    if deepstyle_path:
        fingerprints["deepstyle"] = _fingerprint(deepstyle_path)
    if siamese_path:
        fingerprints["siamese"] = _fingerprint(siamese_path)
    return build_engine(
        catalog,
        word_table,
        features=features,
        context_table=context_table,
        deepstyle_block=deepstyle_block,
        siamese_block=siamese_block,
        seed=seed,
        fingerprints=fingerprints,
    )
