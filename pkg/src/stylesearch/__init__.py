"""Multimodal style search: blended retrieval, joint embeddings, evaluation."""

from .blend import (
    BlendParams,
    MultimodalQuery,
    ResultEntry,
    ResultList,
    SearchSpaces,
    early_fusion,
    late_fusion,
)
from .catalog import (
    Catalog,
    CatalogError,
    CompatibleSet,
    Item,
    SplitSpec,
    frequent_name_words,
    gen_synthetic,
    load_catalog,
    save_catalog,
    split,
)
from .deepstyle import (
    DeepStyleBlock,
    PairSample,
    SiameseConfig,
    contrastive_loss,
    cross_entropy,
    forward,
    joint_loss,
    retrieve,
    train_classifier,
    train_siamese,
)
from .embed import (
    CbowConfig,
    EmbeddingTable,
    cosine,
    embed_text,
    tokenize,
    train_cbow,
    train_context,
)
from .engine import Engine, build_engine, load_engine
from .evalkit import (
    EvalReport,
    SimilarityContext,
    ails,
    evaluate,
    sim,
    sim_context,
    sim_name,
    sweep_n1_n2,
)
from .knnindex import Neighbor, VectorIndex
from .visfeat import RawImage, l2_normalize, load_features, save_features, toy_featurize

__all__ = [
    "BlendParams",
    "Catalog",
    "CatalogError",
    "CbowConfig",
    "CompatibleSet",
    "DeepStyleBlock",
    "EmbeddingTable",
    "Engine",
    "EvalReport",
    "Item",
    "MultimodalQuery",
    "Neighbor",
    "PairSample",
    "RawImage",
    "ResultEntry",
    "ResultList",
    "SearchSpaces",
    "SiameseConfig",
    "SimilarityContext",
    "SplitSpec",
    "VectorIndex",
    "ails",
    "build_engine",
    "contrastive_loss",
    "cosine",
    "cross_entropy",
    "early_fusion",
    "embed_text",
    "evaluate",
    "forward",
    "frequent_name_words",
    "gen_synthetic",
    "joint_loss",
    "l2_normalize",
    "late_fusion",
    "load_catalog",
    "load_engine",
    "load_features",
    "retrieve",
    "save_catalog",
    "save_features",
    "sim",
    "sim_context",
    "sim_name",
    "split",
    "sweep_n1_n2",
    "tokenize",
    "toy_featurize",
    "train_cbow",
    "train_classifier",
    "train_context",
    "train_siamese",
]
