"""CBOW word2vec trained from scratch, for description words and product-id contexts."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .catalog import Catalog

_TOKEN_RE = re.compile(r"[a-z0-9]+")

NEGATIVE_EXPONENT = 0.75
MIN_LEARNING_RATE = 1e-4


class EmptyVocabularyError(ValueError):
    """No token survived min_count filtering."""


class NonFiniteLossError(RuntimeError):
    """Training produced a non-finite loss; aborted for diagnosis."""


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace (order preserved)."""
    return _TOKEN_RE.findall(text.lower())


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two nonzero vectors of equal dimension."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


@dataclass
class Vocabulary:
    """Dense token<->index mapping with corpus frequencies."""

    index: dict[str, int]
    tokens: list[str]
    counts: np.ndarray

    @classmethod
    def build(cls, corpus: Iterable[Sequence[str]], min_count: int) -> "Vocabulary":
        freq = Counter(tok for sentence in corpus for tok in sentence)
        kept = sorted(t for t, c in freq.items() if c >= min_count)
        return cls(
            index={t: i for i, t in enumerate(kept)},
            tokens=kept,
            counts=np.array([freq[t] for t in kept], dtype=np.float64),
        )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class EmbeddingTable:
    """token -> vector map; ``vectors[i]`` belongs to ``tokens[i]``."""

    dim: int
    tokens: list[str]
    vectors: np.ndarray
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.tokens)}

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __len__(self) -> int:
        return len(self.tokens)

    def vector(self, token: str) -> np.ndarray | None:
        i = self.index.get(token)
        return None if i is None else self.vectors[i]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"dim": self.dim, "count": len(self.tokens)}) + "\n")
            for i, tok in enumerate(self.tokens):
                fh.write(json.dumps({"t": tok, "v": [float(x) for x in self.vectors[i]]}) + "\n")

    @classmethod
    def load(cls, path: str) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            dim = int(header["dim"])
            tokens: list[str] = []
            rows: list[list[float]] = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                tokens.append(rec["t"])
                rows.append(rec["v"])
        vectors = np.asarray(rows, dtype=np.float64).reshape(len(tokens), dim)
        if not np.all(np.isfinite(vectors)):
            raise ValueError(f"non-finite vector in embedding file {path}")
        return cls(dim=dim, tokens=tokens, vectors=vectors)


@dataclass(frozen=True)
class CbowConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 15
    learning_rate: float = 0.025
    min_count: int = 2
    seed: int = 1

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")


CONTEXT_CONFIG = CbowConfig(window=3, min_count=1)


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-x))


class CbowTrainer:
    """Single-threaded CBOW negative-sampling trainer.

    The mean of the context rows of the input matrix predicts the target token;
    each training step runs sigmoid loss on the target (label 1) against
    ``negatives`` draws (label 0) from the unigram^0.75 distribution, with exact
    gradients on both the output rows and the averaged context rows.
    """

    def __init__(self, corpus: list[list[str]], config: CbowConfig):
        self.config = config
        self.vocab = Vocabulary.build(corpus, config.min_count)
        if len(self.vocab) == 0:
            raise EmptyVocabularyError(
                f"no token occurs >= {config.min_count} times in the corpus"
            )
        self.sentences = [
            [self.vocab.index[t] for t in sentence if t in self.vocab.index]
            for sentence in corpus
        ]
        self.rng = np.random.default_rng(config.seed)
        bound = 0.5 / config.dim
        self.syn0 = self.rng.uniform(-bound, bound, size=(len(self.vocab), config.dim))
        self.syn1 = np.zeros((len(self.vocab), config.dim))

        noise = self.vocab.counts ** NEGATIVE_EXPONENT
        self.noise_cdf = np.cumsum(noise / noise.sum())
        self.epoch_losses: list[float] = []

    def _draw_negatives(self, target: int) -> list[int]:
        out: list[int] = []
        while len(out) < self.config.negatives:
            w = int(np.searchsorted(self.noise_cdf, self.rng.random()))
            if w != target:
                out.append(w)
        return out

    def train(self) -> EmbeddingTable:
        cfg = self.config
        total_targets = sum(len(s) for s in self.sentences) * max(cfg.epochs, 1)
        done = 0
        for _ in range(cfg.epochs):
            loss_sum = 0.0
            n_targets = 0
            for sentence in self.sentences:
                alpha = max(
                    MIN_LEARNING_RATE, cfg.learning_rate * (1.0 - done / total_targets)
                )
                for pos, target in enumerate(sentence):
                    lo = max(0, pos - cfg.window)
                    context = sentence[lo:pos] + sentence[pos + 1 : pos + 1 + cfg.window]
                    if not context:
                        done += 1
                        continue
                    loss_sum += self._step(target, context, alpha)
                    n_targets += 1
                    done += 1
            if n_targets:
                epoch_loss = loss_sum / n_targets
                if not np.isfinite(epoch_loss):
                    raise NonFiniteLossError(f"epoch loss is {epoch_loss}")
                self.epoch_losses.append(epoch_loss)
        return EmbeddingTable(
            dim=cfg.dim, tokens=list(self.vocab.tokens), vectors=self.syn0
        )

    def _step(self, target: int, context: list[int], alpha: float) -> float:
        rows = self.syn1
        h = self.syn0[context].mean(axis=0)
        samples = [target] + self._draw_negatives(target)
        labels = np.zeros(len(samples))
        labels[0] = 1.0

        out = rows[samples]
        scores = out @ h
        preds = _sigmoid(scores)
        # d(loss)/d(score); loss = -log s(score_pos) - sum log s(-score_neg)
        g = preds - labels
        grad_h = g @ out
        # subtract.at accumulates over repeated indices (dup negatives / dup
        # context tokens), which plain fancy indexing would silently drop
        np.subtract.at(rows, samples, alpha * np.outer(g, h))
        np.subtract.at(self.syn0, context, alpha * grad_h / len(context))

        pos_loss = -np.log(max(_sigmoid(scores[0]), 1e-300))
        neg_loss = -np.sum(np.log(np.maximum(_sigmoid(-scores[1:]), 1e-300)))
        return float(pos_loss + neg_loss)


def train_cbow(corpus: list[list[str]], config: CbowConfig) -> EmbeddingTable:
    """Train CBOW with negative sampling; deterministic under ``config.seed``."""
    return CbowTrainer(corpus, config).train()


def train_cbow_with_losses(
    corpus: list[list[str]], config: CbowConfig
) -> tuple[EmbeddingTable, list[float]]:
    trainer = CbowTrainer(corpus, config)
    table = trainer.train()
    return table, trainer.epoch_losses


def embed_text(text: str, table: EmbeddingTable) -> np.ndarray | None:
    """Mean vector of in-vocabulary tokens; None when no token is known."""
    rows = [table.index[t] for t in tokenize(text) if t in table.index]
    if not rows:
        return None
    return table.vectors[rows].mean(axis=0)


def train_context(catalog: "Catalog", config: CbowConfig = CONTEXT_CONFIG) -> EmbeddingTable:
    """Train item-id embeddings over compatible sets (sets are the sentences).

    min_count is forced to 1 so no item appearing in a set is dropped.
    """
    sentences = [list(catalog.sets[sid].item_ids) for sid in sorted(catalog.sets)]
    sentences = [s for s in sentences if len(s) >= 2]
    if not sentences:
        raise ValueError("catalog has no compatible set with >= 2 items")
    return train_cbow(sentences, replace(config, min_count=1))
