"""Joint image-text network (classification head) and its siamese contrastive extension.

Plain-numpy dense layers with hand-written backpropagation; gradients are
checked against central finite differences in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import knnindex
from .blend import MultimodalQuery, ResultEntry, ResultList
from .catalog import Catalog
from .embed import EmbeddingTable, embed_text

ACTIVATIONS = ("relu", "identity")
BRANCH_DIM = 128


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"weights rows {self.weights.shape[0]} != bias size {self.bias.shape[0]}"
            )

    def forward(self, x: np.ndarray) -> np.ndarray:
        pre = self.weights @ x + self.bias
        if self.activation == "relu":
            return np.maximum(pre, 0.0)
        return pre


@dataclass
class DeepStyleBlock:
    """Two compressed input branches concatenated into a joint embedding.

    The classifier maps the joint embedding to category logits; the embedding
    itself (the penultimate layer) is the multimodal item representation used
    for retrieval.
    """

    image_branch: DenseLayer
    text_branch: DenseLayer
    classifier: DenseLayer
    categories: list[str]
    trained: bool = False

    @property
    def embedding_dim(self) -> int:
        return self.image_branch.weights.shape[0] + self.text_branch.weights.shape[0]

    @classmethod
    def create(
        cls,
        d_img: int,
        d_txt: int,
        categories: list[str],
        branch_dim: int = BRANCH_DIM,
        activation: str = "relu",
        seed: int = 1,
    ) -> "DeepStyleBlock":
        rng = np.random.default_rng(seed)

        def init(n_out: int, n_in: int) -> np.ndarray:
            return rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))

        return cls(
            image_branch=DenseLayer(init(branch_dim, d_img), np.zeros(branch_dim), activation),
            text_branch=DenseLayer(init(branch_dim, d_txt), np.zeros(branch_dim), activation),
            classifier=DenseLayer(
                init(len(categories), 2 * branch_dim), np.zeros(len(categories)), "identity"
            ),
            categories=list(categories),
        )

    def parameters(self) -> dict[str, np.ndarray]:
        """Named parameter tensors, in a stable order."""
        return {
            "image_branch.weights": self.image_branch.weights,
            "image_branch.bias": self.image_branch.bias,
            "text_branch.weights": self.text_branch.weights,
            "text_branch.bias": self.text_branch.bias,
            "classifier.weights": self.classifier.weights,
            "classifier.bias": self.classifier.bias,
        }


@dataclass
class PairSample:
    """Left/right (image, text, category-index) inputs and the pair label.

    ``y = 0`` marks items from the same compatible set, ``y = 1`` items that
    share none.
    """

    left: tuple[np.ndarray, np.ndarray, int]
    right: tuple[np.ndarray, np.ndarray, int]
    y: int


@dataclass(frozen=True)
class SiameseConfig:
    margin: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    pair_seed: int = 1
    learning_rate: float = 0.05
    epochs: int = 10
    batch_size: int = 16

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError(f"margin must be > 0, got {self.margin}")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass
class TrainLog:
    epoch_losses: list[float] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


def _forward_full(block: DeepStyleBlock, img: np.ndarray, txt: np.ndarray):
    pre_i = block.image_branch.weights @ img + block.image_branch.bias
    h_i = np.maximum(pre_i, 0.0) if block.image_branch.activation == "relu" else pre_i
    pre_t = block.text_branch.weights @ txt + block.text_branch.bias
    h_t = np.maximum(pre_t, 0.0) if block.text_branch.activation == "relu" else pre_t
    emb = np.concatenate([h_i, h_t])
    logits = block.classifier.weights @ emb + block.classifier.bias
    return pre_i, h_i, pre_t, h_t, emb, logits


def forward(
    block: DeepStyleBlock, img: np.ndarray, txt: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(joint embedding, category logits) for one image/text input pair."""
    img = np.asarray(img, dtype=np.float64)
    txt = np.asarray(txt, dtype=np.float64)
    if img.shape != (block.image_branch.weights.shape[1],):
        raise ValueError(
            f"image input has shape {img.shape}, branch expects "
            f"({block.image_branch.weights.shape[1]},)"
        )
    if txt.shape != (block.text_branch.weights.shape[1],):
        raise ValueError(
            f"text input has shape {txt.shape}, branch expects "
            f"({block.text_branch.weights.shape[1]},)"
        )
    _, _, _, _, emb, logits = _forward_full(block, img, txt)
    return emb, logits


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """-log softmax(logits)[label], stabilized by max subtraction."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.shape[0]:
        raise ValueError(f"label {label} out of range for {logits.shape[0]} classes")
    shifted = logits - np.max(logits)
    lse = np.log(np.sum(np.exp(shifted)))
    return float(lse - shifted[label])


def contrastive_loss(d: float, y: int, m: float) -> float:
    """(1-y) * d^2/2 + y * max(0, m-d)^2 / 2."""
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    if y == 0:
        return 0.5 * d * d
    gap = max(0.0, m - d)
    return 0.5 * gap * gap


def _zero_grads(block: DeepStyleBlock) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in block.parameters().items()}


def _accumulate_branch_grads(
    grads: dict[str, np.ndarray],
    block: DeepStyleBlock,
    img: np.ndarray,
    txt: np.ndarray,
    pre_i: np.ndarray,
    pre_t: np.ndarray,
    emb: np.ndarray,
    d_emb: np.ndarray,
    d_logits: np.ndarray,
) -> None:
    """Backprop one branch pass; d_emb/d_logits are upstream gradients."""
    grads["classifier.weights"] += np.outer(d_logits, emb)
    grads["classifier.bias"] += d_logits
    d_emb = d_emb + block.classifier.weights.T @ d_logits

    branch = block.image_branch.weights.shape[0]
    d_h_i, d_h_t = d_emb[:branch], d_emb[branch:]
    if block.image_branch.activation == "relu":
        d_pre_i = d_h_i * (pre_i > 0.0)
    else:
        d_pre_i = d_h_i
    if block.text_branch.activation == "relu":
        d_pre_t = d_h_t * (pre_t > 0.0)
    else:
        d_pre_t = d_h_t
    grads["image_branch.weights"] += np.outer(d_pre_i, img)
    grads["image_branch.bias"] += d_pre_i
    grads["text_branch.weights"] += np.outer(d_pre_t, txt)
    grads["text_branch.bias"] += d_pre_t


def classification_loss_and_grads(
    block: DeepStyleBlock, img: np.ndarray, txt: np.ndarray, label: int
) -> tuple[float, dict[str, np.ndarray]]:
    """Cross-entropy on one item, with gradients for every block parameter."""
    pre_i, _, pre_t, _, emb, logits = _forward_full(block, img, txt)
    loss = cross_entropy(logits, label)
    d_logits = softmax(logits)
    d_logits[label] -= 1.0
    grads = _zero_grads(block)
    _accumulate_branch_grads(
        grads, block, img, txt, pre_i, pre_t, emb, np.zeros_like(emb), d_logits
    )
    return loss, grads


def joint_loss(
    pair: PairSample, block: DeepStyleBlock, config: SiameseConfig
) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted contrastive + two-branch cross-entropy loss with full gradients.

    Both branch passes run through the same block (shared weights), so each
    parameter accumulates gradient contributions from the left and right pass.
    """
    img_l, txt_l, label_l = pair.left
    img_r, txt_r, label_r = pair.right
    pre_i_l, _, pre_t_l, _, emb_l, logits_l = _forward_full(block, img_l, txt_l)
    pre_i_r, _, pre_t_r, _, emb_r, logits_r = _forward_full(block, img_r, txt_r)

    diff = emb_l - emb_r
    d = float(np.linalg.norm(diff))
    loss = (
        config.alpha * contrastive_loss(d, pair.y, config.margin)
        + config.beta * cross_entropy(logits_l, label_l)
        + config.gamma * cross_entropy(logits_r, label_r)
    )

    # dL_C/dd: y=0 pulls the pair together, y=1 pushes apart below the margin.
    if pair.y == 0:
        dlc_dd = d
    else:
        dlc_dd = -max(0.0, config.margin - d)
    if d > 1e-12:
        d_emb_l = config.alpha * dlc_dd * diff / d
    else:
        d_emb_l = np.zeros_like(diff)
    d_emb_r = -d_emb_l

    d_logits_l = config.beta * (softmax(logits_l) - _onehot(label_l, len(logits_l)))
    d_logits_r = config.gamma * (softmax(logits_r) - _onehot(label_r, len(logits_r)))

    grads = _zero_grads(block)
    _accumulate_branch_grads(
        grads, block, img_l, txt_l, pre_i_l, pre_t_l, emb_l, d_emb_l, d_logits_l
    )
    _accumulate_branch_grads(
        grads, block, img_r, txt_r, pre_i_r, pre_t_r, emb_r, d_emb_r, d_logits_r
    )
    return loss, grads


def _onehot(label: int, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[label] = 1.0
    return out


def _apply(block: DeepStyleBlock, grads: dict[str, np.ndarray], lr: float) -> None:
    for name, param in block.parameters().items():
        param -= lr * grads[name]


def _training_rows(
    catalog: Catalog,
    features: dict[str, np.ndarray],
    text_vectors: dict[str, np.ndarray],
) -> tuple[list[tuple[str, np.ndarray, np.ndarray, int]], list[str]]:
    rows = []
    skipped = []
    cat_index = {c: i for i, c in enumerate(catalog.categories)}
    for item_id in sorted(catalog.items):
        item = catalog.items[item_id]
        img = features.get(item_id)
        txt = text_vectors.get(item_id)
        if img is None or txt is None:
            skipped.append(item_id)
            continue
        rows.append((item_id, img, txt, cat_index[item.category]))
    return rows, skipped


def train_classifier(
    catalog: Catalog,
    features: dict[str, np.ndarray],
    text_vectors: dict[str, np.ndarray],
    epochs: int = 20,
    learning_rate: float = 0.05,
    seed: int = 1,
    batch_size: int = 16,
    branch_dim: int = BRANCH_DIM,
) -> tuple[DeepStyleBlock, TrainLog]:
    """Minibatch SGD on category cross-entropy over catalog items.

    Items missing either modality are reported in the log and skipped.
    Deterministic under ``seed``.
    """
    rows, skipped = _training_rows(catalog, features, text_vectors)
    if not rows:
        raise ValueError("no item has both feature vector and text embedding")
    d_img = rows[0][1].shape[0]
    d_txt = rows[0][2].shape[0]
    block = DeepStyleBlock.create(
        d_img, d_txt, catalog.categories, branch_dim=branch_dim, seed=seed
    )
    rng = np.random.default_rng(seed)
    log = TrainLog(skipped=skipped)

    for _ in range(epochs):
        order = rng.permutation(len(rows))
        epoch_loss = 0.0
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            grads = _zero_grads(block)
            for idx in batch:
                _, img, txt, label = rows[idx]
                loss, g = classification_loss_and_grads(block, img, txt, label)
                epoch_loss += loss
                for name in grads:
                    grads[name] += g[name]
            _apply(block, grads, learning_rate / len(batch))
        log.epoch_losses.append(epoch_loss / len(rows))
    block.trained = True
    return block, log


def build_pairs(
    catalog: Catalog,
    rows: list[tuple[str, np.ndarray, np.ndarray, int]],
    rng: np.random.Generator,
) -> list[PairSample]:
    """Positive pairs from shared sets, one sampled no-shared-set negative each."""
    by_id = {r[0]: r for r in rows}
    eligible = [r[0] for r in rows]
    set_ids = {item_id: set(catalog.items[item_id].set_ids) for item_id in eligible}

    positive_keys: set[tuple[str, str]] = set()
    for set_id in sorted(catalog.sets):
        members = [i for i in catalog.sets[set_id].item_ids if i in by_id]
        members.sort()
        for a_pos, a in enumerate(members):
            for b in members[a_pos + 1 :]:
                positive_keys.add((a, b))

    pairs: list[PairSample] = []
    for a, b in sorted(positive_keys):
        ra, rb = by_id[a], by_id[b]
        pairs.append(PairSample(left=(ra[1], ra[2], ra[3]), right=(rb[1], rb[2], rb[3]), y=0))
        # Negative partner: any item sharing no compatible set with the anchor.
        for _ in range(100):
            other = eligible[int(rng.integers(len(eligible)))]
            if other != a and not (set_ids[a] & set_ids[other]):
                ro = by_id[other]
                pairs.append(
                    PairSample(left=(ra[1], ra[2], ra[3]), right=(ro[1], ro[2], ro[3]), y=1)
                )
                break
    return pairs


def train_siamese(
    catalog: Catalog,
    features: dict[str, np.ndarray],
    text_vectors: dict[str, np.ndarray],
    config: SiameseConfig = SiameseConfig(),
    branch_dim: int = BRANCH_DIM,
) -> tuple[DeepStyleBlock, TrainLog]:
    """SGD on the joint contrastive + classification loss over sampled pairs.

    Positives come from items sharing a compatible set, negatives from random
    items sharing none (1:1 ratio).  Deterministic under ``config.pair_seed``.
    """
    rows, skipped = _training_rows(catalog, features, text_vectors)
    if not rows:
        raise ValueError("no item has both feature vector and text embedding")
    rng = np.random.default_rng(config.pair_seed)
    pairs = build_pairs(catalog, rows, rng)
    if not any(p.y == 0 for p in pairs):
        raise ValueError("no valid positive pair; need a compatible set with >= 2 usable items")

    d_img = rows[0][1].shape[0]
    d_txt = rows[0][2].shape[0]
    block = DeepStyleBlock.create(
        d_img, d_txt, catalog.categories, branch_dim=branch_dim, seed=config.pair_seed
    )
    log = TrainLog(skipped=skipped)

    for _ in range(config.epochs):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = _zero_grads(block)
            for idx in batch:
                loss, g = joint_loss(pairs[idx], block, config)
                epoch_loss += loss
                for name in grads:
                    grads[name] += g[name]
            _apply(block, grads, config.learning_rate / len(batch))
        log.epoch_losses.append(epoch_loss / len(pairs))
    block.trained = True
    return block, log


def embed_catalog(
    block: DeepStyleBlock,
    features: dict[str, np.ndarray],
    text_vectors: dict[str, np.ndarray],
    metric: str = "euclidean",
) -> knnindex.VectorIndex:
    """Index every item with both modalities by its joint embedding (ids sorted)."""
    entries = []
    for item_id in sorted(features):
        txt = text_vectors.get(item_id)
        if txt is None:
            continue
        emb, _ = forward(block, features[item_id], txt)
        entries.append((item_id, emb))
    if not entries:
        raise ValueError("no item has both feature vector and text embedding")
    return knnindex.build(entries, metric=metric)


def retrieve(
    block: DeepStyleBlock,
    query: MultimodalQuery,
    index: knnindex.VectorIndex,
    word_table: EmbeddingTable,
    k: int,
    exclude_query: bool = True,
) -> ResultList:
    """k nearest catalog items to the query's joint embedding."""
    if not block.trained:
        raise ValueError("block is untrained; train or load a model first")
    if query.visual is None:
        raise ValueError("deepstyle retrieval requires a visual query")
    warnings = []
    text_vec = embed_text(query.text, word_table)
    if text_vec is None:
        text_vec = np.zeros(block.text_branch.weights.shape[1])
        warnings.append("text query has no in-vocabulary word; zero text input used")
    emb, _ = forward(block, query.visual, text_vec)
    exclude = {query.query_item_id} if (exclude_query and query.query_item_id) else set()
    hits = knnindex.query(index, emb, k, exclude=exclude)
    entries = [
        ResultEntry(n.id, n.score, {"joint": rank}) for rank, n in enumerate(hits, start=1)
    ]
    return ResultList(entries=entries, warnings=warnings)


def save_model(block: DeepStyleBlock, path: str) -> None:
    """Serialize the block as JSON with row-major full-precision weights."""

    def layer_dict(layer: DenseLayer) -> dict:
        return {
            "weights": [[float(x) for x in row] for row in layer.weights],
            "bias": [float(x) for x in layer.bias],
            "activation": layer.activation,
        }

    doc = {
        "kind": "deepstyle-block",
        "d_img": block.image_branch.weights.shape[1],
        "d_txt": block.text_branch.weights.shape[1],
        "branch_dim": block.image_branch.weights.shape[0],
        "categories": block.categories,
        "trained": block.trained,
        "image_branch": layer_dict(block.image_branch),
        "text_branch": layer_dict(block.text_branch),
        "classifier": layer_dict(block.classifier),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str) -> DeepStyleBlock:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "deepstyle-block":
        raise ValueError(f"{path} is not a deepstyle model file")

    def parse_layer(d: dict) -> DenseLayer:
        return DenseLayer(
            weights=np.asarray(d["weights"], dtype=np.float64),
            bias=np.asarray(d["bias"], dtype=np.float64),
            activation=d["activation"],
        )

    return DeepStyleBlock(
        image_branch=parse_layer(doc["image_branch"]),
        text_branch=parse_layer(doc["text_branch"]),
        classifier=parse_layer(doc["classifier"]),
        categories=[str(c) for c in doc["categories"]],
        trained=bool(doc["trained"]),
    )
