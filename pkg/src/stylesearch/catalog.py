"""Catalog data model: items, compatible sets, ingestion, splitting and synthetic data."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .embed import tokenize

DEFAULT_STOPLIST = frozenset(
    {
        "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in",
        "is", "it", "of", "on", "or", "our", "that", "the", "this", "to",
        "with", "your",
    }
)


class CatalogError(Exception):
    """Base class for catalog ingestion and validation failures."""


class CatalogFormatError(CatalogError):
    """Malformed catalog file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateIdError(CatalogError):
    def __init__(self, kind: str, dup_id: str):
        super().__init__(f"duplicate {kind} id {dup_id!r}")
        self.dup_id = dup_id


class ReferentialIntegrityError(CatalogError):
    def __init__(self, message: str, dangling_id: str):
        super().__init__(f"{message}: {dangling_id!r}")
        self.dangling_id = dangling_id


@dataclass(eq=False)
class Item:
    """A catalog product: category, name/description text and a visual feature vector.

    ``features`` holds the inline vector when present; otherwise ``feature_key``
    points into an external feature file.  ``set_ids`` is rebuilt from the set
    records on load, so membership is always bidirectional.
    """

    id: str
    category: str
    name: str
    description: str
    features: np.ndarray | None = None
    feature_key: str | None = None
    image_url: str | None = None
    set_ids: list[str] = field(default_factory=list)
    name_words: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name_words:
            self.name_words = tuple(tokenize(self.name))


@dataclass(eq=False)
class CompatibleSet:
    """A stylistically coherent group of items (an outfit, a room)."""

    id: str
    item_ids: list[str]
    scene_kind: str | None = None


@dataclass(eq=False)
class Catalog:
    items: dict[str, Item]
    sets: dict[str, CompatibleSet]
    categories: list[str]
    feature_dim: int

    def item_ids(self) -> list[str]:
        return sorted(self.items)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int


def load_catalog(path: str) -> Catalog:
    """Read a JSON-lines catalog file and validate it.

    The first line must be a header record; item and set records may follow in
    any order.  Raises :class:`CatalogFormatError`, :class:`DuplicateIdError`
    or :class:`ReferentialIntegrityError` on bad input.
    """
    items: dict[str, Item] = {}
    sets: dict[str, CompatibleSet] = {}
    categories: list[str] | None = None
    feature_dim = -1

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CatalogFormatError(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict) or "kind" not in rec:
                raise CatalogFormatError(line_no, "record must be an object with a 'kind' field")
            kind = rec["kind"]

            if kind == "header":
                if categories is not None:
                    raise CatalogFormatError(line_no, "duplicate header record")
                if line_no != 1:
                    raise CatalogFormatError(line_no, "header must be the first record")
                try:
                    categories = [str(c) for c in rec["categories"]]
                    feature_dim = int(rec["feature_dim"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise CatalogFormatError(line_no, f"bad header: {exc}") from exc
            elif kind == "item":
                if categories is None:
                    raise CatalogFormatError(line_no, "item record before header")
                item = _parse_item(rec, line_no, categories, feature_dim)
                if item.id in items:
                    raise DuplicateIdError("item", item.id)
                items[item.id] = item
            elif kind == "set":
                if categories is None:
                    raise CatalogFormatError(line_no, "set record before header")
                cset = _parse_set(rec, line_no)
                if cset.id in sets:
                    raise DuplicateIdError("set", cset.id)
                sets[cset.id] = cset
            else:
                raise CatalogFormatError(line_no, f"unknown record kind {kind!r}")

    if categories is None:
        raise CatalogFormatError(1, "missing header record")

    # Rebuild item->set references so membership is bidirectional by construction.
    for set_id in sorted(sets):
        for item_id in sets[set_id].item_ids:
            if item_id not in items:
                raise ReferentialIntegrityError(
                    f"set {set_id!r} references unknown item", item_id
                )
            items[item_id].set_ids.append(set_id)

    return Catalog(items=items, sets=sets, categories=categories, feature_dim=feature_dim)


def _parse_item(rec: dict, line_no: int, categories: list[str], feature_dim: int) -> Item:
    try:
        item_id = str(rec["id"])
        category = str(rec["category"])
        name = str(rec["name"])
        description = str(rec["description"])
    except KeyError as exc:
        raise CatalogFormatError(line_no, f"item missing field {exc.args[0]!r}") from exc
    if category not in categories:
        raise CatalogFormatError(line_no, f"unknown category {category!r} for item {item_id!r}")
    features = None
    feature_key = rec.get("feature_key")
    if "features" in rec:
        vec = np.asarray(rec["features"], dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != feature_dim:
            raise CatalogFormatError(
                line_no, f"item {item_id!r} features have dim {vec.size}, expected {feature_dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise CatalogFormatError(line_no, f"item {item_id!r} features contain non-finite values")
        features = vec
    elif feature_key is None:
        raise CatalogFormatError(line_no, f"item {item_id!r} has neither features nor feature_key")
    return Item(
        id=item_id,
        category=category,
        name=name,
        description=description,
        features=features,
        feature_key=feature_key,
        image_url=rec.get("image_url"),
    )


def _parse_set(rec: dict, line_no: int) -> CompatibleSet:
    try:
        set_id = str(rec["id"])
        item_ids = [str(i) for i in rec["items"]]
    except (KeyError, TypeError) as exc:
        raise CatalogFormatError(line_no, f"bad set record: {exc}") from exc
    if len(item_ids) < 2:
        raise CatalogFormatError(line_no, f"set {set_id!r} must list at least 2 items")
    if len(set(item_ids)) != len(item_ids):
        raise CatalogFormatError(line_no, f"set {set_id!r} lists duplicate items")
    return CompatibleSet(id=set_id, item_ids=item_ids, scene_kind=rec.get("scene"))


def save_catalog(catalog: Catalog, path: str) -> None:
    """Write a catalog in the JSON-lines format read by :func:`load_catalog`."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "header",
            "categories": catalog.categories,
            "feature_dim": catalog.feature_dim,
        }
        fh.write(json.dumps(header) + "\n")
        for item_id in sorted(catalog.items):
            item = catalog.items[item_id]
            rec: dict = {
                "kind": "item",
                "id": item.id,
                "category": item.category,
                "name": item.name,
                "description": item.description,
            }
            if item.features is not None:
                rec["features"] = [float(x) for x in item.features]
            if item.feature_key is not None:
                rec["feature_key"] = item.feature_key
            if item.image_url is not None:
                rec["image_url"] = item.image_url
            fh.write(json.dumps(rec) + "\n")
        for set_id in sorted(catalog.sets):
            cset = catalog.sets[set_id]
            rec = {"kind": "set", "id": cset.id, "items": cset.item_ids}
            if cset.scene_kind is not None:
                rec["scene"] = cset.scene_kind
            fh.write(json.dumps(rec) + "\n")


def split(catalog: Catalog, spec: SplitSpec) -> tuple[set[str], set[str]]:
    """Partition item ids into (train, test) by a seeded shuffle.

    The test side gets ``round(test_fraction * n)`` ids.  Split is by item:
    test items are query items for evaluation, they stay in the candidate pool.
    """
    if not 0.0 < spec.test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {spec.test_fraction}")
    ids = sorted(catalog.items)
    rng = random.Random(spec.seed)
    rng.shuffle(ids)
    n_test = round(spec.test_fraction * len(ids))
    test = set(ids[:n_test])
    train = set(ids[n_test:])
    return train, test


def frequent_name_words(
    catalog: Catalog, top_n: int, stoplist: frozenset[str] | set[str] = DEFAULT_STOPLIST
) -> set[str]:
    """Top ``top_n`` name tokens by frequency, stoplist excluded, ties lexicographic."""
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    counts: Counter[str] = Counter()
    for item in catalog.items.values():
        counts.update(w for w in item.name_words if w not in stoplist)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {word for word, _ in ranked[:top_n]}


# Word pools for the synthetic generator.  One pool per latent style; extra
# styles beyond the hand-written pools get generated tokens.
_STYLE_POOLS = [
    ["scandi", "pale", "birch", "airy", "minimal"],
    ["industrial", "steel", "riveted", "raw", "concrete"],
    ["boho", "woven", "fringed", "rattan", "eclectic"],
    ["oak", "carved", "stately", "antique", "heritage"],
    ["coastal", "linen", "driftwood", "breezy", "sandy"],
    ["velvet", "gilded", "plush", "ornate", "glam"],
    ["rustic", "pine", "knotted", "farmhouse", "weathered"],
    ["matte", "graphite", "sleek", "mono", "urban"],
    ["pastel", "rounded", "playful", "candy", "pop"],
    ["bamboo", "zen", "lacquered", "paper", "calm"],
    ["tweed", "tartan", "leathered", "club", "manor"],
    ["chrome", "glass", "mirror", "deco", "polished"],
]
_NOISE_WORDS = [
    "piece", "series", "collection", "home", "everyday", "quality",
    "finish", "design", "easy", "care", "sturdy", "room",
]
_CATEGORIES = [
    "chair", "table", "sofa", "lamp", "shelf", "rug", "bed", "desk",
    "cupboard", "stool",
]
_SCENES = ["living", "bedroom", "kitchen", "office", "hallway"]


def _style_pool(style: int) -> list[str]:
    if style < len(_STYLE_POOLS):
        return _STYLE_POOLS[style]
    return [f"style{style}{suffix}" for suffix in ("a", "b", "c", "d", "e")]


def synthetic_style(item_id: str, n_styles: int) -> int:
    """Latent style cluster of a gen_synthetic item (round-robin by item index)."""
    return int(item_id.lstrip("p")) % n_styles


def gen_synthetic(
    n_items: int,
    n_styles: int,
    n_sets: int,
    seed: int,
    feature_dim: int = 16,
) -> Catalog:
    """Generate a style-clustered catalog for desk-scale experiments.

    Item ``i`` belongs to latent style ``i % n_styles``; every compatible set
    draws all its members from a single style cluster; names and descriptions
    are built from per-style word pools plus shared noise words; features are
    unit vectors around per-style centers with a weaker category component.
    Deterministic under ``seed``.
    """
    if n_styles < 2:
        raise ValueError(f"n_styles must be >= 2, got {n_styles}")
    if n_sets < 1:
        raise ValueError(f"n_sets must be >= 1, got {n_sets}")
    if n_items < n_styles:
        raise ValueError(f"infeasible: n_items={n_items} < n_styles={n_styles}")

    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)

    # Orthonormal style centers keep clusters well separated; random unit
    # vectors are the fallback when styles outnumber dimensions.
    if n_styles <= feature_dim:
        basis, _ = np.linalg.qr(nrng.normal(size=(feature_dim, n_styles)))
        style_centers = basis.T
    else:
        style_centers = nrng.normal(size=(n_styles, feature_dim))
        style_centers /= np.linalg.norm(style_centers, axis=1, keepdims=True)
    cat_centers = nrng.normal(size=(len(_CATEGORIES), feature_dim))
    cat_centers /= np.linalg.norm(cat_centers, axis=1, keepdims=True)

    items: dict[str, Item] = {}
    cluster_members: list[list[str]] = [[] for _ in range(n_styles)]
    for i in range(n_items):
        style = i % n_styles
        pool = _style_pool(style)
        cat_idx = rng.randrange(len(_CATEGORIES))
        category = _CATEGORIES[cat_idx]

        model_code = f"{rng.choice('bdfgklmnprstv')}{rng.choice('aeiou')}{rng.randint(10, 99)}"
        name = f"{model_code} {' '.join(rng.sample(pool, 2))}"

        desc_words = rng.sample(pool, 3) + [rng.choice(pool) for _ in range(2)]
        desc_words += [rng.choice(_NOISE_WORDS) for _ in range(rng.randint(2, 4))]
        desc_words.append(category)
        rng.shuffle(desc_words)
        description = f"a {' '.join(desc_words)} for the {rng.choice(_SCENES)} room"

        vec = (
            style_centers[style]
            + 0.45 * cat_centers[cat_idx]
            + 0.35 * nrng.normal(size=feature_dim)
        )
        vec /= np.linalg.norm(vec)

        item_id = f"p{i:04d}"
        items[item_id] = Item(
            id=item_id,
            category=category,
            name=name,
            description=description,
            features=vec,
        )
        cluster_members[style].append(item_id)

    eligible = [c for c in range(n_styles) if len(cluster_members[c]) >= 2]
    if not eligible:
        raise ValueError("infeasible: no style cluster has >= 2 items")

    sets: dict[str, CompatibleSet] = {}
    for j in range(n_sets):
        style = eligible[j % len(eligible)]
        members = cluster_members[style]
        size = min(rng.randint(3, 6), len(members))
        size = max(size, 2)
        set_id = f"s{j:04d}"
        chosen = rng.sample(members, size)
        sets[set_id] = CompatibleSet(id=set_id, item_ids=chosen, scene_kind=rng.choice(_SCENES))
        for item_id in chosen:
            items[item_id].set_ids.append(set_id)

    return Catalog(
        items=items,
        sets=sets,
        categories=list(_CATEGORIES),
        feature_dim=feature_dim,
    )
