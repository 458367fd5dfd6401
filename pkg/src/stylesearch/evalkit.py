"""Style-similarity metrics, the retrieval evaluation protocol, and the n1 x n2 sweep.

Similarity between two items is empirical: co-occurrence across compatible
sets, or overlap of frequent name words.  A retrieved list is scored by the
mean pairwise similarity over its members (average intra-list similarity).
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from .blend import BlendParams, MultimodalQuery, ResultList
from .catalog import (
    DEFAULT_STOPLIST,
    Catalog,
    SplitSpec,
    frequent_name_words,
    split,
)
from .embed import tokenize

DEFAULT_TOP_WORDS = 50

# A retrieval method: (query, k) -> ResultList.
RetrievalFn = Callable[[MultimodalQuery, int], ResultList]


@dataclass(frozen=True)
class SimilarityContext:
    """Precomputed lookups backing the pairwise style-similarity functions."""

    set_memberships: dict[str, frozenset[str]]  # item id -> ids of sets containing it
    frequent_words: frozenset[str]
    name_words: dict[str, frozenset[str]]  # item id -> name words kept by frequency filter

    @classmethod
    def build(cls, catalog: Catalog, top_n: int = DEFAULT_TOP_WORDS) -> "SimilarityContext":
        memberships: dict[str, frozenset[str]] = {
            item_id: frozenset(item.set_ids) for item_id, item in catalog.items.items()
        }
        frequent = frozenset(frequent_name_words(catalog, top_n=top_n))
        names = {
            item_id: frozenset(item.name_words) & frequent
            for item_id, item in catalog.items.items()
        }
        return cls(set_memberships=memberships, frequent_words=frequent, name_words=names)


def sim_context(p1: str, p2: str, ctx: SimilarityContext) -> float:
    """Shared-set count over the larger of the two items' set counts."""
    sets1 = ctx.set_memberships.get(p1, frozenset())
    sets2 = ctx.set_memberships.get(p2, frozenset())
    denom = max(len(sets1), len(sets2))
    if denom == 0:
        return 0.0
    return len(sets1 & sets2) / denom


def sim_name(p1: str, p2: str, ctx: SimilarityContext) -> float:
    """1 when the items share a frequent name word, else 0."""
    if ctx.name_words.get(p1, frozenset()) & ctx.name_words.get(p2, frozenset()):
        return 1.0
    return 0.0


def sim(p1: str, p2: str, ctx: SimilarityContext) -> float:
    return max(sim_context(p1, p2, ctx), sim_name(p1, p2, ctx))


def _result_ids(result: ResultList | Sequence[str]) -> list[str]:
    if isinstance(result, ResultList):
        return result.ids()
    return list(result)


def ails(
    result: ResultList | Sequence[str],
    ctx: SimilarityContext,
    query_id: str | None = None,
    include_query: bool = True,
) -> float:
    """Mean pairwise similarity over the evaluated list.

    The evaluated list is the retrieved ids plus the query item by default;
    ``include_query=False`` scores the retrieved ids alone.  Normalized by the
    actual pair count, so permutations of the list score identically.
    """
    ids = _result_ids(result)
    if include_query and query_id is not None and query_id not in ids:
        ids = [query_id] + ids
    # Defensive dedup: a repeated id would create meaningless self-pairs.
    seen: list[str] = []
    for item_id in ids:
        if item_id not in seen:
            seen.append(item_id)
    if len(seen) < 2:
        raise ValueError(f"need >= 2 distinct items to score a list, got {len(seen)}")
    total = 0.0
    pairs = 0
    for i, a in enumerate(seen):
        for b in seen[i + 1 :]:
            total += sim(a, b, ctx)
            pairs += 1
    return total / pairs


def frequent_description_words(
    catalog: Catalog, top_n: int = 8, stoplist: frozenset[str] = DEFAULT_STOPLIST
) -> list[str]:
    """Most common description tokens, stoplist excluded, ties lexicographic."""
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    counts: Counter[str] = Counter()
    for item_id in sorted(catalog.items):
        counts.update(
            w for w in tokenize(catalog.items[item_id].description) if w not in stoplist
        )
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [word for word, _ in ranked[:top_n]]


def build_test_queries(
    catalog: Catalog,
    n_queries: int,
    seed: int,
    test_fraction: float = 0.1,
    top_words: int = 8,
) -> list[tuple[str, str]]:
    """Held-out query items paired round-robin with frequent description words.

    Items come from the seeded test split; each gets one text query.  The
    split keeps test items in the candidate pool, so retrieval sees the whole
    catalog.
    """
    if n_queries < 1:
        raise ValueError(f"n_queries must be >= 1, got {n_queries}")
    _, test_ids = split(catalog, SplitSpec(test_fraction=test_fraction, seed=seed))
    words = frequent_description_words(catalog, top_n=top_words)
    if not words:
        raise ValueError("catalog descriptions yield no usable query words")
    ids = sorted(test_ids)
    rng = random.Random(seed)
    rng.shuffle(ids)
    chosen = ids[:n_queries]
    return [(item_id, words[i % len(words)]) for i, item_id in enumerate(chosen)]


@dataclass
class QueryScore:
    item_id: str
    text: str
    score: float


@dataclass
class EvalReport:
    method: str
    k: int
    seed: int | None
    query_scores: list[QueryScore] = field(default_factory=list)
    mean_ails: float = 0.0
    by_text: dict[str, float] = field(default_factory=dict)
    category_diversity: float = 0.0
    skipped: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "seed": self.seed,
            "queries": [
                {"item": q.item_id, "text": q.text, "ails": q.score}
                for q in self.query_scores
            ],
            "mean_ails": self.mean_ails,
            "by_text": {t: self.by_text[t] for t in sorted(self.by_text)},
            "category_diversity": self.category_diversity,
            "counts": {"evaluated": len(self.query_scores), "skipped": len(self.skipped)},
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def evaluate(
    method: RetrievalFn,
    test_queries: Sequence[tuple[str, str]],
    ctx: SimilarityContext,
    catalog: Catalog,
    k: int = 4,
    include_query: bool = True,
    seed: int | None = None,
    method_name: str = "",
) -> EvalReport:
    """Score a retrieval method: one AILS per (item, text) query, then the mean.

    A query whose method call raises (or returns too few items to score) is
    recorded under ``skipped`` and left out of the aggregates.
    """
    report = EvalReport(method=method_name, k=k, seed=seed)
    results: list[ResultList] = []
    by_text: dict[str, list[float]] = {}
    for item_id, text in test_queries:
        item = catalog.items.get(item_id)
        if item is None:
            report.skipped.append(f"{item_id}: unknown item")
            continue
        query = MultimodalQuery(visual=item.features, text=text, query_item_id=item_id)
        try:
            result = method(query, k)
            score = ails(result, ctx, query_id=item_id, include_query=include_query)
        except Exception as exc:  # noqa: BLE001 - per-query failures are data, not bugs
            report.skipped.append(f"{item_id}: {exc}")
            continue
        report.query_scores.append(QueryScore(item_id, text, score))
        results.append(result)
        by_text.setdefault(text, []).append(score)
    if report.query_scores:
        report.mean_ails = sum(q.score for q in report.query_scores) / len(report.query_scores)
    report.by_text = {t: sum(v) / len(v) for t, v in by_text.items()}
    report.category_diversity = category_diversity(results, catalog)
    return report


def category_diversity(results: Sequence[ResultList], catalog: Catalog) -> float:
    """Mean count of distinct result categories per query."""
    if not results:
        return 0.0
    total = 0
    for result in results:
        cats = {catalog.items[i].category for i in result.ids() if i in catalog.items}
        total += len(cats)
    return total / len(results)


def group_by_query_category(report: EvalReport, groups: dict[str, str]) -> dict[str, float]:
    """Mean AILS per group of text queries (e.g. material words vs color words)."""
    buckets: dict[str, list[float]] = {}
    for q in report.query_scores:
        if q.text not in groups:
            raise ValueError(f"text query {q.text!r} missing from the group map")
        buckets.setdefault(groups[q.text], []).append(q.score)
    return {g: sum(v) / len(v) for g, v in sorted(buckets.items())}


@dataclass
class SweepResult:
    n1_values: list[int]
    n2_values: list[int]
    n3: int
    rows: list[list[float]]  # rows[i][j] = mean AILS at (n1_values[i], n2_values[j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n1/n2"] + [str(v) for v in self.n2_values])
        for n1, row in zip(self.n1_values, self.rows):
            writer.writerow([str(n1)] + [repr(cell) for cell in row])
        return buf.getvalue()


def sweep_n1_n2(
    method_factory: Callable[[BlendParams], RetrievalFn],
    test_queries: Sequence[tuple[str, str]],
    ctx: SimilarityContext,
    catalog: Catalog,
    n1_values: Sequence[int],
    n2_values: Sequence[int],
    n3: int = 4,
    include_query: bool = True,
    seed: int | None = None,
) -> SweepResult:
    """Mean AILS of the blended pipeline at every (n1, n2) grid point, n3 fixed."""
    rows = []
    for n1 in n1_values:
        row = []
        for n2 in n2_values:
            method = method_factory(BlendParams(n1=n1, n2=n2, n3=n3))
            report = evaluate(
                method,
                test_queries,
                ctx,
                catalog,
                k=n3,
                include_query=include_query,
                seed=seed,
            )
            row.append(report.mean_ails)
        rows.append(row)
    return SweepResult(
        n1_values=list(n1_values), n2_values=list(n2_values), n3=n3, rows=rows
    )
