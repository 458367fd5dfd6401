"""Command-line driver: synth, ingest, train, index, query, eval, sweep, serve.

Exit codes: 1 usage error, 2 data error, 3 training failure.  Logs go to
standard error; results go to standard output or ``-o`` files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .blend import BlendParams
from .catalog import CatalogError, gen_synthetic, load_catalog, save_catalog
from .deepstyle import SiameseConfig, save_model, train_classifier, train_siamese
from .embed import (
    CbowConfig,
    EmptyVocabularyError,
    NonFiniteLossError,
    tokenize,
    train_cbow_with_losses,
    train_context,
)
from .engine import (
    METHODS,
    EngineError,
    description_vectors,
    load_engine,
    resolve_features,
)
from .evalkit import SimilarityContext, build_test_queries, evaluate, sweep_n1_n2
from .visfeat import save_features

log = logging.getLogger("stylesearch")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAIN = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_result(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_engine_from_args(args):
    return load_engine(
        args.catalog,
        args.word_vectors,
        features_path=getattr(args, "features", None),
        context_vectors_path=getattr(args, "context_vectors", None),
        deepstyle_path=getattr(args, "deepstyle_model", None),
        siamese_path=getattr(args, "siamese_model", None),
        seed=getattr(args, "seed", 1),
    )


def cmd_synth(args) -> int:
    try:
        catalog = gen_synthetic(
            args.items, args.styles, args.sets, seed=args.seed, feature_dim=args.feature_dim
        )
    except ValueError as exc:
        log.error("cannot generate catalog: %s", exc)
        return EXIT_DATA
    save_catalog(catalog, args.output)
    log.info(
        "wrote %d items, %d sets, %d categories to %s",
        len(catalog.items),
        len(catalog.sets),
        len(catalog.categories),
        args.output,
    )
    return EXIT_OK


def cmd_ingest(args) -> int:
    catalog = load_catalog(args.catalog)
    features = resolve_features(catalog, args.features)
    if args.output:
        save_catalog(catalog, args.output)
    summary = {
        "items": len(catalog.items),
        "sets": len(catalog.sets),
        "categories": catalog.categories,
        "feature_dim": catalog.feature_dim,
        "with_features": len(features),
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_train_embed(args) -> int:
    catalog = load_catalog(args.catalog)
    corpus = [tokenize(catalog.items[i].description) for i in sorted(catalog.items)]
    config = CbowConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.lr,
        min_count=args.min_count,
        seed=args.seed,
    )
    try:
        table, losses = train_cbow_with_losses(corpus, config)
    except (EmptyVocabularyError, NonFiniteLossError, ValueError) as exc:
        log.error("word embedding training failed: %s", exc)
        return EXIT_TRAIN
    table.save(args.output)
    log.info("trained %d word vectors (dim %d); epoch losses %s",
             len(table), table.dim, [round(x, 4) for x in losses])
    return EXIT_OK


def cmd_train_context(args) -> int:
    catalog = load_catalog(args.catalog)
    config = CbowConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.lr,
        min_count=1,
        seed=args.seed,
    )
    try:
        table = train_context(catalog, config)
    except (EmptyVocabularyError, NonFiniteLossError, ValueError) as exc:
        log.error("context embedding training failed: %s", exc)
        return EXIT_TRAIN
    table.save(args.output)
    log.info("trained %d context vectors (dim %d)", len(table), table.dim)
    return EXIT_OK


def _load_training_inputs(args):
    from .embed import EmbeddingTable

    catalog = load_catalog(args.catalog)
    table = EmbeddingTable.load(args.word_vectors)
    features = resolve_features(catalog, args.features)
    text_vectors = description_vectors(catalog, table)
    return catalog, features, text_vectors


def cmd_train_deepstyle(args) -> int:
    catalog, features, text_vectors = _load_training_inputs(args)
    try:
        block, train_log = train_classifier(
            catalog,
            features,
            text_vectors,
            epochs=args.epochs,
            learning_rate=args.lr,
            seed=args.seed,
            batch_size=args.batch_size,
            branch_dim=args.branch_dim,
        )
    except ValueError as exc:
        log.error("deepstyle training failed: %s", exc)
        return EXIT_TRAIN
    if train_log.skipped:
        log.warning("skipped %d items missing a modality: %s",
                    len(train_log.skipped), train_log.skipped[:10])
    save_model(block, args.output)
    log.info("epoch losses %s", [round(x, 4) for x in train_log.epoch_losses])
    return EXIT_OK


def cmd_train_siamese(args) -> int:
    catalog, features, text_vectors = _load_training_inputs(args)
    config = SiameseConfig(
        margin=args.margin,
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        pair_seed=args.seed,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
    )
    try:
        block, train_log = train_siamese(
            catalog, features, text_vectors, config, branch_dim=args.branch_dim
        )
    except ValueError as exc:
        log.error("siamese training failed: %s", exc)
        return EXIT_TRAIN
    if train_log.skipped:
        log.warning("skipped %d items missing a modality: %s",
                    len(train_log.skipped), train_log.skipped[:10])
    save_model(block, args.output)
    log.info("epoch losses %s", [round(x, 4) for x in train_log.epoch_losses])
    return EXIT_OK


def cmd_index(args) -> int:
    from .embed import EmbeddingTable

    catalog = load_catalog(args.catalog)
    table = EmbeddingTable.load(args.word_vectors)
    vectors = description_vectors(catalog, table)
    if not vectors:
        log.error("no item description overlaps the word-vector vocabulary")
        return EXIT_DATA
    save_features(vectors, table.dim, args.output)
    log.info("wrote %d description embeddings (dim %d) to %s",
             len(vectors), table.dim, args.output)
    return EXIT_OK


def cmd_query(args) -> int:
    engine = _load_engine_from_args(args)
    params = BlendParams(n1=args.n1, n2=args.n2)
    query = engine.resolve_query(item_id=args.item, text=args.text)
    result = engine.run(query, args.method, args.k, params=params)
    payload = {
        "method": args.method,
        "item_id": args.item,
        "text": args.text,
        "k": args.k,
        "warnings": result.warnings,
        "results": [
            {
                "id": e.item_id,
                "category": engine.catalog.items[e.item_id].category,
                "name": engine.catalog.items[e.item_id].name,
                "score": e.score,
                "provenance": e.provenance,
            }
            for e in result.entries
        ],
    }
    _write_result(json.dumps(payload, indent=2) + "\n", args.output)
    return EXIT_OK


def _eval_queries(args, engine):
    ctx = SimilarityContext.build(engine.catalog, top_n=args.frequent_words)
    queries = build_test_queries(
        engine.catalog,
        n_queries=args.queries,
        seed=args.seed,
        test_fraction=args.test_frac,
        top_words=args.top_words,
    )
    return ctx, queries


def cmd_eval(args) -> int:
    engine = _load_engine_from_args(args)
    if not engine.available()[args.method]:
        log.error("method %r is not available with the given artifacts", args.method)
        return EXIT_DATA
    ctx, queries = _eval_queries(args, engine)
    method = engine.method_fn(args.method, params=BlendParams(n1=args.n1, n2=args.n2))
    report = evaluate(
        method,
        queries,
        ctx,
        engine.catalog,
        k=args.k,
        include_query=not args.retrieved_only,
        seed=args.seed,
        method_name=args.method,
    )
    if report.skipped:
        log.warning("skipped %d queries", len(report.skipped))

    width = max([len("Average")] + [len(t) for t in report.by_text])
    lines = [f"{text:<{width}}  {report.by_text[text]:.4f}" for text in sorted(report.by_text)]
    lines.append(f"{'Average':<{width}}  {report.mean_ails:.4f}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return EXIT_OK


def cmd_sweep(args) -> int:
    engine = _load_engine_from_args(args)
    if engine.spaces.context_index is None:
        log.error("sweep needs the blended pipeline; provide --context-vectors")
        return EXIT_DATA
    ctx, queries = _eval_queries(args, engine)
    result = sweep_n1_n2(
        engine.early_factory(),
        queries,
        ctx,
        engine.catalog,
        n1_values=list(range(args.n1_min, args.n1_max + 1)),
        n2_values=list(range(args.n2_min, args.n2_max + 1)),
        n3=args.n3,
        include_query=not args.retrieved_only,
        seed=args.seed,
    )
    _write_result(result.to_csv(), args.output)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = _load_engine_from_args(args)
    app = create_app(engine, ui_dir=args.ui_dir)
    log.info("serving %d items on %s:%d", len(engine.catalog.items), args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _add_engine_flags(p: argparse.ArgumentParser, models: bool = True) -> None:
    p.add_argument("--catalog", required=True, help="catalog JSONL path")
    p.add_argument("--word-vectors", required=True, help="description word-vector file")
    p.add_argument("--features", default=None, help="feature file for feature_key items")
    p.add_argument("--context-vectors", default=None, help="item-id context-vector file")
    if models:
        p.add_argument("--deepstyle-model", default=None, help="classifier model file")
        p.add_argument("--siamese-model", default=None, help="siamese model file")


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--queries", type=int, default=50, help="number of test queries")
    p.add_argument("--test-frac", type=float, default=0.1, help="held-out item fraction")
    p.add_argument("--top-words", type=int, default=8, help="text-query vocabulary size")
    p.add_argument("--frequent-words", type=int, default=50,
                   help="frequent name words used by the similarity metric")
    p.add_argument("--retrieved-only", action="store_true",
                   help="score retrieved items only (exclude the query item)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stylesearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic style-clustered catalog")
    p.add_argument("--items", type=int, default=500)
    p.add_argument("--styles", type=int, default=8)
    p.add_argument("--sets", type=int, default=120)
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="catalog JSONL path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a catalog and echo its stats")
    p.add_argument("--catalog", required=True)
    p.add_argument("--features", default=None, help="feature file for feature_key items")
    p.add_argument("-o", "--output", default=None, help="rewrite a canonical catalog here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train-embed", help="train description word vectors")
    p.add_argument("--catalog", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train_embed)

    p = sub.add_parser("train-context", help="train item-id context vectors over sets")
    p.add_argument("--catalog", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train_context)

    for name, fn, extra in (
        ("train-deepstyle", cmd_train_deepstyle, False),
        ("train-siamese", cmd_train_siamese, True),
    ):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} on catalog items")
        p.add_argument("--catalog", required=True)
        p.add_argument("--word-vectors", required=True)
        p.add_argument("--features", default=None)
        p.add_argument("--epochs", type=int, default=10 if extra else 20)
        p.add_argument("--lr", type=float, default=0.05)
        p.add_argument("--batch-size", type=int, default=16)
        p.add_argument("--branch-dim", type=int, default=128)
        p.add_argument("--seed", type=int, default=1)
        if extra:
            p.add_argument("--margin", type=float, default=1.0)
            p.add_argument("--alpha", type=float, default=1.0)
            p.add_argument("--beta", type=float, default=1.0)
            p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("-o", "--output", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("index", help="precompute per-item description embeddings")
    p.add_argument("--catalog", required=True)
    p.add_argument("--word-vectors", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="run one multimodal query")
    _add_engine_flags(p)
    p.add_argument("--item", required=True, help="query item id")
    p.add_argument("--text", default="", help="text part of the query")
    p.add_argument("--method", choices=METHODS, default="early")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n1", type=int, default=3)
    p.add_argument("--n2", type=int, default=4)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score a method with the intra-list protocol")
    _add_engine_flags(p)
    p.add_argument("--method", choices=METHODS, default="early")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n1", type=int, default=3, help="visual candidates (blended pipeline)")
    p.add_argument("--n2", type=int, default=4, help="context neighbors per candidate")
    p.add_argument("--seed", type=int, default=1)
    _add_eval_flags(p)
    p.add_argument("-o", "--output", default=None, help="write the JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="mean-AILS grid over n1 x n2 for the blended pipeline")
    _add_engine_flags(p, models=False)
    p.add_argument("--n1-min", type=int, default=1)
    p.add_argument("--n1-max", type=int, default=5)
    p.add_argument("--n2-min", type=int, default=1)
    p.add_argument("--n2-max", type=int, default=5)
    p.add_argument("--n3", type=int, default=4)
    p.add_argument("--seed", type=int, default=1)
    _add_eval_flags(p)
    p.add_argument("-o", "--output", default=None, help="write the CSV matrix here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="serve the HTTP API")
    _add_engine_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ui-dir", default=None, help="static directory mounted at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CatalogError as exc:
        log.error("catalog error: %s", exc)
        return EXIT_DATA
    except EngineError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("cannot read or write: %s", exc)
        return EXIT_DATA
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
