import numpy as np
import pytest

from stylesearch.catalog import Catalog, CompatibleSet, Item, gen_synthetic
from stylesearch.deepstyle import SiameseConfig, train_classifier, train_siamese
from stylesearch.embed import CbowConfig, tokenize, train_cbow, train_context
from stylesearch.engine import build_engine, description_vectors


def build_catalog(item_specs, set_specs=(), feature_dim=4):
    """Assemble a catalog in memory.

    item_specs: (id, category, name, description, features) tuples; features
    may be None.  set_specs: (set_id, [member ids]) tuples.  Item.set_ids is
    filled in sorted set order, mirroring what loading from disk produces.
    """
    categories = sorted({spec[1] for spec in item_specs})
    items = {}
    for item_id, category, name, description, features in item_specs:
        items[item_id] = Item(
            id=item_id,
            category=category,
            name=name,
            description=description,
            features=None if features is None else np.asarray(features, dtype=np.float64),
        )
    sets = {}
    for set_id, member_ids in set_specs:
        sets[set_id] = CompatibleSet(id=set_id, item_ids=list(member_ids))
    for set_id in sorted(sets):
        for item_id in sets[set_id].item_ids:
            items[item_id].set_ids.append(set_id)
    return Catalog(items=items, sets=sets, categories=categories, feature_dim=feature_dim)


@pytest.fixture(scope="session")
def synth_catalog():
    return gen_synthetic(120, 6, 30, seed=11)


@pytest.fixture(scope="session")
def synth_word_table(synth_catalog):
    corpus = [
        tokenize(synth_catalog.items[i].description) for i in sorted(synth_catalog.items)
    ]
    return train_cbow(corpus, CbowConfig(dim=16, epochs=6, seed=5))


@pytest.fixture(scope="session")
def engine_world():
    """A small catalog with every retrieval method armed.

    Returns (engine, catalog, word_table, context_table, deepstyle_block,
    siamese_block); tests must leave the shared state untouched.
    """
    catalog = gen_synthetic(60, 4, 15, seed=7)
    corpus = [tokenize(catalog.items[i].description) for i in sorted(catalog.items)]
    word_table = train_cbow(corpus, CbowConfig(dim=12, epochs=4, seed=3))
    context_table = train_context(catalog, CbowConfig(dim=10, window=3, epochs=8, seed=3))
    desc_vecs = description_vectors(catalog, word_table)
    features = {i: catalog.items[i].features for i in sorted(catalog.items)}
    ds_block, _ = train_classifier(
        catalog, features, desc_vecs, epochs=3, seed=2, branch_dim=8
    )
    si_block, _ = train_siamese(
        catalog, features, desc_vecs,
        SiameseConfig(epochs=3, pair_seed=2), branch_dim=8,
    )
    engine = build_engine(
        catalog,
        word_table,
        context_table=context_table,
        deepstyle_block=ds_block,
        siamese_block=si_block,
        seed=5,
    )
    return engine, catalog, word_table, context_table, ds_block, si_block
