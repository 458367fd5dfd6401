import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from stylesearch.engine import METHODS, build_engine
from stylesearch.service import create_app

from test_blend import table_from


@pytest.fixture(scope="module")
def client(engine_world):
    return TestClient(create_app(engine_world[0]))


@pytest.fixture(scope="module")
def degraded_client(engine_world):
    # word table with no vocabulary overlap: only the random baseline stays up
    catalog = engine_world[1]
    nonsense = table_from({"qqq": np.array([1.0, 0.0])})
    engine = build_engine(catalog, nonsense)
    return TestClient(create_app(engine))


def assert_error(resp, status, code):
    assert resp.status_code == status
    body = resp.json()
    assert set(body) == {"error"}
    assert body["error"]["code"] == code
    assert isinstance(body["error"]["message"], str) and body["error"]["message"]


class TestHealth:
    def test_health(self, client, engine_world):
        catalog = engine_world[1]
        body = client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["items"] == len(catalog.items)
        assert body["sets"] == len(catalog.sets)
        assert body["feature_dim"] == catalog.feature_dim
        assert body["methods"] == {m: True for m in METHODS}
        assert body["fingerprints"] == {}

    def test_methods_listing(self, client):
        body = client.get("/api/methods").json()
        assert [m["name"] for m in body["methods"]] == list(METHODS)
        assert all(m["ready"] for m in body["methods"])

    def test_methods_reflect_missing_artifacts(self, degraded_client):
        ready = {m["name"]: m["ready"] for m in degraded_client.get("/api/methods").json()["methods"]}
        assert ready == {
            "late": False, "early": False, "deepstyle": False,
            "siamese": False, "random": True,
        }


class TestItems:
    def test_detail(self, client, engine_world):
        catalog = engine_world[1]
        iid = sorted(catalog.items)[0]
        body = client.get(f"/api/items/{iid}").json()
        item = catalog.items[iid]
        assert body["id"] == iid
        assert body["category"] == item.category
        assert body["name"] == item.name
        assert body["description"] == item.description
        assert body["set_ids"] == list(item.set_ids)
        assert body["has_features"] is True

    def test_detail_unknown(self, client):
        assert_error(client.get("/api/items/nope"), 404, "unknown_item")

    def test_listing_pages(self, client, engine_world):
        catalog = engine_world[1]
        body = client.get("/api/items").json()
        assert body["total"] == len(catalog.items)
        assert body["page"] == 1
        assert body["page_size"] == 24
        assert body["pages"] == math.ceil(len(catalog.items) / 24)
        assert len(body["items"]) == 24
        assert body["categories"] == list(catalog.categories)

        last = client.get(f"/api/items?page={body['pages']}").json()
        assert 1 <= len(last["items"]) <= 24
        beyond = client.get(f"/api/items?page={body['pages'] + 1}").json()
        assert beyond["items"] == []

    def test_listing_covers_all_ids_in_order(self, client, engine_world):
        catalog = engine_world[1]
        seen = []
        page = 1
        while True:
            body = client.get(f"/api/items?page={page}&page_size=17").json()
            seen += [i["id"] for i in body["items"]]
            if page >= body["pages"]:
                break
            page += 1
        assert seen == sorted(catalog.items)

    def test_category_filter(self, client, engine_world):
        catalog = engine_world[1]
        cat = catalog.categories[0]
        expect = [i for i in sorted(catalog.items) if catalog.items[i].category == cat]
        body = client.get(f"/api/items?category={cat}&page_size=100").json()
        assert [i["id"] for i in body["items"]] == expect
        assert body["total"] == len(expect)

    def test_unknown_category_is_empty(self, client):
        body = client.get("/api/items?category=spaceship").json()
        assert body["items"] == [] and body["total"] == 0 and body["pages"] == 1

    def test_bad_page(self, client):
        assert_error(client.get("/api/items?page=0"), 400, "bad_request")
        assert_error(client.get("/api/items?page=abc"), 400, "bad_request")

    def test_page_size_clamped(self, client):
        assert client.get("/api/items?page_size=1000").json()["page_size"] == 100
        assert client.get("/api/items?page_size=-3").json()["page_size"] == 1


class TestQueryParity:
    def test_twenty_random_queries_match_in_process(self, client, engine_world):
        engine, catalog = engine_world[0], engine_world[1]
        ids = sorted(catalog.items)
        texts = ["wool room", "blue", "soft fabric", "plain"]
        ks = [1, 4, 7, 10]
        n = 0
        for i in range(20):
            iid = ids[(i * 3) % len(ids)]
            method = METHODS[i % len(METHODS)]
            text = texts[i % len(texts)]
            k = ks[i % len(ks)]
            resp = client.post(
                "/api/query", json={"item_id": iid, "text": text, "method": method, "k": k}
            )
            assert resp.status_code == 200
            q = engine.resolve_query(item_id=iid, text=text)
            expect = engine.run(q, method, k)
            assert [r["id"] for r in resp.json()["results"]] == expect.ids()
            n += 1
        assert n == 20

    def test_params_are_honored(self, client, engine_world):
        engine, catalog = engine_world[0], engine_world[1]
        iid = sorted(catalog.items)[4]
        from stylesearch.blend import BlendParams

        resp = client.post(
            "/api/query",
            json={
                "item_id": iid, "text": "wool room", "method": "early", "k": 4,
                "params": {"n1": 1, "n2": 1},
            },
        )
        q = engine.resolve_query(item_id=iid, text="wool room")
        expect = engine.run(q, "early", 4, params=BlendParams(n1=1, n2=1))
        assert [r["id"] for r in resp.json()["results"]] == expect.ids()

    def test_inline_features_query(self, client, engine_world):
        engine, catalog = engine_world[0], engine_world[1]
        iid = sorted(catalog.items)[9]
        vec = [float(x) for x in engine.features[iid]]
        resp = client.post(
            "/api/query", json={"features": vec, "text": "wool", "method": "late", "k": 3}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["item_id"] is None
        # the item itself is not excluded for inline queries, so it comes first
        assert body["results"][0]["id"] == iid


class TestQueryPayload:
    def test_response_shape(self, client, engine_world):
        catalog = engine_world[1]
        iid = sorted(catalog.items)[0]
        body = client.post(
            "/api/query", json={"item_id": iid, "text": "wool room", "method": "early", "k": 4}
        ).json()
        assert body["method"] == "early"
        assert body["k"] == 4
        assert body["item_id"] == iid
        assert body["text"] == "wool room"
        assert isinstance(body["warnings"], list)
        assert isinstance(body["timing_ms"], float)
        for row in body["results"]:
            assert set(row) == {"id", "category", "name", "description", "score", "provenance"}
            assert row["id"] in catalog.items
            assert isinstance(row["provenance"], dict)

    def test_oov_text_warning_surfaces(self, client, engine_world):
        catalog = engine_world[1]
        iid = sorted(catalog.items)[0]
        body = client.post(
            "/api/query", json={"item_id": iid, "text": "qqqzzz", "method": "late", "k": 3}
        ).json()
        assert len(body["warnings"]) == 1

    def test_identical_queries_identical_answers(self, client, engine_world):
        catalog = engine_world[1]
        iid = sorted(catalog.items)[7]
        payload = {"item_id": iid, "text": "wool", "method": "random", "k": 5}
        a = client.post("/api/query", json=payload).json()
        b = client.post("/api/query", json=payload).json()
        a.pop("timing_ms"), b.pop("timing_ms")
        assert a == b


class TestQueryErrors:
    def test_unknown_item(self, client):
        assert_error(
            client.post("/api/query", json={"item_id": "nope", "text": "w"}),
            404, "unknown_item",
        )

    def test_method_unavailable(self, degraded_client, engine_world):
        catalog = engine_world[1]
        iid = sorted(catalog.items)[0]
        assert_error(
            degraded_client.post(
                "/api/query", json={"item_id": iid, "text": "w", "method": "early"}
            ),
            409, "method_unavailable",
        )

    def test_dimension_mismatch(self, client):
        assert_error(
            client.post("/api/query", json={"features": [1.0, 2.0], "text": "w"}),
            422, "dimension_mismatch",
        )

    def test_invalid_json_body(self, client):
        resp = client.post(
            "/api/query", content=b"{nope", headers={"content-type": "application/json"}
        )
        assert_error(resp, 400, "bad_request")

    def test_non_object_body(self, client):
        assert_error(client.post("/api/query", json=[1, 2]), 400, "bad_request")

    def test_both_sources(self, client, engine_world):
        catalog = engine_world[1]
        iid = sorted(catalog.items)[0]
        assert_error(
            client.post("/api/query", json={"item_id": iid, "features": [1.0], "text": "w"}),
            400, "bad_request",
        )
        assert_error(client.post("/api/query", json={"text": "w"}), 400, "bad_request")

    @pytest.mark.parametrize("k", [0, 51, "4", True, 2.5])
    def test_bad_k(self, client, engine_world, k):
        iid = sorted(engine_world[1].items)[0]
        assert_error(
            client.post("/api/query", json={"item_id": iid, "text": "w", "k": k}),
            400, "bad_request",
        )

    @pytest.mark.parametrize(
        "payload",
        [
            {"item_id": 5, "text": "w"},
            {"features": "abc", "text": "w"},
            {"text": 5},
            {"method": 3},
            {"method": "hybrid"},
            {"params": "n1=1"},
            {"params": {"n1": 0}},
            {"params": {"n1": "x"}},
        ],
    )
    def test_bad_fields(self, client, engine_world, payload):
        if "item_id" not in payload and "features" not in payload:
            payload = {"item_id": sorted(engine_world[1].items)[0], "text": "w", **payload}
        assert_error(client.post("/api/query", json=payload), 400, "bad_request")


class TestStaticUi:
    def test_mounted_ui_is_served(self, engine_world, tmp_path):
        (tmp_path / "index.html").write_text("<h1>style search</h1>")
        app = create_app(engine_world[0], ui_dir=str(tmp_path))
        client = TestClient(app)
        resp = client.get("/")
        assert resp.status_code == 200
        assert "style search" in resp.text
        assert client.get("/api/health").json()["status"] == "ok"
