"""HTTP API tests: endpoint shapes, error mapping, and GET purity."""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from paperstruct.kb.records import Participant
from paperstruct.library import LibraryStore, slugify
from paperstruct.model import Span
from paperstruct.service import create_app

FIXTURES = Path(__file__).parent / "fixtures"

ZHAI_ID = "10.1371/journal.pbio.0040416"
MIN_ID = "10.1371/journal.ptest.0000001"
ZHAI = slugify(ZHAI_ID)
MIN = slugify(MIN_ID)


@pytest.fixture()
def library(zhai, minimal):
    lib = LibraryStore()
    lib.add_article(zhai)
    lib.add_article(minimal)
    return lib


@pytest.fixture()
def client(library):
    return TestClient(create_app(library))


class TestArticleEndpoints:
    def test_list_articles(self, client):
        body = client.get("/articles").json()
        ids = [row["id"] for row in body["articles"]]
        assert ids == sorted(ids)
        assert ZHAI_ID in ids and MIN_ID in ids
        for row in body["articles"]:
            assert set(row) == {"id", "slug", "title", "authors"}
            assert "/" not in row["slug"]

    def test_get_article_by_slug(self, client):
        body = client.get(f"/articles/{MIN}").json()
        assert body["id"] == MIN_ID
        assert body["sections"]

    def test_unknown_article_404(self, client):
        resp = client.get("/articles/nope")
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownArticle"


class TestTocEndpoint:
    def test_plain_toc(self, client):
        body = client.get(f"/articles/{MIN}/toc").json()
        assert body["selected"] is None
        labels = [e["label"] for e in body["entries"]]
        assert labels[0] == "Introduction"
        assert "Results" in labels

    def test_fisheye_selection(self, client):
        body = client.get(f"/articles/{MIN}/toc", params={"selected": "s2"}).json()
        assert body["selected"] == "s2"
        labels = [e["label"] for e in body["entries"]]
        assert labels == ["Introduction", "Results", "First finding",
                          "Second finding", "Discussion"]

    def test_unknown_section_404(self, client):
        resp = client.get(f"/articles/{MIN}/toc", params={"selected": "s99"})
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownSection"

    def test_toc_includes_kb_blocks(self, client, library):
        kb = library.kb_for(MIN)
        kb.define_flow("method_flow", "probe")
        kb.define_activity_block(Span("s2.1/b0", 0, 15), "check", flows=["f1"])
        body = client.get(f"/articles/{MIN}/toc").json()
        flat = []

        def walk(entries):
            for e in entries:
                flat.append(e)
                walk(e["children"])

        walk(body["entries"])
        assert any(e["kind"] == "activity_block" for e in flat)


class TestReferencesEndpoint:
    def test_appearance_order(self, client):
        body = client.get(f"/articles/{MIN}/references").json()
        assert body["mode"] == "appearance"
        assert len(body["order"]) == 4
        pairs = body["renumber_map"]
        old = {int(k) for k in pairs}
        new = set(pairs.values())
        assert old == new == set(range(1, 5))

    def test_alphabetical_order(self, client):
        body = client.get(f"/articles/{MIN}/references",
                          params={"order": "alphabetical"}).json()
        surnames = [r["authors"][0]["surname"] for r in body["order"]]
        assert surnames == sorted(surnames, key=str.casefold)

    def test_invalid_mode_400(self, client):
        resp = client.get(f"/articles/{MIN}/references", params={"order": "random"})
        assert resp.status_code == 400
        assert resp.json()["error"] == "InvalidOrderMode"


class TestModelEndpoints:
    def test_blocks_endpoint(self, client, library):
        kb = library.kb_for(MIN)
        kb.define_flow("method_flow", "probe")
        kb.define_activity_block(Span("s2.1/b0", 0, 15), "check", flows=["f1"])
        body = client.get(f"/articles/{MIN}/blocks").json()
        assert [b["id"] for b in body["blocks"]] == ["ab1"]

    def test_model_endpoint(self, client, library):
        library.kb_for(MIN).add_class("Axon")
        body = client.get(f"/articles/{MIN}/model").json()
        assert body["article_id"] == MIN_ID
        assert body["classes"][0]["id"] == "axon"

    def test_context_endpoint(self, client, library):
        library.registry.register_anchor(MIN_ID, Span("s1/b0", 0, 10), "prior work")
        body = client.get("/anchors/a1/context").json()
        assert body["anchor_id"] == "a1"
        assert body["entries"][-1]["kind"] == "abstract_presence"

    def test_unknown_anchor_404(self, client):
        resp = client.get("/anchors/a9/context")
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownAnchor"

    def test_backlinks_endpoint(self, client, library):
        library.registry.register_anchor(MIN_ID, Span("s1/b0", 0, 10), "prior work")
        library.registry.link_citation(ZHAI_ID, "s1/b0/c0", "a1", "discusses")
        body = client.get(f"/articles/{MIN}/backlinks").json()
        assert [l["citing_article_id"] for l in body["backlinks"]] == [ZHAI_ID]

    def test_usages_endpoint(self, client, library):
        kb = library.kb_for(MIN)
        kb.add_class("Tissue")
        kb.add_instrument("Confocal", instrument_id="confocal-1")
        kb.define_flow("method_flow", "count cells",
                       participants=[Participant("tissue", "measured")], is_measurement=True)
        kb.attach_dataset("f1", instruments=["confocal-1"])
        body = client.get("/instruments/confocal-1/usages").json()
        assert body["instrument_id"] == "confocal-1"
        assert body["groups"]["count cells|measured:tissue"] == [[MIN_ID, "f1"]]

    def test_unknown_instrument_404(self, client):
        resp = client.get("/instruments/ghost/usages")
        assert resp.status_code == 404


class TestWrites:
    def test_ingest_upload(self, client):
        data = (FIXTURES / "minimal.xml").read_bytes()
        resp = client.post("/ingest", files={"file": ("fresh.xml", data, "text/xml")})
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["references_found"] == 4
        assert client.get(f"/articles/{body['slug']}").status_code == 200

    def test_ingest_bad_xml_400(self, client):
        resp = client.post("/ingest", files={"file": ("bad.xml", b"<article>", "text/xml")})
        assert resp.status_code == 400
        assert resp.json()["error"] == "MalformedXml"

    def test_ingest_persists_when_rooted(self, tmp_path):
        lib = LibraryStore(root=tmp_path / "store")
        c = TestClient(create_app(lib))
        data = (FIXTURES / "minimal.xml").read_bytes()
        resp = c.post("/ingest", files={"file": ("saved.xml", data, "text/xml")})
        reloaded = LibraryStore.load(tmp_path / "store")
        assert resp.json()["article_id"] in reloaded.articles

    def test_kb_commands(self, client, library):
        commands = [
            {"op": "add_class", "name": "Axon",
             "dimensions": [{"name": "integrity", "states": ["intact", "lost"]}]},
            {"op": "instantiate", "class_id": "axon"},
        ]
        resp = client.post(f"/kb/{MIN}/commands", json={"commands": commands})
        assert resp.status_code == 200
        assert resp.json()["applied"] == 2
        kb = library.kb_for(MIN)
        assert "axon" in kb.classes and "i1" in kb.instances

    def test_kb_command_failure_reports_progress(self, client, library):
        commands = [
            {"op": "add_class", "name": "Axon"},
            {"op": "instantiate", "class_id": "ghost"},
        ]
        resp = client.post(f"/kb/{MIN}/commands", json=commands)
        assert resp.status_code == 400
        body = resp.json()
        assert body["error"] == "UnknownClass"
        assert body["applied"] == 1
        assert "axon" in library.kb_for(MIN).classes

    def test_kb_bad_payload_400(self, client):
        resp = client.post(f"/kb/{MIN}/commands", json={"commands": "nope"})
        assert resp.status_code == 400

    def test_kb_unknown_article_404(self, client):
        resp = client.post("/kb/ghost/commands", json=[])
        assert resp.status_code == 404


class TestGetPurity:
    def test_mixed_gets_leave_hash_unchanged(self, client, library):
        kb = library.kb_for(MIN)
        kb.add_class("Tissue")
        kb.add_instrument("Confocal", instrument_id="confocal-1")
        kb.define_flow("method_flow", "count cells",
                       participants=[Participant("tissue", "measured")], is_measurement=True)
        kb.attach_dataset("f1", instruments=["confocal-1"])
        kb.define_activity_block(Span("s2.1/b0", 0, 15), "count", flows=["f1"])
        library.registry.register_anchor(MIN_ID, Span("s1/b0", 0, 10), "prior work")
        library.registry.link_citation(ZHAI_ID, "s1/b0/c0", "a1", "discusses")
        before = library.store_hash()
        gets = [
            "/articles",
            f"/articles/{MIN}",
            f"/articles/{ZHAI}",
            f"/articles/{MIN}/toc",
            f"/articles/{MIN}/toc?selected=s2",
            f"/articles/{MIN}/references",
            f"/articles/{MIN}/references?order=alphabetical",
            f"/articles/{ZHAI}/references",
            f"/articles/{MIN}/blocks",
            f"/articles/{MIN}/model",
            f"/articles/{MIN}/backlinks",
            "/anchors/a1/context",
            "/instruments/confocal-1/usages",
        ]
        for i in range(100):
            resp = client.get(gets[i % len(gets)])
            assert resp.status_code == 200
        assert library.store_hash() == before
