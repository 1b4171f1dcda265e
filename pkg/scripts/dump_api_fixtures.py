"""Regenerate the frontend test stubs from real service responses.

The reader view-model is tested against canned API payloads. Dumping
them from the live service keeps the stubs byte-faithful to what the
backend actually serves. Run from the repository root:

    python3 scripts/dump_api_fixtures.py
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fastapi.testclient import TestClient

from paperstruct.ingest import RawSource, ingest
from paperstruct.kb.records import FLOW_METHOD
from paperstruct.library import LibraryStore, slugify
from paperstruct.model import Span, document_blocks
from paperstruct.service import create_app

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
OUT = ROOT / "frontend" / "tests" / "fixtures"


def find_phrase(article, phrase):
    for block in document_blocks(article):
        at = block.text.find(phrase)
        if at >= 0:
            return Span(block.id, at, at + len(phrase))
    raise SystemExit(f"phrase {phrase!r} not found")


def build_library() -> LibraryStore:
    lib = LibraryStore()
    zhai, _ = ingest(RawSource.from_file(FIXTURES / "zhai2006.xml"))
    minimal, _ = ingest(RawSource.from_file(FIXTURES / "minimal.xml"))
    lib.add_article(zhai)
    lib.add_article(minimal)

    kb = lib.kbs[minimal.id]
    kb.define_flow(FLOW_METHOD, "probe assay")
    kb.define_activity_block(Span("s2.1/b0", 0, 15), "test the effect",
                             flows=["f1"],
                             result_spans=[Span("s2.2/b0", 0, 18)])

    topic = "light-induced neurodegeneration"
    span = find_phrase(zhai, topic)
    anchor = lib.registry.register_anchor(zhai.id, span, topic_label=topic)
    lib.registry.annotate_mention(anchor.id, span)
    lib.registry.link_citation(minimal.id, "s2.1/b0/c0", anchor.id,
                               "cites_as_evidence")
    return lib


def main() -> int:
    lib = build_library()
    client = TestClient(create_app(lib))
    zhai_slug = slugify("10.1371/journal.pbio.0040416")
    min_slug = slugify("10.1371/journal.ptest.0000001")

    dumps = {
        "articles.json": "/articles",
        "article_minimal.json": f"/articles/{min_slug}",
        "article_zhai.json": f"/articles/{zhai_slug}",
        "toc_minimal_default.json": f"/articles/{min_slug}/toc",
        "toc_minimal_s1.json": f"/articles/{min_slug}/toc?selected=s1",
        "toc_minimal_s2.json": f"/articles/{min_slug}/toc?selected=s2",
        "toc_zhai_default.json": f"/articles/{zhai_slug}/toc",
        "refs_minimal_appearance.json":
            f"/articles/{min_slug}/references?order=appearance",
        "refs_minimal_alphabetical.json":
            f"/articles/{min_slug}/references?order=alphabetical",
        "refs_zhai_appearance.json":
            f"/articles/{zhai_slug}/references?order=appearance",
        "backlinks_minimal.json": f"/articles/{min_slug}/backlinks",
        "backlinks_zhai.json": f"/articles/{zhai_slug}/backlinks",
        "context_a1.json": "/anchors/a1/context",
    }
    OUT.mkdir(parents=True, exist_ok=True)
    index = {}
    for name, url in dumps.items():
        resp = client.get(url)
        resp.raise_for_status()
        (OUT / name).write_text(
            json.dumps(resp.json(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8")
        index[url] = name
        print(f"wrote {name} <- GET {url}")
    (OUT / "index.json").write_text(
        json.dumps(index, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
