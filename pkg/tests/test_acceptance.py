"""Top-level acceptance suite.

One test per shipping criterion. Each test carries its own oracle:
raw-source counts for ingest, generator-recorded ground truth for the
splitting and renumbering properties, full-traversal graph checks for
the knowledgebase, frozen golden bytes for the worked example, and
store hashes for service purity. A terminal-summary hook in conftest
prints one ACCEPTANCE PASS/FAIL line per criterion.
"""

import random
import re
from collections import Counter
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings

from paperstruct.anchors import ABSENT_FROM_ABSTRACT
from paperstruct.canon import canonical_bytes
from paperstruct.errors import (
    ConceptualModelNotInstantiable,
    MethodFlowNotQuestionable,
)
from paperstruct.ingest import RawSource, ingest, split_grouped_citations
from paperstruct.kb.records import RQ_COMPARISON, Dimension
from paperstruct.kb.store import KnowledgeBase
from paperstruct.library import LibraryStore, slugify
from paperstruct.model import Span, document_blocks, document_marks, reference_map
from paperstruct.navigation import build_toc
from paperstruct.references import (
    MODE_APPEARANCE,
    ReferenceOrder,
    RenumberMap,
    order_alphabetical,
    order_by_appearance,
    renumber,
)
from paperstruct.service import create_app
from tests.kb_machinery import check_invariants, random_mutation
from tests.strategies import cited_articles
from tests.worked_example import build_axon_model_kb

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden" / "axon_model_kb.json"


def _walk_entries(entries):
    for entry in entries:
        yield entry
        yield from _walk_entries(entry.children)


def _find_phrase(article, phrase):
    """Earliest span whose resolved text equals the phrase."""
    for block in document_blocks(article):
        at = block.text.find(phrase)
        if at >= 0:
            return Span(block.id, at, at + len(phrase))
    raise AssertionError(f"phrase {phrase!r} not in article")


def test_ingest_real_articles():
    for name in ("zhai2006.xml", "gosby2011.xml"):
        raw = RawSource.from_file(FIXTURES / name)
        article, report = ingest(raw)

        levels = {e.level for e in _walk_entries(build_toc(article))}
        assert levels and levels <= {1, 2}

        source_refs = len(re.findall(rb"<ref[ >]", raw.data))
        assert len(article.references) == source_refs == report.references_found

        refs = reference_map(article)
        for mark in document_marks(article):
            assert mark.resolved
            assert len(mark.target_ref_ids) == 1
            assert mark.target_ref_ids[0] in refs

        for warning in report.warnings:
            assert warning.code and warning.message


@settings(max_examples=200, deadline=None)
@given(gen=cited_articles())
def test_citation_split_properties(gen):
    before = gen.article.to_dict()
    split = split_grouped_citations(gen.article)
    assert gen.article.to_dict() == before

    observed = Counter()
    for mark in document_marks(split):
        assert len(mark.target_ref_ids) == 1
        observed[(mark.span.block_id, mark.span.start, mark.span.end,
                  mark.target_ref_ids[0])] += 1
    assert observed == Counter(gen.expected_pairs)

    assert split_grouped_citations(split).to_dict() == split.to_dict()


@settings(max_examples=200, deadline=None)
@given(gen=cited_articles())
def test_reference_toggle_properties(gen):
    article = split_grouped_citations(gen.article)
    refs = reference_map(article)
    appearance = order_by_appearance(article)
    alphabetical = order_alphabetical(article)
    assert sorted(appearance.sequence) == sorted(alphabetical.sequence) == sorted(refs)

    for order in (appearance, alphabetical):
        mapping, _ = renumber(article, order)
        assert mapping.is_bijection(len(refs))

    published = ReferenceOrder(
        mode=MODE_APPEARANCE,
        sequence=[r.id for r in sorted(article.references,
                                       key=lambda r: r.original_number)],
        warnings=[])
    _, toggled = renumber(article, alphabetical)
    _, restored = renumber(toggled, published)
    assert ([m.display_number for m in document_marks(restored)]
            == [m.display_number for m in document_marks(article)])

    assert ([m.target_ref_ids for m in document_marks(toggled)]
            == [m.target_ref_ids for m in document_marks(article)])

    new_number = {rid: i + 1 for i, rid in enumerate(appearance.sequence)}
    _, by_appearance = renumber(article, appearance)
    first_seen = []
    for mark in document_marks(by_appearance):
        rid = mark.target_ref_ids[0]
        if new_number[rid] not in first_seen:
            first_seen.append(new_number[rid])
    assert first_seen == list(range(1, len(first_seen) + 1))


def test_kb_structural_invariants():
    rng = random.Random(20260823)
    kb = KnowledgeBase()
    attempts = 0
    while len(kb.log) < 1000:
        random_mutation(kb, rng)
        attempts += 1
        assert attempts < 5000, "mutation generator starved"
        if len(kb.log) % 200 == 0:
            check_invariants(kb, rng)
    check_invariants(kb, rng)
    assert len(kb.log) >= 1000

    fixed = build_axon_model_kb()
    with pytest.raises(ConceptualModelNotInstantiable):
        fixed.instantiate_flow("f1")
    with pytest.raises(MethodFlowNotQuestionable):
        fixed.define_rq(RQ_COMPARISON, ["f3"])


def test_axon_model_golden():
    kb = build_axon_model_kb()

    assert kb.query_determinants("nad", "availability") == [("f1", "nmnat")]
    rq = kb.research_questions["rq1"]
    assert rq.kind == RQ_COMPARISON
    assert rq.model_ids == ["f1", "f2"]

    built = canonical_bytes(kb.to_dict())
    assert built == GOLDEN.read_bytes()
    assert canonical_bytes(build_axon_model_kb().to_dict()) == built

    replayed = KnowledgeBase.replay(kb.log, article_id=kb.article_id)
    assert canonical_bytes(replayed.to_dict()) == built


def test_anchor_context_summaries(tmp_path):
    lib = LibraryStore()
    article, _ = ingest(RawSource.from_file(FIXTURES / "zhai2006.xml"))
    lib.add_article(article)

    topic = "light-induced neurodegeneration"
    span = _find_phrase(article, topic)
    assert not span.block_id.startswith("abs/")
    for block in article.abstract:
        assert topic not in block.text

    anchor = lib.registry.register_anchor(article.id, span, topic_label=topic)
    lib.registry.annotate_mention(anchor.id, span)

    summary = lib.registry.context_summary(anchor.id)
    assert summary.entries[0].kind == "first_introduction"
    assert summary.entries[0].span == span
    absent = summary.entries[-1]
    assert absent.kind == "abstract_presence"
    assert absent.span is None
    assert absent.excerpt == ABSENT_FROM_ABSTRACT

    once = canonical_bytes(summary.to_dict())
    assert canonical_bytes(lib.registry.context_summary(anchor.id).to_dict()) == once

    lib.save(tmp_path / "store")
    reloaded = LibraryStore.load(tmp_path / "store")
    assert canonical_bytes(
        reloaded.registry.context_summary(anchor.id).to_dict()) == once


def test_persistence_round_trip(tmp_path):
    lib = LibraryStore()
    zhai, _ = ingest(RawSource.from_file(FIXTURES / "zhai2006.xml"))
    minimal, _ = ingest(RawSource.from_file(FIXTURES / "minimal.xml"))
    lib.add_article(zhai)
    lib.add_article(minimal)
    lib.kbs[zhai.id].add_class("axon", dimensions=[
        Dimension("integrity", ["intact", "degenerated"])])
    lib.kbs[minimal.id].add_class("axon", dimensions=[
        Dimension("integrity", ["pristine", "lost"])])
    anchor = lib.registry.register_anchor(minimal.id, Span("s1/b0", 0, 10))
    lib.registry.link_citation(zhai.id, "s1/b0/c0", anchor.id, "discusses")

    lib.save(tmp_path / "store")
    loaded = LibraryStore.load(tmp_path / "store")
    assert canonical_bytes(loaded.snapshot()) == canonical_bytes(lib.snapshot())
    assert loaded.store_hash() == lib.store_hash()

    for aid, kb in loaded.kbs.items():
        replayed = KnowledgeBase.replay(kb.log, article=loaded.articles[aid],
                                        article_id=aid)
        assert canonical_bytes(replayed.to_dict()) == canonical_bytes(kb.to_dict())

    lint = loaded.consistency_lint()
    assert any(c["dimension"] == "integrity" for c in lint["conflicts"])

    loaded.remove_article(minimal.id)
    dangling = loaded.consistency_lint()["dangling"]
    assert any(d["kind"] == "dangling_anchor" for d in dangling)


def test_service_get_purity():
    lib = LibraryStore()
    zhai, _ = ingest(RawSource.from_file(FIXTURES / "zhai2006.xml"))
    minimal, _ = ingest(RawSource.from_file(FIXTURES / "minimal.xml"))
    lib.add_article(zhai)
    lib.add_article(minimal)
    anchor = lib.registry.register_anchor(minimal.id, Span("s1/b0", 0, 10))
    lib.registry.link_citation(zhai.id, "s1/b0/c0", anchor.id, "discusses")
    client = TestClient(create_app(lib))
    min_slug = slugify(minimal.id)
    zhai_slug = slugify(zhai.id)

    for slug, article in ((min_slug, minimal), (zhai_slug, zhai)):
        for mode in ("appearance", "alphabetical"):
            body = client.get(f"/articles/{slug}/references",
                              params={"order": mode}).json()
            mapping = RenumberMap.from_dict(body["renumber_map"])
            assert mapping.is_bijection(len(article.references))

    before = lib.store_hash()
    gets = [
        "/articles",
        f"/articles/{min_slug}",
        f"/articles/{zhai_slug}",
        f"/articles/{min_slug}/toc",
        f"/articles/{min_slug}/toc?selected=s2",
        f"/articles/{zhai_slug}/toc",
        f"/articles/{min_slug}/references",
        f"/articles/{zhai_slug}/references?order=alphabetical",
        f"/articles/{min_slug}/blocks",
        f"/articles/{min_slug}/model",
        f"/articles/{min_slug}/backlinks",
        "/anchors/a1/context",
    ]
    for i in range(100):
        assert client.get(gets[i % len(gets)]).status_code == 200
    assert lib.store_hash() == before
