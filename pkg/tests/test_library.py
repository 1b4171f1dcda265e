"""Library store: persistence, clustering, cross-store consistency."""

import json

import pytest

from factories import simple_cited_article
from paperstruct.canon import canonical_json
from paperstruct.errors import CorruptStore, UnknownArticle, UnknownInstrument
from paperstruct.kb import Dimension, KnowledgeBase, Participant
from paperstruct.library import LibraryStore, method_signature, slugify
from paperstruct.model import Span


def measurement_kb(article, flow_name="count cells", role="measured",
                   instrument_id="confocal-1"):
    kb = KnowledgeBase(article=article)
    kb.add_class("tissue")
    flow = kb.define_flow("method_flow", flow_name,
                          participants=[Participant("tissue", role)],
                          is_measurement=True)
    kb.add_instrument("confocal microscope", instrument_id=instrument_id)
    kb.attach_dataset(flow.id, instruments=[instrument_id])
    return kb


@pytest.fixture
def two_article_library(zhai, minimal):
    lib = LibraryStore()
    lib.add_article(zhai)
    kb = lib.add_article(minimal)
    kb.add_class("effect", dimensions=[Dimension("presence", ["seen", "unseen"])])
    anchor = lib.registry.register_anchor(minimal.id, Span("s1/b0", 0, 10),
                                          "prior work")
    lib.registry.annotate_mention(anchor.id, Span("s1/b0", 0, 10))
    lib.registry.link_citation(zhai.id, "s1/b0/c0", anchor.id, "discusses")
    return lib


class TestPersistence:
    def test_round_trip(self, two_article_library, tmp_path):
        two_article_library.save(tmp_path)
        loaded = LibraryStore.load(tmp_path)
        assert canonical_json(loaded.snapshot()) == \
            canonical_json(two_article_library.snapshot())

    def test_doi_ids_become_safe_directories(self, two_article_library,
                                             tmp_path, zhai):
        two_article_library.save(tmp_path)
        slug = slugify(zhai.id)
        assert "/" not in slug
        assert (tmp_path / "articles" / slug / "article.json").exists()

    def test_load_empty_directory(self, tmp_path):
        lib = LibraryStore.load(tmp_path)
        assert lib.articles == {}
        assert lib.consistency_lint() == {"conflicts": [], "dangling": []}

    def test_truncated_json_names_the_file(self, two_article_library, tmp_path):
        two_article_library.save(tmp_path)
        victim = next((tmp_path / "articles").iterdir()) / "kb.json"
        victim.write_text(victim.read_text()[:40], encoding="utf-8")
        with pytest.raises(CorruptStore) as err:
            LibraryStore.load(tmp_path)
        assert str(victim) in str(err.value)

    def test_schema_violation_names_the_file(self, two_article_library,
                                             tmp_path):
        two_article_library.save(tmp_path)
        victim = next((tmp_path / "articles").iterdir()) / "article.json"
        victim.write_text('{"title": "no id field"}', encoding="utf-8")
        with pytest.raises(CorruptStore) as err:
            LibraryStore.load(tmp_path)
        assert str(victim) in str(err.value)

    def test_kb_log_survives_reload(self, two_article_library, tmp_path,
                                    minimal):
        two_article_library.save(tmp_path)
        loaded = LibraryStore.load(tmp_path)
        kb = loaded.kbs[minimal.id]
        assert kb.log, "command log should be restored"
        replayed = KnowledgeBase.replay(json.loads(json.dumps(kb.log)),
                                       article=minimal)
        assert canonical_json(replayed.to_dict()) == canonical_json(kb.to_dict())

    def test_removed_article_directory_cleaned(self, two_article_library,
                                               tmp_path, minimal):
        two_article_library.save(tmp_path)
        two_article_library.remove_article(minimal.id)
        two_article_library.save(tmp_path)
        slugs = {d.name for d in (tmp_path / "articles").iterdir()}
        assert slugify(minimal.id) not in slugs

    def test_resolve_by_slug(self, two_article_library, zhai):
        assert two_article_library.resolve_article_id(slugify(zhai.id)) == zhai.id
        with pytest.raises(UnknownArticle):
            two_article_library.resolve_article_id("nope")


class TestStoreHash:
    def test_stable_across_save_load(self, two_article_library, tmp_path):
        before = two_article_library.store_hash()
        two_article_library.save(tmp_path)
        assert LibraryStore.load(tmp_path).store_hash() == before

    def test_changes_on_mutation(self, two_article_library, minimal):
        before = two_article_library.store_hash()
        two_article_library.kbs[minimal.id].add_class("another")
        assert two_article_library.store_hash() != before

    def test_insertion_order_irrelevant(self, zhai, minimal):
        one = LibraryStore()
        one.add_article(zhai)
        one.add_article(minimal)
        other = LibraryStore()
        other.add_article(minimal)
        other.add_article(zhai)
        assert one.store_hash() == other.store_hash()


class TestInstrumentClustering:
    def test_identical_signatures_group_together(self):
        a = simple_cited_article([1], article_id="art-a")
        b = simple_cited_article([1], article_id="art-b")
        lib = LibraryStore()
        lib.add_article(a, measurement_kb(a))
        lib.add_article(b, measurement_kb(b))
        cluster = lib.cluster_by_method("confocal-1")
        assert list(cluster.groups) == ["count cells|measured:tissue"]
        assert cluster.groups["count cells|measured:tissue"] == \
            [("art-a", "f1"), ("art-b", "f1")]

    def test_different_signatures_split(self):
        a = simple_cited_article([1], article_id="art-a")
        b = simple_cited_article([1], article_id="art-b")
        lib = LibraryStore()
        lib.add_article(a, measurement_kb(a))
        lib.add_article(b, measurement_kb(b, flow_name="weigh samples"))
        cluster = lib.cluster_by_method("confocal-1")
        assert sorted(cluster.groups) == ["count cells|measured:tissue",
                                          "weigh samples|measured:tissue"]
        assert all(len(v) == 1 for v in cluster.groups.values())

    def test_role_is_part_of_the_signature(self):
        a = simple_cited_article([1], article_id="art-a")
        kb = measurement_kb(a, role="affected")
        assert method_signature(kb, kb.flows["f1"]) == \
            "count cells|affected:tissue"

    def test_instance_participants_resolve_to_class(self):
        a = simple_cited_article([1], article_id="art-a")
        kb = KnowledgeBase(article=a)
        kb.add_class("tissue")
        sample = kb.instantiate("tissue")
        flow = kb.define_flow("method_flow", "stain",
                              participants=[Participant(sample.id, "affected")],
                              is_measurement=True)
        assert method_signature(kb, flow) == "stain|affected:tissue"

    def test_unused_instrument_has_no_groups(self):
        a = simple_cited_article([1], article_id="art-a")
        lib = LibraryStore()
        kb = lib.add_article(a)
        kb.add_instrument("idle scale", instrument_id="scale-1")
        assert lib.cluster_by_method("scale-1").groups == {}

    def test_unknown_instrument(self, two_article_library):
        with pytest.raises(UnknownInstrument):
            two_article_library.cluster_by_method("imaginary")

    def test_order_independent(self):
        a = simple_cited_article([1], article_id="art-a")
        b = simple_cited_article([1], article_id="art-b")
        one = LibraryStore()
        one.add_article(a, measurement_kb(a))
        one.add_article(b, measurement_kb(b))
        other = LibraryStore()
        other.add_article(b, measurement_kb(b))
        other.add_article(a, measurement_kb(a))
        assert one.cluster_by_method("confocal-1").to_dict() == \
            other.cluster_by_method("confocal-1").to_dict()


class TestConsistencyLint:
    def test_single_article_clean(self, minimal):
        lib = LibraryStore()
        kb = lib.add_article(minimal)
        kb.add_class("axon", dimensions=[Dimension("integrity",
                                                   ["intact", "degenerated"])])
        assert lib.consistency_lint() == {"conflicts": [], "dangling": []}

    def test_disjoint_state_sets_conflict(self, zhai, minimal):
        lib = LibraryStore()
        kb1 = lib.add_article(zhai)
        kb2 = lib.add_article(minimal)
        kb1.add_class("axon", dimensions=[Dimension("integrity",
                                                    ["intact", "degenerated"])])
        kb2.add_class("axon", dimensions=[Dimension("integrity",
                                                    ["pristine", "lost"])])
        report = lib.consistency_lint()
        assert len(report["conflicts"]) == 1
        conflict = report["conflicts"][0]
        assert conflict["class_name"] == "axon"
        assert conflict["dimension"] == "integrity"
        assert conflict["states"] == [["degenerated", "intact"],
                                      ["lost", "pristine"]]

    def test_overlapping_state_sets_are_fine(self, zhai, minimal):
        lib = LibraryStore()
        lib.add_article(zhai).add_class(
            "axon", dimensions=[Dimension("integrity", ["intact", "lost"])])
        lib.add_article(minimal).add_class(
            "axon", dimensions=[Dimension("integrity", ["pristine", "lost"])])
        assert lib.consistency_lint()["conflicts"] == []

    def test_dangling_anchor_after_removal(self, two_article_library, minimal):
        two_article_library.remove_article(minimal.id)
        report = two_article_library.consistency_lint()
        kinds = sorted(entry["kind"] for entry in report["dangling"])
        assert "dangling_anchor" in kinds

    def test_dangling_link_after_removal(self, two_article_library, zhai):
        two_article_library.remove_article(zhai.id)
        report = two_article_library.consistency_lint()
        kinds = {entry["kind"] for entry in report["dangling"]}
        assert kinds == {"dangling_link"}

    def test_lint_never_mutates(self, two_article_library):
        before = two_article_library.store_hash()
        two_article_library.consistency_lint()
        assert two_article_library.store_hash() == before
