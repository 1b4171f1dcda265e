"""Build a small demonstration library from the bundled article fixtures.

Ingests the two PLOS articles, models the axon-maintenance explanation
from the neurodegeneration paper as a knowledgebase, registers a topic
anchor with one citation link, and saves everything under the chosen
root. Point the CLI or the HTTP service at the same root afterwards:

    python3 scripts/build_demo_library.py --root demo_library
    paperstruct --root demo_library serve --port 8000
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from paperstruct.ingest import RawSource
from paperstruct.kb.records import (
    FLOW_CONCEPTUAL,
    FLOW_METHOD,
    RQ_COMPARISON,
    TRIGGER_RESEARCHER,
    TRIGGER_STATE,
    Dimension,
    Participant,
    StateChange,
    TriggerCondition,
)
from paperstruct.library import LibraryStore
from paperstruct.model import Span, document_blocks

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def find_phrase(article, phrase):
    for block in document_blocks(article):
        at = block.text.find(phrase)
        if at >= 0:
            return Span(block.id, at, at + len(phrase))
    raise SystemExit(f"phrase {phrase!r} not found in {article.id}")


def model_axon_maintenance(kb):
    """Two competing explanations for axon survival plus the mutation
    experiment that separates them."""
    kb.add_class("molecule")
    kb.add_class("protein", parents=["molecule"])
    kb.add_class("NMNAT", parents=["protein"], dimensions=[
        Dimension("enzymatic_function", ["functional", "disabled"])])
    kb.add_class("NAD", parents=["molecule"], dimensions=[
        Dimension("availability", ["available", "depleted"])])
    kb.add_class("axon", dimensions=[
        Dimension("integrity", ["intact", "degenerated"])])

    kb.define_flow(
        FLOW_CONCEPTUAL, "NAD-dependent axon maintenance",
        participants=[Participant("nmnat", "cause"),
                      Participant("nad", "affected"),
                      Participant("axon", "affected")],
        triggers=[TriggerCondition(TRIGGER_STATE, "nmnat",
                                   "enzymatic_function", "functional")],
        effects=[StateChange("nad", "availability", "available"),
                 StateChange("axon", "integrity", "intact")])
    kb.define_flow(
        FLOW_CONCEPTUAL, "NAD-independent axon maintenance",
        participants=[Participant("nmnat", "cause"),
                      Participant("axon", "affected")],
        triggers=[TriggerCondition(TRIGGER_STATE, "nmnat",
                                   "enzymatic_function", "functional")],
        effects=[StateChange("axon", "integrity", "intact")])

    mutant = kb.instantiate("nmnat", {"enzymatic_function": "disabled"},
                            instance_id="nmnat-mutant")
    kb.define_flow(
        FLOW_METHOD, "mutate enzymatic control region",
        participants=[Participant(mutant.id, "affected")],
        triggers=[TriggerCondition(TRIGGER_RESEARCHER)],
        effects=[StateChange(mutant.id, "enzymatic_function", "disabled")])
    kb.define_rq(RQ_COMPARISON, ["f1", "f2"])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--root", default="demo_library")
    args = parser.parse_args()

    lib = LibraryStore(root=args.root)
    zhai, zr = lib.ingest_source(RawSource.from_file(FIXTURES / "zhai2006.xml"))
    gosby, gr = lib.ingest_source(RawSource.from_file(FIXTURES / "gosby2011.xml"))
    print(f"ingested {zhai.id}: {zr.sections_found} sections, "
          f"{zr.references_found} references")
    print(f"ingested {gosby.id}: {gr.sections_found} sections, "
          f"{gr.references_found} references")

    model_axon_maintenance(lib.kbs[zhai.id])

    topic = "light-induced neurodegeneration"
    span = find_phrase(zhai, topic)
    anchor = lib.registry.register_anchor(zhai.id, span, topic_label=topic)
    lib.registry.annotate_mention(anchor.id, span)
    lib.registry.link_citation(gosby.id, "s1/b0/c0", anchor.id, "discusses")

    root = lib.save()
    print(f"library written to {root}")
    print(f"store hash {lib.store_hash()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
