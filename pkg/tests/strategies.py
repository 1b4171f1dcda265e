"""Hypothesis strategies building articles with in-text citation groups.

The builder records, for every generated mark, exactly which references it
designates. That record is the ground-truth oracle for the splitting
property tests, so the tests never re-derive group semantics from the
implementation under test.
"""

import re
from dataclasses import dataclass

from hypothesis import strategies as st

from paperstruct.model import (
    Article,
    ContentBlock,
    InlineCitationMark,
    PersonName,
    Reference,
    Section,
    SourceDescriptor,
    Span,
)

SURNAMES = ["Zhai", "Allen", "Gosby", "muller", "MULLER", "Ångström",
            "de la Cruz", "O'Neil", "Kim", "Watanabe"]
WORDS = ["the", "axon", "state", "flow", "model", "result", "shown",
         "energy", "protein", "cells"]


@dataclass
class GeneratedArticle:
    article: Article
    # every (block_id, start, end, ref_id) a reader should reach post-split
    expected_pairs: frozenset


@st.composite
def _references(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    refs = []
    for i in range(1, n + 1):
        authorless = draw(st.booleans()) and draw(st.booleans())
        authors = [] if authorless else [PersonName(
            surname=draw(st.sampled_from(SURNAMES)),
            given=draw(st.sampled_from(["A", "B", "C J"])))]
        refs.append(Reference(
            id=f"r{i}",
            original_number=i,
            authors=authors,
            year=str(draw(st.integers(min_value=1990, max_value=2012))),
            title=f"Work {draw(st.integers(min_value=1, max_value=30))}",
            source_venue="Journal",
        ))
    return refs


@st.composite
def _citation_group(draw, refs):
    """Returns (display_text, rid_list, designated_ref_ids)."""
    numbers = {r.original_number: r.id for r in refs}
    kind = draw(st.sampled_from(["single", "pair", "range", "multi_rid", "opaque"]))
    if kind == "single":
        ref = draw(st.sampled_from(refs))
        return (str(ref.original_number), [ref.id], {ref.id})
    if kind == "pair" and len(refs) >= 2:
        a, b = draw(st.lists(st.sampled_from(refs), min_size=2, max_size=2,
                             unique_by=lambda r: r.id))
        rids = [a.id] if draw(st.booleans()) else [a.id, b.id]
        return (f"{a.original_number},{b.original_number}", rids, {a.id, b.id})
    if kind == "range" and len(refs) >= 2:
        lo = draw(st.integers(min_value=1, max_value=len(refs) - 1))
        hi = draw(st.integers(min_value=lo + 1, max_value=len(refs)))
        dash = draw(st.sampled_from(["–", "-"]))
        designated = {numbers[n] for n in range(lo, hi + 1)}
        return (f"{lo}{dash}{hi}", [numbers[lo]], designated)
    if kind == "multi_rid" and len(refs) >= 2:
        chosen = draw(st.lists(st.sampled_from(refs), min_size=2, max_size=3,
                               unique_by=lambda r: r.id))
        display = ",".join(str(r.original_number)
                           for r in sorted(chosen, key=lambda r: r.original_number))
        return (display, [r.id for r in chosen], {r.id for r in chosen})
    ref = draw(st.sampled_from(refs))
    return ("see prior work", [ref.id], {ref.id})


@st.composite
def _block(draw, block_id, refs, pairs):
    parts = []
    marks = []
    pos = 0

    def emit(piece):
        nonlocal pos
        if parts:
            parts.append(" ")
            pos += 1
        parts.append(piece)
        pos += len(piece)

    n_segments = draw(st.integers(min_value=1, max_value=4))
    for _ in range(n_segments):
        for word in draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=4)):
            emit(word)
        if draw(st.booleans()):
            display, rids, designated = draw(_citation_group(refs))
            if parts:
                parts.append(" ")
                pos += 1
            start = pos
            parts.append(display)
            pos += len(display)
            first_num = re.search(r"\d+", display)
            by_id = {r.id: r for r in refs}
            marks.append(InlineCitationMark(
                id=f"{block_id}/c{len(marks)}",
                span=Span(block_id=block_id, start=start, end=pos),
                target_ref_ids=list(rids),
                display_number=int(first_num.group()) if first_num
                else by_id[rids[0]].original_number,
                resolved=True,
            ))
            for rid in designated:
                pairs.add((block_id, start, pos, rid))
    return ContentBlock(id=block_id, kind="paragraph", text="".join(parts), marks=marks)


@st.composite
def cited_articles(draw):
    refs = draw(_references())
    pairs = set()
    abstract = []
    if draw(st.booleans()):
        abstract.append(draw(_block("abs/b0", refs, pairs)))
    sections = []
    n_top = draw(st.integers(min_value=1, max_value=3))
    for i in range(1, n_top + 1):
        sid = f"s{i}"
        blocks = [draw(_block(f"{sid}/b{j}", refs, pairs))
                  for j in range(draw(st.integers(min_value=0, max_value=2)))]
        children = []
        for k in range(1, draw(st.integers(min_value=0, max_value=2)) + 1):
            cid = f"{sid}.{k}"
            children.append(Section(
                id=cid, level=2, heading=f"Sub {cid}",
                blocks=[draw(_block(f"{cid}/b0", refs, pairs))],
                children=[]))
        sections.append(Section(id=sid, level=1, heading=f"Section {i}",
                                blocks=blocks, children=children))
    article = Article(
        id=f"gen-{draw(st.integers(min_value=0, max_value=10**6))}",
        title="Generated Article",
        authors=[PersonName(surname="Author", given="A")],
        abstract=abstract,
        sections=sections,
        references=refs,
        figures=[],
        provenance=SourceDescriptor(article_id="gen", format_tag="generated"),
    )
    return GeneratedArticle(article=article, expected_pairs=frozenset(pairs))
