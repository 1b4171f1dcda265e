"""Hand-built document-model objects for tests that need exact control."""

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


def make_reference(num, surname="Author", year="2000", title=None, structured=True):
    authors = [] if surname is None else [
        PersonName(surname=surname, given="A", structured=structured)]
    return Reference(
        id=f"r{num}",
        original_number=num,
        authors=authors,
        year=year,
        title=title if title is not None else f"Title {num}",
        source_venue="Journal",
    )


def make_block(block_id, text, cites=()):
    """cites: iterable of (ref_num, ref_id) placed at successive positions.

    The display text for each mark is the decimal number; the block text
    gets the numbers appended so spans address real characters.
    """
    parts = [text] if text else []
    marks = []
    pos = len(text)
    for num, rid in cites:
        display = str(num)
        if parts:
            parts.append(" ")
            pos += 1
        start = pos
        parts.append(display)
        pos += len(display)
        marks.append(InlineCitationMark(
            id=f"{block_id}/c{len(marks)}",
            span=Span(block_id=block_id, start=start, end=pos),
            target_ref_ids=[rid],
            display_number=num,
        ))
    return ContentBlock(id=block_id, kind="paragraph", text="".join(parts), marks=marks)


def make_article(sections, references, abstract=(), article_id="handmade"):
    return Article(
        id=article_id,
        title="Handmade Article",
        authors=[PersonName(surname="Tester", given="T")],
        abstract=list(abstract),
        sections=sections,
        references=references,
        figures=[],
        provenance=SourceDescriptor(article_id=article_id, format_tag="handmade"),
    )


def simple_cited_article(citation_order, n_refs=None, article_id="handmade"):
    """One section, one block, marks citing the given reference numbers in
    the given text order. References are numbered 1..n."""
    n = n_refs or max(citation_order, default=0)
    refs = [make_reference(i) for i in range(1, n + 1)]
    block = make_block("s1/b0", "Text", [(num, f"r{num}") for num in citation_order])
    section = Section(id="s1", level=1, heading="Body", blocks=[block], children=[])
    return make_article([section], refs, article_id=article_id)
