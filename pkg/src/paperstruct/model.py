"""Typed document model for ingested research articles.

Articles are immutable by convention once ingest has produced them: every
transformation elsewhere in the package (citation splitting, renumbering)
returns a new ``Article`` instead of mutating a shared one, so parsed
articles can be handed to any number of readers.

Identifiers are stable addresses: sections are ``s1``, ``s1.2``; blocks are
``s1.2/b3``; inline citation marks are ``s1.2/b3/c0``; abstract blocks use
the ``abs/`` prefix since they live outside the section tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from paperstruct.errors import OutOfRange, UnknownBlock

ABSTRACT_PREFIX = "abs/"

BLOCK_PARAGRAPH = "paragraph"
BLOCK_FIGURE = "figure"
BLOCK_TABLE = "table"


@dataclass
class PersonName:
    """A person, split into surname and given names when the source was
    structured; otherwise the whole string sits in ``surname`` with
    ``structured=False``."""

    surname: str
    given: str = ""
    structured: bool = True

    def to_dict(self) -> dict:
        return {"surname": self.surname, "given": self.given, "structured": self.structured}

    @classmethod
    def from_dict(cls, d: dict) -> "PersonName":
        return cls(surname=d["surname"], given=d.get("given", ""),
                   structured=bool(d.get("structured", True)))


@dataclass
class Span:
    """A character range inside one content block; the anchor primitive."""

    block_id: str
    start: int
    end: int

    def to_dict(self) -> dict:
        return {"block_id": self.block_id, "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, d: dict) -> "Span":
        return cls(block_id=d["block_id"], start=int(d["start"]), end=int(d["end"]))

    def as_tuple(self) -> tuple[str, int, int]:
        return (self.block_id, self.start, self.end)


@dataclass
class InlineCitationMark:
    id: str
    span: Span
    target_ref_ids: list[str]
    display_number: int
    resolved: bool = True

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "span": self.span.to_dict(),
            "target_ref_ids": list(self.target_ref_ids),
            "display_number": self.display_number,
            "resolved": self.resolved,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InlineCitationMark":
        return cls(
            id=d["id"],
            span=Span.from_dict(d["span"]),
            target_ref_ids=list(d["target_ref_ids"]),
            display_number=int(d["display_number"]),
            resolved=bool(d.get("resolved", True)),
        )


@dataclass
class ContentBlock:
    """One paragraph, figure, or table. For figures and tables ``text`` is
    the caption; tables additionally keep an opaque cell grid."""

    id: str
    kind: str
    text: str
    marks: list[InlineCitationMark] = field(default_factory=list)
    cells: list[list[str]] | None = None

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "text": self.text,
            "marks": [m.to_dict() for m in self.marks],
        }
        if self.cells is not None:
            d["cells"] = [list(row) for row in self.cells]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ContentBlock":
        return cls(
            id=d["id"],
            kind=d["kind"],
            text=d["text"],
            marks=[InlineCitationMark.from_dict(m) for m in d.get("marks", [])],
            cells=[list(row) for row in d["cells"]] if d.get("cells") is not None else None,
        )


@dataclass
class Section:
    id: str
    level: int
    heading: str
    blocks: list[ContentBlock] = field(default_factory=list)
    children: list["Section"] = field(default_factory=list)
    deep: bool = False  # levels >= 3 parse fine but the TOC never shows them

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "level": self.level,
            "heading": self.heading,
            "deep": self.deep,
            "blocks": [b.to_dict() for b in self.blocks],
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Section":
        return cls(
            id=d["id"],
            level=int(d["level"]),
            heading=d["heading"],
            blocks=[ContentBlock.from_dict(b) for b in d.get("blocks", [])],
            children=[cls.from_dict(c) for c in d.get("children", [])],
            deep=bool(d.get("deep", False)),
        )


@dataclass
class Reference:
    id: str
    original_number: int  # 1-based position in the source ref-list
    authors: list[PersonName] = field(default_factory=list)
    year: str = ""
    title: str = ""
    source_venue: str = ""
    doi: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "original_number": self.original_number,
            "authors": [a.to_dict() for a in self.authors],
            "year": self.year,
            "title": self.title,
            "source_venue": self.source_venue,
            "doi": self.doi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Reference":
        return cls(
            id=d["id"],
            original_number=int(d["original_number"]),
            authors=[PersonName.from_dict(a) for a in d.get("authors", [])],
            year=d.get("year", ""),
            title=d.get("title", ""),
            source_venue=d.get("source_venue", ""),
            doi=d.get("doi"),
        )


@dataclass
class SourceDescriptor:
    """Provenance record for the raw source an article came from."""

    article_id: str
    format_tag: str = "jats_xml"
    source_name: str = ""
    sha256: str = ""

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "format_tag": self.format_tag,
            "source_name": self.source_name,
            "sha256": self.sha256,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceDescriptor":
        return cls(
            article_id=d.get("article_id", ""),
            format_tag=d.get("format_tag", "jats_xml"),
            source_name=d.get("source_name", ""),
            sha256=d.get("sha256", ""),
        )


@dataclass
class Article:
    id: str
    title: str
    authors: list[PersonName] = field(default_factory=list)
    abstract: list[ContentBlock] = field(default_factory=list)
    sections: list[Section] = field(default_factory=list)
    references: list[Reference] = field(default_factory=list)
    figures: list[str] = field(default_factory=list)
    provenance: SourceDescriptor | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "authors": [a.to_dict() for a in self.authors],
            "abstract": [b.to_dict() for b in self.abstract],
            "sections": [s.to_dict() for s in self.sections],
            "references": [r.to_dict() for r in self.references],
            "figures": list(self.figures),
            "provenance": self.provenance.to_dict() if self.provenance else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Article":
        return cls(
            id=d["id"],
            title=d.get("title", ""),
            authors=[PersonName.from_dict(a) for a in d.get("authors", [])],
            abstract=[ContentBlock.from_dict(b) for b in d.get("abstract", [])],
            sections=[Section.from_dict(s) for s in d.get("sections", [])],
            references=[Reference.from_dict(r) for r in d.get("references", [])],
            figures=list(d.get("figures", [])),
            provenance=SourceDescriptor.from_dict(d["provenance"]) if d.get("provenance") else None,
        )


# --- traversal helpers ----------------------------------------------------

def walk_sections(article: Article) -> Iterator[Section]:
    """All sections in document (pre-)order, any depth."""

    def _walk(sections: list[Section]) -> Iterator[Section]:
        for sec in sections:
            yield sec
            yield from _walk(sec.children)

    yield from _walk(article.sections)


def document_blocks(article: Article) -> list[ContentBlock]:
    """Every content block in document order: abstract first, then body."""
    blocks = list(article.abstract)
    for sec in walk_sections(article):
        blocks.extend(sec.blocks)
    return blocks


def block_map(article: Article) -> dict[str, ContentBlock]:
    return {b.id: b for b in document_blocks(article)}


def block_positions(article: Article) -> dict[str, int]:
    """Document-order ordinal for each block id."""
    return {b.id: i for i, b in enumerate(document_blocks(article))}


def document_marks(article: Article) -> list[InlineCitationMark]:
    marks: list[InlineCitationMark] = []
    for block in document_blocks(article):
        marks.extend(block.marks)
    return marks


def mark_map(article: Article) -> dict[str, InlineCitationMark]:
    return {m.id: m for m in document_marks(article)}


def reference_map(article: Article) -> dict[str, Reference]:
    return {r.id: r for r in article.references}


def resolve_span(article: Article, span: Span) -> str:
    """Exact substring of the block text the span addresses."""
    blocks = block_map(article)
    if span.block_id not in blocks:
        raise UnknownBlock(f"no block {span.block_id!r} in article {article.id!r}")
    text = blocks[span.block_id].text
    if not (0 <= span.start <= span.end <= len(text)):
        raise OutOfRange(
            f"span [{span.start}, {span.end}) outside block {span.block_id!r} "
            f"of length {len(text)}"
        )
    return text[span.start:span.end]


def section_of(article: Article, block_id: str) -> Section | None:
    """Innermost section containing the block.

    Returns None for abstract blocks: they exist but live outside the
    section tree. Unknown ids fail loudly.
    """
    for sec in walk_sections(article):
        for block in sec.blocks:
            if block.id == block_id:
                return sec
    for block in article.abstract:
        if block.id == block_id:
            return None
    raise UnknownBlock(f"no block {block_id!r} in article {article.id!r}")


def parent_sections(article: Article) -> dict[str, str | None]:
    """Map of section id to parent section id (None for level-1)."""
    parents: dict[str, str | None] = {}

    def _walk(sections: list[Section], parent: str | None) -> None:
        for sec in sections:
            parents[sec.id] = parent
            _walk(sec.children, sec.id)

    _walk(article.sections, None)
    return parents


def mark_position_key(article: Article, mark_id: str) -> tuple[int, int, int]:
    """Sort key placing a mark in document order: (block ordinal, start, end)."""
    positions = block_positions(article)
    for block in document_blocks(article):
        for mark in block.marks:
            if mark.id == mark_id:
                return (positions[block.id], mark.span.start, mark.span.end)
    raise UnknownBlock(f"no mark {mark_id!r} in article {article.id!r}")
