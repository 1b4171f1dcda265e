"""JATS XML ingestion for PLOS-style full-text articles.

Parses ``article/front/article-meta`` metadata, the nested ``body//sec``
hierarchy with paragraphs, figures, and tables, and ``back/ref-list``
references. Inline ``xref ref-type="bibr"`` elements become citation marks
with exact character offsets into normalized block text.

The accepted grouped-citation syntax is "n,m", "n-m", and the en-dash form
inside one mark's display text, plus multi-id ``rid`` attributes; anything
else falls back to the ``rid`` list alone.
"""

from __future__ import annotations

import hashlib
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from paperstruct.errors import MalformedXml, UnrecognizedSchema
from paperstruct.model import (
    ABSTRACT_PREFIX,
    BLOCK_FIGURE,
    BLOCK_PARAGRAPH,
    BLOCK_TABLE,
    Article,
    ContentBlock,
    InlineCitationMark,
    PersonName,
    Reference,
    Section,
    SourceDescriptor,
    Span,
    reference_map,
    walk_sections,
)

ACCEPTED_ROOTS = {"article"}

# Inline elements whose markup is flattened to text without comment.
_SILENT_INLINE = {
    "italic", "bold", "underline", "sup", "sub", "sc", "monospace",
    "named-content", "ext-link", "email", "abbrev", "xref", "break",
    "inline-formula", "overline", "roman", "sans-serif", "uri", "styled-content",
}

# Containers whose children are flattened into the same block text.
_SILENT_CONTAINERS = {"label", "caption", "title", "p", "list-item", "list",
                      "table", "thead", "tbody", "tr", "td", "th", "attrib"}

# Section-level elements treated as one opaque paragraph block each.
_OPAQUE_BLOCKS = {"boxed-text", "disp-quote", "list", "supplementary-material",
                  "disp-formula", "statement", "verse-group"}

_GROUP_PART = re.compile(r"^(\d+)\s*[–-]\s*(\d+)$")
_SINGLE_PART = re.compile(r"^\d+$")


@dataclass
class RawSource:
    """Raw bytes of one article plus the id it travels under."""

    article_id: str
    data: bytes
    format_tag: str = "jats_xml"
    source_name: str = ""

    @classmethod
    def from_file(cls, path: str | Path) -> "RawSource":
        p = Path(path)
        return cls(article_id=p.stem, data=p.read_bytes(), source_name=p.name)


@dataclass
class IngestWarning:
    code: str
    message: str
    location: str = ""

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "location": self.location}


@dataclass
class IngestReport:
    article_id: str
    sections_found: int = 0
    references_found: int = 0
    citation_marks_found: int = 0
    grouped_marks_split: int = 0
    warnings: list[IngestWarning] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "sections_found": self.sections_found,
            "references_found": self.references_found,
            "citation_marks_found": self.citation_marks_found,
            "grouped_marks_split": self.grouped_marks_split,
            "warnings": [w.to_dict() for w in self.warnings],
        }


class _TextAssembler:
    """Builds normalized block text while offsets are being recorded.

    Whitespace runs collapse to one space and spaces are emitted lazily, so
    an offset captured just before emitting a citation mark stays valid in
    the final string. Leading and trailing whitespace never materialize.
    """

    def __init__(self) -> None:
        self._parts: list[str] = []
        self._length = 0
        self._pending_space = False

    @property
    def length(self) -> int:
        return self._length

    def text(self) -> str:
        return "".join(self._parts)

    def _emit(self, s: str) -> None:
        self._parts.append(s)
        self._length += len(s)

    def add(self, raw: str | None) -> None:
        if not raw:
            return
        pieces = raw.split()
        if not pieces:
            if self._length:
                self._pending_space = True
            return
        if self._length and (self._pending_space or raw[0].isspace()):
            self._emit(" ")
        self._pending_space = False
        self._emit(pieces[0])
        for piece in pieces[1:]:
            self._emit(" ")
            self._emit(piece)
        self._pending_space = raw[-1].isspace()

    def add_mark_text(self, raw: str) -> tuple[int, int]:
        """Emit a citation mark's display text; returns its (start, end)."""
        pieces = raw.split()
        if not pieces:
            if raw and self._length:
                self._pending_space = True
            return (self._length, self._length)
        if self._length and (self._pending_space or raw[0].isspace()):
            self._emit(" ")
        self._pending_space = False
        start = self._length
        self._emit(" ".join(pieces))
        end = self._length
        self._pending_space = raw[-1].isspace()
        return (start, end)


def _localname(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _find(elem: ET.Element, path: str) -> ET.Element | None:
    """Namespace-agnostic find over local names, '/'-separated, './/' allowed."""
    deep = path.startswith(".//")
    names = (path[3:] if deep else path).split("/")

    def _search(node: ET.Element, names: list[str], anywhere: bool):
        head, rest = names[0], names[1:]
        stack = list(node) if not anywhere else list(node.iter())
        for child in stack:
            if child is node:
                continue
            if _localname(child.tag) == head:
                if not rest:
                    return child
                found = _search(child, rest, False)
                if found is not None:
                    return found
        return None

    return _search(elem, names, deep)


def _findall(elem: ET.Element, name: str, deep: bool = False) -> list[ET.Element]:
    if deep:
        return [e for e in elem.iter() if e is not elem and _localname(e.tag) == name]
    return [e for e in elem if _localname(e.tag) == name]


def _all_text(elem: ET.Element | None) -> str:
    if elem is None:
        return ""
    return " ".join("".join(elem.itertext()).split())


@dataclass
class _RawMark:
    start: int
    end: int
    rids: list[str]
    display_text: str


class _Parser:
    def __init__(self, source: RawSource):
        self.source = source
        self.report = IngestReport(article_id=source.article_id)
        self._warned_tags: set[str] = set()

    def warn(self, code: str, message: str, location: str = "") -> None:
        self.report.warnings.append(IngestWarning(code=code, message=message, location=location))

    # -- inline text with citation marks ----------------------------------

    def _walk_inline(self, elem: ET.Element, asm: _TextAssembler,
                     raw_marks: list[_RawMark], location: str) -> None:
        asm.add(elem.text)
        for child in elem:
            tag = _localname(child.tag)
            if tag == "xref" and child.get("ref-type") == "bibr":
                inner = "".join(child.itertext())
                start, end = asm.add_mark_text(inner)
                rids = (child.get("rid") or "").split()
                raw_marks.append(_RawMark(start=start, end=end, rids=rids,
                                          display_text=" ".join(inner.split())))
            else:
                if tag == "break":
                    asm.add(" ")
                elif tag in _SILENT_CONTAINERS:
                    pass
                elif tag not in _SILENT_INLINE and tag not in self._warned_tags:
                    self._warned_tags.add(tag)
                    self.warn("UnknownElement",
                              f"element <{tag}> preserved as opaque text", location)
                self._walk_inline(child, asm, raw_marks, location)
            asm.add(child.tail)

    def _flatten_block(self, elem: ET.Element, block_id: str) -> tuple[str, list[_RawMark]]:
        asm = _TextAssembler()
        raw_marks: list[_RawMark] = []
        self._walk_inline(elem, asm, raw_marks, block_id)
        return asm.text(), raw_marks

    def _make_block(self, elem: ET.Element, block_id: str, kind: str,
                    cells: list[list[str]] | None = None) -> ContentBlock:
        text, raw_marks = self._flatten_block(elem, block_id)
        marks = []
        for i, rm in enumerate(raw_marks):
            marks.append(InlineCitationMark(
                id=f"{block_id}/c{i}",
                span=Span(block_id=block_id, start=rm.start, end=rm.end),
                target_ref_ids=list(rm.rids),
                display_number=_first_number(rm.display_text) or 0,
                resolved=True,
            ))
        self.report.citation_marks_found += len(marks)
        return ContentBlock(id=block_id, kind=kind, text=text, marks=marks, cells=cells)

    # -- structural elements ----------------------------------------------

    def _figure_block(self, fig: ET.Element, block_id: str) -> ContentBlock:
        wrapper = ET.Element("caption-text")
        label = _find(fig, "label")
        if label is not None:
            wrapper.append(label)
        caption = _find(fig, "caption")
        if caption is not None:
            wrapper.append(caption)
        return self._make_block(wrapper, block_id, BLOCK_FIGURE)

    def _table_block(self, tw: ET.Element, block_id: str) -> ContentBlock:
        wrapper = ET.Element("caption-text")
        label = _find(tw, "label")
        if label is not None:
            wrapper.append(label)
        caption = _find(tw, "caption")
        if caption is not None:
            wrapper.append(caption)
        cells: list[list[str]] = []
        for row in _findall(tw, "tr", deep=True):
            cells.append([_all_text(cell) for cell in row
                          if _localname(cell.tag) in ("td", "th")])
        block = self._make_block(wrapper, block_id, BLOCK_TABLE)
        block.cells = cells
        return block

    def _parse_section(self, sec: ET.Element, sec_id: str, level: int,
                       figures: list[str]) -> Section:
        heading = ""
        blocks: list[ContentBlock] = []
        children: list[Section] = []
        child_count = 0
        block_count = 0
        for child in sec:
            tag = _localname(child.tag)
            if tag == "title":
                heading = _all_text(child)
            elif tag == "sec":
                child_count += 1
                children.append(self._parse_section(
                    child, f"{sec_id}.{child_count}", level + 1, figures))
            elif tag == "p":
                blocks.append(self._make_block(child, f"{sec_id}/b{block_count}", BLOCK_PARAGRAPH))
                block_count += 1
            elif tag == "fig":
                bid = f"{sec_id}/b{block_count}"
                blocks.append(self._figure_block(child, bid))
                figures.append(bid)
                block_count += 1
            elif tag == "table-wrap":
                blocks.append(self._table_block(child, f"{sec_id}/b{block_count}"))
                block_count += 1
            elif tag in _OPAQUE_BLOCKS:
                blocks.append(self._make_block(child, f"{sec_id}/b{block_count}", BLOCK_PARAGRAPH))
                block_count += 1
            elif tag == "label":
                continue
            else:
                if tag not in self._warned_tags:
                    self._warned_tags.add(tag)
                    self.warn("UnknownElement",
                              f"element <{tag}> preserved as opaque text", sec_id)
                blocks.append(self._make_block(child, f"{sec_id}/b{block_count}", BLOCK_PARAGRAPH))
                block_count += 1
        self.report.sections_found += 1
        return Section(id=sec_id, level=level, heading=heading,
                       blocks=blocks, children=children, deep=level >= 3)

    def _parse_body(self, body: ET.Element, figures: list[str]) -> list[Section]:
        sections: list[Section] = []
        loose: list[ET.Element] = []
        count = 0
        for child in body:
            tag = _localname(child.tag)
            if tag == "sec":
                if loose:
                    count += 1
                    sections.append(self._loose_section(loose, f"s{count}", figures))
                    loose = []
                count += 1
                sections.append(self._parse_section(child, f"s{count}", 1, figures))
            else:
                loose.append(child)
        if loose:
            count += 1
            sections.append(self._loose_section(loose, f"s{count}", figures))
        return sections

    def _loose_section(self, elems: list[ET.Element], sec_id: str,
                       figures: list[str]) -> Section:
        """Body content outside any sec becomes an untitled synthetic section."""
        wrapper = ET.Element("sec")
        wrapper.extend(elems)
        self.warn("LooseContent",
                  "body content outside any <sec> wrapped in an untitled section", sec_id)
        return self._parse_section(wrapper, sec_id, 1, figures)

    def _parse_abstract(self, meta: ET.Element) -> list[ContentBlock]:
        abstract = None
        for cand in _findall(meta, "abstract"):
            if not cand.get("abstract-type"):
                abstract = cand
                break
        if abstract is None:
            cands = _findall(meta, "abstract")
            abstract = cands[0] if cands else None
        if abstract is None:
            return []
        blocks: list[ContentBlock] = []
        count = 0
        for elem in abstract.iter():
            tag = _localname(elem.tag)
            if tag == "p":
                blocks.append(self._make_block(elem, f"{ABSTRACT_PREFIX}b{count}", BLOCK_PARAGRAPH))
                count += 1
            elif tag == "title" and _all_text(elem):
                blocks.append(self._make_block(elem, f"{ABSTRACT_PREFIX}b{count}", BLOCK_PARAGRAPH))
                count += 1
        return blocks

    def _parse_authors(self, meta: ET.Element) -> list[PersonName]:
        authors: list[PersonName] = []
        for group in _findall(meta, "contrib-group"):
            for contrib in _findall(group, "contrib"):
                ctype = contrib.get("contrib-type")
                if ctype and ctype != "author":
                    continue
                name = _find(contrib, "name")
                if name is not None:
                    authors.append(PersonName(
                        surname=_all_text(_find(name, "surname")),
                        given=_all_text(_find(name, "given-names")),
                        structured=True,
                    ))
                    continue
                collab = _find(contrib, "collab")
                if collab is not None:
                    authors.append(PersonName(surname=_all_text(collab), structured=False))
        return authors

    def _parse_references(self, root: ET.Element) -> list[Reference]:
        refs: list[Reference] = []
        back = _find(root, "back")
        ref_list = _find(back, ".//ref-list") if back is not None else None
        if ref_list is None:
            ref_list = _find(root, ".//ref-list")
        if ref_list is None:
            return refs
        for i, ref in enumerate(_findall(ref_list, "ref", deep=True), start=1):
            citation = None
            for tag in ("element-citation", "mixed-citation", "citation", "nlm-citation"):
                citation = _find(ref, tag)
                if citation is not None:
                    break
            holder = citation if citation is not None else ref
            authors: list[PersonName] = []
            person_group = None
            for pg in _findall(holder, "person-group", deep=True):
                if pg.get("person-group-type") in (None, "author"):
                    person_group = pg
                    break
            name_holder = person_group if person_group is not None else holder
            for name in _findall(name_holder, "name", deep=(person_group is None)):
                authors.append(PersonName(
                    surname=_all_text(_find(name, "surname")),
                    given=_all_text(_find(name, "given-names")),
                    structured=True,
                ))
            if not authors:
                for collab in _findall(name_holder, "collab", deep=True):
                    authors.append(PersonName(surname=_all_text(collab), structured=False))
            title = _all_text(_find(holder, ".//article-title"))
            if not title:
                title = _all_text(_find(holder, ".//chapter-title"))
            doi = None
            for pub_id in _findall(holder, "pub-id", deep=True):
                if pub_id.get("pub-id-type") == "doi":
                    doi = _all_text(pub_id)
                    break
            refs.append(Reference(
                id=ref.get("id") or f"ref-{i}",
                original_number=i,
                authors=authors,
                year=_all_text(_find(holder, ".//year")),
                title=title,
                source_venue=_all_text(_find(holder, ".//source")),
                doi=doi,
            ))
        self.report.references_found = len(refs)
        return refs

    # -- top level ---------------------------------------------------------

    def parse(self) -> Article:
        try:
            root = ET.fromstring(self.source.data)
        except ET.ParseError as exc:
            raise MalformedXml(f"{self.source.article_id}: {exc}") from exc
        if _localname(root.tag) not in ACCEPTED_ROOTS:
            raise UnrecognizedSchema(
                f"root element <{_localname(root.tag)}> is not an accepted article root")

        meta = _find(root, ".//article-meta")
        title = ""
        doi = None
        authors: list[PersonName] = []
        abstract: list[ContentBlock] = []
        if meta is not None:
            title = _all_text(_find(meta, ".//article-title"))
            for aid in _findall(meta, "article-id"):
                if aid.get("pub-id-type") == "doi":
                    doi = _all_text(aid)
                    break
            authors = self._parse_authors(meta)
            abstract = self._parse_abstract(meta)
        else:
            self.warn("NoArticleMeta", "article-meta not found; front matter empty")

        references = self._parse_references(root)
        figures: list[str] = []
        body = _find(root, "body")
        sections = self._parse_body(body, figures) if body is not None else []

        article = Article(
            id=doi or self.source.article_id,
            title=title,
            authors=authors,
            abstract=abstract,
            sections=sections,
            references=references,
            figures=figures,
            provenance=SourceDescriptor(
                article_id=self.source.article_id,
                format_tag=self.source.format_tag,
                source_name=self.source.source_name,
                sha256=hashlib.sha256(self.source.data).hexdigest(),
            ),
        )
        self._resolve_marks(article)
        return article

    def _resolve_marks(self, article: Article) -> None:
        refs = reference_map(article)
        for block in _all_blocks(article):
            for mark in block.marks:
                unknown = [rid for rid in mark.target_ref_ids if rid not in refs]
                if not mark.target_ref_ids:
                    mark.resolved = False
                    self.warn("DanglingCitation",
                              "citation mark has no reference target", mark.id)
                elif unknown:
                    mark.resolved = False
                    self.warn("DanglingCitation",
                              f"citation mark targets unknown reference id(s) "
                              f"{', '.join(unknown)}", mark.id)
                if mark.resolved and mark.display_number == 0:
                    mark.display_number = refs[mark.target_ref_ids[0]].original_number


def _all_blocks(article: Article) -> list[ContentBlock]:
    blocks = list(article.abstract)
    for sec in walk_sections(article):
        blocks.extend(sec.blocks)
    return blocks


def _first_number(text: str) -> int | None:
    m = re.search(r"\d+", text)
    return int(m.group()) if m else None


# --- public operations ----------------------------------------------------

def parse_article(source: RawSource) -> Article:
    """Parse the XML into the typed document model. Warnings never abort."""
    return _Parser(source).parse()


def ingest(source: RawSource, split: bool = True) -> tuple[Article, IngestReport]:
    """Parse and, by default, split grouped citations; returns the report."""
    parser = _Parser(source)
    article = parser.parse()
    if split:
        article, n_split = _split_grouped(article)
        parser.report.grouped_marks_split = n_split
        parser.report.citation_marks_found = len(
            [m for b in _all_blocks(article) for m in b.marks])
    return article, parser.report


def parse_group_numbers(display_text: str) -> list[int] | None:
    """Numbers designated by a mark's display text, or None when the
    punctuation is not one of the recognized group forms."""
    core = display_text.strip().strip("[]()").strip()
    if not core:
        return None
    numbers: list[int] = []
    for part in core.split(","):
        part = part.strip()
        m = _GROUP_PART.match(part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                return None
            numbers.extend(range(lo, hi + 1))
        elif _SINGLE_PART.match(part):
            numbers.append(int(part))
        else:
            return None
    return numbers


def split_grouped_citations(article: Article) -> Article:
    """Replace every multi-reference mark with single-target marks at the
    same text position, ascending by original reference number. Idempotent;
    the distinct (position, reference) pair set is preserved."""
    split, _ = _split_grouped(article)
    return split


def _split_grouped(article: Article) -> tuple[Article, int]:
    refs = reference_map(article)
    by_number = {r.original_number: r.id for r in article.references}
    new = Article.from_dict(article.to_dict())
    n_split = 0
    for block in _all_blocks(new):
        pairs: dict[tuple[int, int, int, str], tuple] = {}
        for mark in block.marks:
            targets = set(mark.target_ref_ids)
            parsed = parse_group_numbers(block.text[mark.span.start:mark.span.end])
            if parsed is not None:
                for n in parsed:
                    if n in by_number:
                        targets.add(by_number[n])
            if len(targets) > 1:
                n_split += 1
            if not targets:
                key = (mark.span.start, mark.span.end, 1, "")
                pairs[key] = (mark.span, [], mark.display_number, False)
                continue
            for rid in targets:
                if rid in refs:
                    key = (mark.span.start, mark.span.end, 0, f"{refs[rid].original_number:08d}")
                    pairs[key] = (mark.span, [rid], refs[rid].original_number, True)
                else:
                    key = (mark.span.start, mark.span.end, 1, rid)
                    pairs[key] = (mark.span, [rid], mark.display_number, False)
        block.marks = []
        for i, key in enumerate(sorted(pairs)):
            span, target_ids, display, resolved = pairs[key]
            block.marks.append(InlineCitationMark(
                id=f"{block.id}/c{i}",
                span=Span(block_id=block.id, start=span.start, end=span.end),
                target_ref_ids=target_ids,
                display_number=display,
                resolved=resolved,
            ))
    return new, n_split


def plain_text(article: Article) -> str:
    """Section titles and block texts in document order, whitespace
    normalized per block, joined by single spaces."""
    parts: list[str] = []

    def _norm(s: str) -> str:
        return " ".join(s.split())

    for block in article.abstract:
        parts.append(_norm(block.text))
    for sec in walk_sections(article):
        parts.append(_norm(sec.heading))
        for block in sec.blocks:
            parts.append(_norm(block.text))
    return " ".join(p for p in parts if p)
