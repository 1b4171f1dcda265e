"""Table-of-contents construction and fisheye selection.

The TOC mirrors level-1 and level-2 section headings only. Selecting a
level-1 entry reveals its children; everything else stays collapsed.
Discourse blocks can be grafted in as child entries under the section
holding their goal span.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from paperstruct.errors import OutOfRange, UnknownBlock, UnknownSection, UnknownSpan
from paperstruct.model import (
    ABSTRACT_PREFIX,
    Article,
    Span,
    block_positions,
    parent_sections,
    resolve_span,
    section_of,
    walk_sections,
)

log = logging.getLogger(__name__)

ENTRY_SECTION = "section"
ENTRY_ACTIVITY_BLOCK = "activity_block"
ENTRY_RQ_BLOCK = "rq_block"

FRONT_MATTER_ID = "front-matter"
FRONT_MATTER_LABEL = "Front matter"


@dataclass
class TocEntry:
    kind: str
    section_id: str
    level: int
    label: str
    children: list["TocEntry"] = field(default_factory=list)
    targets: list[Span] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "section_id": self.section_id,
            "level": self.level,
            "label": self.label,
            "targets": [t.to_dict() for t in self.targets],
            "flags": list(self.flags),
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TocEntry":
        return cls(
            kind=d["kind"],
            section_id=d["section_id"],
            level=d["level"],
            label=d["label"],
            children=[cls.from_dict(c) for c in d.get("children", [])],
            targets=[Span.from_dict(t) for t in d.get("targets", [])],
            flags=list(d.get("flags", [])),
        )

    def copy(self) -> "TocEntry":
        return TocEntry.from_dict(self.to_dict())


@dataclass
class TocView:
    entries: list[TocEntry]
    selected: str | None = None

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "selected": self.selected,
        }


def _entry_for(section) -> TocEntry:
    label = section.heading
    flags = []
    if not label:
        label = "(untitled)"
        flags = ["untitled"]
        log.warning("section %s has no heading; labeled %r", section.id, label)
    return TocEntry(kind=ENTRY_SECTION, section_id=section.id,
                    level=section.level, label=label, flags=flags)


def build_toc(article: Article) -> list[TocEntry]:
    """Tree of level-1 entries, each carrying its level-2 children."""
    toc: list[TocEntry] = []
    for section in article.sections:
        entry = _entry_for(section)
        entry.children = [_entry_for(child) for child in section.children]
        toc.append(entry)
    return toc


def _flatten(entries: list[TocEntry]) -> list[TocEntry]:
    out: list[TocEntry] = []
    for entry in entries:
        out.append(entry)
        out.extend(_flatten(entry.children))
    return out


def fisheye_select(toc: list[TocEntry], selected: str | None) -> TocView:
    """Flattened visible list: all level-1 entries, plus the subtree of
    the selected one inserted right after it."""
    if selected is not None and selected not in {e.section_id for e in toc}:
        raise UnknownSection(f"{selected!r} is not a top-level TOC entry")
    visible: list[TocEntry] = []
    for entry in toc:
        visible.append(entry)
        if selected is not None and entry.section_id == selected:
            visible.extend(_flatten(entry.children))
    return TocView(entries=visible, selected=selected)


def _visible_host(article: Article, block_id: str) -> str | None:
    """Nearest TOC-visible (level <= 2) section containing the block.
    None means the block sits in front matter, outside the section tree."""
    section = section_of(article, block_id)
    if section is None:
        return None
    parents = parent_sections(article)
    levels = {s.id: s.level for s in walk_sections(article)}
    current = section.id
    while levels[current] > 2:
        current = parents[current]
    return current


def extend_toc(article: Article, toc: list[TocEntry], blocks: list) -> list[TocEntry]:
    """Graft discourse blocks into a copy of the TOC as child entries under
    the section holding each block's goal span. Goal spans in the abstract
    hang under one synthetic front-matter entry. Original entries keep
    their order."""
    extended = [entry.copy() for entry in toc]
    if not blocks:
        return extended
    front: TocEntry | None = None
    by_id = {entry.section_id: entry for entry in extended}
    positions = block_positions(article)

    def block_sort_key(block):
        span = block.goal_span
        return (positions.get(span.block_id, len(positions)), span.start, block.id)

    for block in sorted(blocks, key=block_sort_key):
        for span in block.spans():
            try:
                resolve_span(article, span)
            except (UnknownBlock, OutOfRange) as exc:
                raise UnknownSpan(f"block {block.id!r}: {exc}") from exc
        goal = block.goal_span
        kind = ENTRY_RQ_BLOCK if block.is_rq_block() else ENTRY_ACTIVITY_BLOCK
        entry = TocEntry(kind=kind, section_id=block.id, level=2,
                         label=block.goal_label, targets=list(block.spans()))
        if goal.block_id.startswith(ABSTRACT_PREFIX):
            if front is None:
                front = TocEntry(kind=ENTRY_SECTION, section_id=FRONT_MATTER_ID,
                                 level=1, label=FRONT_MATTER_LABEL,
                                 flags=["front_matter"])
                extended.insert(0, front)
            entry.flags.append("front_matter")
            front.children.append(entry)
            continue
        host = _visible_host(article, goal.block_id)
        if host is None:
            raise UnknownSpan(f"goal span of {block.id!r} is outside the document")
        host_entry = by_id.get(host)
        if host_entry is None:
            # host is level 2: find it among children
            for top in extended:
                for child in top.children:
                    if child.section_id == host:
                        host_entry = child
                        break
                if host_entry is not None:
                    break
        if host_entry is None:
            raise UnknownSpan(f"no TOC entry hosts section {host!r}")
        host_entry.children.append(entry)
    return extended
