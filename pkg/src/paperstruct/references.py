"""Reference-list orderings and bijective citation renumbering.

Two orderings drive the reference widget: order of first in-text
appearance and alphabetical by first author's surname. Renumbering
rewrites every mark's display number through a RenumberMap while leaving
the cited works untouched, so toggling is lossless.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from paperstruct.errors import IncompleteOrder
from paperstruct.model import Article, document_blocks, reference_map

MODE_APPEARANCE = "appearance"
MODE_ALPHABETICAL = "alphabetical"


@dataclass
class ReferenceOrder:
    mode: str
    sequence: list[str]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "sequence": list(self.sequence),
                "warnings": list(self.warnings)}


@dataclass
class RenumberMap:
    """original_number -> display_number over {1..N}."""

    pairs: dict[int, int]

    def is_bijection(self, n: int) -> bool:
        domain = set(self.pairs)
        image = set(self.pairs.values())
        expected = set(range(1, n + 1))
        return domain == expected and image == expected

    def inverse(self) -> "RenumberMap":
        return RenumberMap(pairs={v: k for k, v in self.pairs.items()})

    def to_dict(self) -> dict:
        return {str(k): v for k, v in sorted(self.pairs.items())}

    @classmethod
    def from_dict(cls, d: dict) -> "RenumberMap":
        return cls(pairs={int(k): v for k, v in d.items()})


def order_by_appearance(article: Article) -> ReferenceOrder:
    """References by document position of their first mark; works never
    cited come last in original-number order. Call after splitting, so
    every mark designates one reference."""
    refs = reference_map(article)
    seen: list[str] = []
    seen_set: set[str] = set()
    for block in document_blocks(article):
        for mark in sorted(block.marks, key=lambda m: (m.span.start, m.span.end, m.id)):
            for rid in mark.target_ref_ids:
                if rid in refs and rid not in seen_set:
                    seen.append(rid)
                    seen_set.add(rid)
    uncited = [r.id for r in sorted(article.references, key=lambda r: r.original_number)
               if r.id not in seen_set]
    return ReferenceOrder(mode=MODE_APPEARANCE, sequence=seen + uncited)


def _year_key(year: str) -> tuple[int, str]:
    m = re.search(r"\d{1,4}", year)
    return (int(m.group()) if m else 10_000, year)


def order_alphabetical(article: Article) -> ReferenceOrder:
    """Case-insensitive sort by first author's surname, ties broken by
    year, then title, then original number. Authorless references sort by
    title and are flagged."""
    warnings: list[str] = []

    def key(ref):
        if ref.authors:
            head = ref.authors[0].surname.casefold()
        else:
            head = ref.title.casefold()
            warnings.append(f"MissingAuthor: {ref.id} sorted by title")
        return (head, _year_key(ref.year), ref.title.casefold(), ref.original_number)

    ordered = sorted(article.references, key=key)
    return ReferenceOrder(mode=MODE_ALPHABETICAL,
                          sequence=[r.id for r in ordered], warnings=warnings)


def renumber(article: Article, order: ReferenceOrder) -> tuple[RenumberMap, Article]:
    """New article whose marks display each reference's 1-based position
    in the given order. Mark targets are never changed."""
    refs = reference_map(article)
    if sorted(order.sequence) != sorted(refs):
        raise IncompleteOrder(
            f"order covers {len(set(order.sequence) & set(refs))} of {len(refs)} references")
    position = {rid: i + 1 for i, rid in enumerate(order.sequence)}
    pairs = {refs[rid].original_number: pos for rid, pos in position.items()}
    renumbered = Article.from_dict(article.to_dict())
    for block in document_blocks(renumbered):
        for mark in block.marks:
            if mark.resolved and mark.target_ref_ids:
                mark.display_number = position[mark.target_ref_ids[0]]
    return RenumberMap(pairs=pairs), renumbered
