"""Citation anchors between articles and deterministic context summaries.

An anchor marks a citable location (a text span or a knowledgebase element)
inside one article. Citation links tie inline marks of other articles to
that anchor under a typed role. Context summaries are assembled purely from
store state, so identical stores always produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from paperstruct.errors import (
    OutOfRange,
    UnknownAnchor,
    UnknownArticle,
    UnknownBlock,
    UnknownCommand,
    UnknownMark,
    UnknownRole,
    UnknownTarget,
)
from paperstruct.kb import KnowledgeBase, StateChange, natural_key
from paperstruct.model import (
    ABSTRACT_PREFIX,
    Article,
    Span,
    block_positions,
    mark_map,
    mark_position_key,
    resolve_span,
)

DEFAULT_ROLES = ("cites_as_evidence", "uses_method", "extends", "discusses")

ABSENT_FROM_ABSTRACT = "not mentioned in the abstract"


@dataclass
class Anchor:
    id: str
    article_id: str
    target: dict  # {"kind": "span", ...} or {"kind": "element", "element_id"}
    topic_label: str

    def to_dict(self) -> dict:
        return {"id": self.id, "article_id": self.article_id,
                "target": dict(self.target), "topic_label": self.topic_label}

    @classmethod
    def from_dict(cls, d: dict) -> "Anchor":
        return cls(id=d["id"], article_id=d["article_id"],
                   target=dict(d["target"]), topic_label=d.get("topic_label", ""))


@dataclass
class CitationLink:
    id: str
    citing_article_id: str
    citing_mark_id: str
    anchor_id: str
    role: str

    def to_dict(self) -> dict:
        return {"id": self.id, "citing_article_id": self.citing_article_id,
                "citing_mark_id": self.citing_mark_id,
                "anchor_id": self.anchor_id, "role": self.role}

    @classmethod
    def from_dict(cls, d: dict) -> "CitationLink":
        return cls(id=d["id"], citing_article_id=d["citing_article_id"],
                   citing_mark_id=d["citing_mark_id"], anchor_id=d["anchor_id"],
                   role=d["role"])


@dataclass
class SummaryEntry:
    kind: str
    span: Span | None
    element_id: str | None
    excerpt: str

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "span": self.span.to_dict() if self.span else None,
                "element_id": self.element_id, "excerpt": self.excerpt}


@dataclass
class ContextSummary:
    anchor_id: str
    entries: list[SummaryEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"anchor_id": self.anchor_id,
                "entries": [e.to_dict() for e in self.entries]}


def _normalize_target(target) -> dict:
    if isinstance(target, Span):
        return {"kind": "span", **target.to_dict()}
    if isinstance(target, str):
        return {"kind": "element", "element_id": target}
    return dict(target)


def _block_flows(block) -> list[str]:
    if block.is_rq_block():
        return block.activity_block.method_flow_ids
    return block.method_flow_ids


class AnchorRegistry:
    """Anchors, curated mentions, and citation links across a set of
    articles. Articles and their knowledgebases are attached separately;
    only anchor state is serialized here."""

    def __init__(self):
        self.articles: dict[str, Article] = {}
        self.kbs: dict[str, KnowledgeBase] = {}
        self.roles: list[str] = list(DEFAULT_ROLES)
        self.anchors: dict[str, Anchor] = {}
        self.mentions: dict[str, list[Span]] = {}
        self.links: dict[str, CitationLink] = {}
        self.log: list[dict] = []

    def attach_article(self, article: Article,
                       kb: KnowledgeBase | None = None) -> None:
        self.articles[article.id] = article
        if kb is not None:
            self.kbs[article.id] = kb

    # -- command path ------------------------------------------------------

    def apply(self, command: dict):
        op = command.get("op")
        handler = getattr(self, f"_op_{op}", None) if isinstance(op, str) else None
        if handler is None:
            raise UnknownCommand(f"no such operation {op!r}")
        normalized = dict(command)
        result, changed = handler(normalized)
        if changed:
            self.log.append(normalized)
        return result

    @classmethod
    def replay(cls, commands: list[dict], articles=(), kbs=None) -> "AnchorRegistry":
        registry = cls()
        kbs = kbs or {}
        for article in articles:
            registry.attach_article(article, kbs.get(article.id))
        for command in commands:
            registry.apply(dict(command))
        return registry

    def _next_id(self, prefix: str, existing) -> str:
        best = 0
        for eid in existing:
            if eid.startswith(prefix) and eid[len(prefix):].isdigit():
                best = max(best, int(eid[len(prefix):]))
        return f"{prefix}{best + 1}"

    # -- operations --------------------------------------------------------

    def add_role(self, role: str) -> str:
        return self.apply({"op": "add_role", "role": role})

    def _op_add_role(self, cmd: dict):
        role = cmd["role"]
        if role in self.roles:
            return role, False
        self.roles.append(role)
        return role, True

    def register_anchor(self, article_id: str, target, topic_label: str = "",
                        anchor_id: str | None = None) -> Anchor:
        cmd = {"op": "register_anchor", "article_id": article_id,
               "target": _normalize_target(target), "topic_label": topic_label}
        if anchor_id:
            cmd["id"] = anchor_id
        return self.apply(cmd)

    def _op_register_anchor(self, cmd: dict):
        article_id = cmd["article_id"]
        article = self.articles.get(article_id)
        if article is None:
            raise UnknownArticle(f"no article {article_id!r}")
        target = dict(cmd["target"])
        if target.get("kind") == "span":
            self._resolve(article, Span.from_dict(target))
        elif target.get("kind") == "element":
            kb = self.kbs.get(article_id)
            if kb is None or target.get("element_id") not in kb.element_ids():
                raise UnknownTarget(
                    f"no element {target.get('element_id')!r} in {article_id!r}")
        else:
            raise UnknownTarget(f"no target kind {target.get('kind')!r}")
        aid = cmd.get("id") or self._next_id("a", self.anchors)
        cmd["id"] = aid
        anchor = Anchor(id=aid, article_id=article_id, target=target,
                        topic_label=cmd.get("topic_label", ""))
        self.anchors[aid] = anchor
        self.mentions.setdefault(aid, [])
        return anchor, True

    def annotate_mention(self, anchor_id: str, span) -> list[Span]:
        cmd = {"op": "annotate_mention", "anchor_id": anchor_id,
               "span": span.to_dict() if isinstance(span, Span) else dict(span)}
        return self.apply(cmd)

    def _op_annotate_mention(self, cmd: dict):
        anchor = self.anchors.get(cmd["anchor_id"])
        if anchor is None:
            raise UnknownAnchor(f"no anchor {cmd['anchor_id']!r}")
        span = Span.from_dict(cmd["span"])
        self._resolve(self.articles[anchor.article_id], span)
        known = self.mentions.setdefault(anchor.id, [])
        if any(s.as_tuple() == span.as_tuple() for s in known):
            return list(known), False
        known.append(span)
        return list(known), True

    def link_citation(self, citing_article_id: str, mark_id: str,
                      anchor_id: str, role: str,
                      link_id: str | None = None) -> CitationLink:
        cmd = {"op": "link_citation", "citing_article_id": citing_article_id,
               "mark_id": mark_id, "anchor_id": anchor_id, "role": role}
        if link_id:
            cmd["id"] = link_id
        return self.apply(cmd)

    def _op_link_citation(self, cmd: dict):
        citing_id = cmd["citing_article_id"]
        citing = self.articles.get(citing_id)
        if citing is None:
            raise UnknownArticle(f"no article {citing_id!r}")
        mark_id = cmd["mark_id"]
        if mark_id not in mark_map(citing):
            raise UnknownMark(f"no mark {mark_id!r} in {citing_id!r}")
        if cmd["anchor_id"] not in self.anchors:
            raise UnknownAnchor(f"no anchor {cmd['anchor_id']!r}")
        if cmd["role"] not in self.roles:
            raise UnknownRole(f"role {cmd['role']!r} not configured")
        # same mark hitting the same anchor again is the same link
        for link in self.links.values():
            if (link.citing_article_id == citing_id
                    and link.citing_mark_id == mark_id
                    and link.anchor_id == cmd["anchor_id"]):
                return link, False
        lid = cmd.get("id") or self._next_id("l", self.links)
        cmd["id"] = lid
        link = CitationLink(id=lid, citing_article_id=citing_id,
                            citing_mark_id=mark_id,
                            anchor_id=cmd["anchor_id"], role=cmd["role"])
        self.links[lid] = link
        return link, True

    # -- reads -------------------------------------------------------------

    def _resolve(self, article: Article, span: Span) -> str:
        try:
            return resolve_span(article, span)
        except (UnknownBlock, OutOfRange) as exc:
            raise UnknownTarget(str(exc)) from exc

    def context_summary(self, anchor_id: str) -> ContextSummary:
        """Four-part assembly: first introduction, later mentions in document
        order, related knowledgebase elements, explicit abstract presence."""
        anchor = self.anchors.get(anchor_id)
        if anchor is None:
            raise UnknownAnchor(f"no anchor {anchor_id!r}")
        article = self.articles[anchor.article_id]
        positions = block_positions(article)
        spans = sorted(self.mentions.get(anchor_id, []),
                       key=lambda s: (positions.get(s.block_id, len(positions)),
                                      s.start, s.end))
        entries: list[SummaryEntry] = []
        for i, span in enumerate(spans):
            kind = "first_introduction" if i == 0 else "later_mention"
            entries.append(SummaryEntry(kind, span, None,
                                        resolve_span(article, span)))
        entries.extend(self._related_entries(anchor))
        abstract_hits = [s for s in spans if s.block_id.startswith(ABSTRACT_PREFIX)]
        if abstract_hits:
            hit = abstract_hits[0]
            entries.append(SummaryEntry("abstract_presence", hit, None,
                                        resolve_span(article, hit)))
        else:
            entries.append(SummaryEntry("abstract_presence", None, None,
                                        ABSENT_FROM_ABSTRACT))
        return ContextSummary(anchor_id=anchor_id, entries=entries)

    def _related_entries(self, anchor: Anchor) -> list[SummaryEntry]:
        kb = self.kbs.get(anchor.article_id)
        if kb is None:
            return []
        target = anchor.target
        flow_ids: list[str] = []
        block_ids: list[str] = []
        blocks = kb.list_blocks()
        if target["kind"] == "element":
            eid = target["element_id"]
            if eid in kb.flows:
                flow_ids.append(eid)
            else:
                for fid in sorted(kb.flows, key=natural_key):
                    flow = kb.flows[fid]
                    named = {p.entity_id for p in flow.participants}
                    named.update(t.subject for t in flow.triggers if t.subject)
                    named.update(e.entity_id for e in flow.effects
                                 if isinstance(e, StateChange))
                    if eid in named:
                        flow_ids.append(fid)
            for block in blocks:
                if block.id == eid or set(_block_flows(block)) & set(flow_ids):
                    block_ids.append(block.id)
        else:
            span = Span.from_dict(target)
            for block in blocks:
                overlap = any(s.block_id == span.block_id
                              and s.start < span.end and span.start < s.end
                              for s in block.spans())
                if overlap:
                    block_ids.append(block.id)
                    flow_ids.extend(f for f in _block_flows(block)
                                    if f not in flow_ids)
            flow_ids.sort(key=natural_key)
        by_id = {b.id: b for b in blocks}
        out = [SummaryEntry("related_flow", None, fid, kb.flows[fid].name)
               for fid in flow_ids]
        out.extend(SummaryEntry("related_block", None, bid,
                                by_id[bid].goal_label)
                   for bid in block_ids)
        return out

    def backlinks(self, article_id: str) -> list[CitationLink]:
        """Inbound links whose anchor lives in the given article, ordered by
        citing article then mark document position."""
        inbound = [link for link in self.links.values()
                   if self.anchors[link.anchor_id].article_id == article_id]

        def key(link: CitationLink):
            citing = self.articles.get(link.citing_article_id)
            if citing is not None:
                try:
                    pos = mark_position_key(citing, link.citing_mark_id)
                    return (link.citing_article_id, 0, pos, link.id)
                except UnknownBlock:
                    pass
            return (link.citing_article_id, 1, (0, 0, 0), link.id)

        return sorted(inbound, key=key)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "roles": list(self.roles),
            "anchors": [a.to_dict() for a in self.anchors.values()],
            "mentions": {aid: [s.to_dict() for s in spans]
                         for aid, spans in sorted(self.mentions.items(),
                                                  key=lambda kv: natural_key(kv[0]))},
            "links": [link.to_dict() for link in self.links.values()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnchorRegistry":
        registry = cls()
        registry.roles = list(d.get("roles", DEFAULT_ROLES))
        for a in d.get("anchors", []):
            anchor = Anchor.from_dict(a)
            registry.anchors[anchor.id] = anchor
            registry.mentions.setdefault(anchor.id, [])
        for aid, spans in d.get("mentions", {}).items():
            registry.mentions[aid] = [Span.from_dict(s) for s in spans]
        for raw in d.get("links", []):
            link = CitationLink.from_dict(raw)
            registry.links[link.id] = link
        return registry
