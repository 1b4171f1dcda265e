"""Multi-article library: persistence, cross-article services, consistency.

Layout under the content root is one directory per article with snapshot
JSON plus the append-only command log, and one shared directory for the
anchor registry. Everything is canonical JSON, so stores diff cleanly and
hash stably.
"""

from __future__ import annotations

import json
import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from paperstruct.anchors import AnchorRegistry
from paperstruct.canon import canonical_json, sha256_of
from paperstruct.errors import (
    CorruptStore,
    OutOfRange,
    UnknownArticle,
    UnknownBlock,
    UnknownInstrument,
)
from paperstruct.ingest import RawSource, ingest
from paperstruct.kb import FLOW_METHOD, Flow, KnowledgeBase, natural_key
from paperstruct.model import Article, Span, mark_map, resolve_span


def slugify(article_id: str) -> str:
    """Filesystem-safe directory name for an article id (DOIs contain '/')."""
    return re.sub(r"[^A-Za-z0-9._-]", "_", article_id)


def method_signature(kb: KnowledgeBase, flow: Flow) -> str:
    """Flow name plus participant roles resolved to class ids, in declared
    order; the clustering key for instrument usage pages."""
    parts = []
    for p in flow.participants:
        if p.entity_id in kb.instances:
            class_id = kb.instances[p.entity_id].class_id
        else:
            class_id = p.entity_id
        parts.append(f"{p.role}:{class_id}")
    return flow.name + "|" + ",".join(parts)


@dataclass
class InstrumentUsageCluster:
    instrument_id: str
    groups: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"instrument_id": self.instrument_id,
                "groups": {sig: [list(member) for member in members]
                           for sig, members in self.groups.items()}}


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptStore(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptStore(f"{path}: {exc}") from exc


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorruptStore(f"{path}:{i}: {exc}") from exc
    return out


def _write_jsonl(path: Path, commands: list[dict]) -> None:
    lines = [json.dumps(c, ensure_ascii=False) for c in commands]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _build(path: Path, builder, data: dict):
    try:
        return builder(data)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptStore(f"{path}: {exc!r}") from exc


class LibraryStore:
    """All articles of one library plus the shared anchor registry."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self.articles: dict[str, Article] = {}
        self.kbs: dict[str, KnowledgeBase] = {}
        self.registry = AnchorRegistry()

    # -- membership --------------------------------------------------------

    def add_article(self, article: Article,
                    kb: KnowledgeBase | None = None) -> KnowledgeBase:
        if kb is None:
            kb = KnowledgeBase(article=article)
        else:
            kb.article = article
            kb.article_id = kb.article_id or article.id
        self.articles[article.id] = article
        self.kbs[article.id] = kb
        self.registry.attach_article(article, kb)
        return kb

    def ingest_source(self, source: RawSource):
        article, report = ingest(source)
        self.add_article(article)
        return article, report

    def remove_article(self, article_id: str) -> None:
        if article_id not in self.articles:
            raise UnknownArticle(f"no article {article_id!r}")
        del self.articles[article_id]
        del self.kbs[article_id]
        self.registry.articles.pop(article_id, None)
        self.registry.kbs.pop(article_id, None)

    def resolve_article_id(self, key: str) -> str:
        """Accepts the raw article id or its directory slug."""
        if key in self.articles:
            return key
        for aid in self.articles:
            if slugify(aid) == key:
                return aid
        raise UnknownArticle(f"no article {key!r}")

    def kb_for(self, key: str) -> KnowledgeBase:
        return self.kbs[self.resolve_article_id(key)]

    def article_for(self, key: str) -> Article:
        return self.articles[self.resolve_article_id(key)]

    # -- persistence -------------------------------------------------------

    def save(self, root: str | Path | None = None) -> Path:
        root = Path(root) if root is not None else self.root
        if root is None:
            raise ValueError("no content root configured")
        self.root = root
        articles_dir = root / "articles"
        articles_dir.mkdir(parents=True, exist_ok=True)
        keep = set()
        for aid in sorted(self.articles):
            slug = slugify(aid)
            keep.add(slug)
            d = articles_dir / slug
            d.mkdir(exist_ok=True)
            (d / "article.json").write_text(
                canonical_json(self.articles[aid].to_dict()), encoding="utf-8")
            kb = self.kbs[aid]
            (d / "kb.json").write_text(canonical_json(kb.to_dict()),
                                       encoding="utf-8")
            _write_jsonl(d / "kb_log.jsonl", kb.log)
        for child in articles_dir.iterdir():
            if child.is_dir() and child.name not in keep:
                shutil.rmtree(child)
        shared = root / "shared"
        shared.mkdir(exist_ok=True)
        (shared / "shared.json").write_text(
            canonical_json(self.registry.to_dict()), encoding="utf-8")
        _write_jsonl(shared / "shared_log.jsonl", self.registry.log)
        return root

    @classmethod
    def load(cls, root: str | Path) -> "LibraryStore":
        root = Path(root)
        store = cls(root)
        articles_dir = root / "articles"
        if articles_dir.exists():
            for d in sorted(articles_dir.iterdir()):
                if not d.is_dir():
                    continue
                article_path = d / "article.json"
                article = _build(article_path, Article.from_dict,
                                 _read_json(article_path))
                kb_path = d / "kb.json"
                if kb_path.exists():
                    kb = _build(kb_path, KnowledgeBase.from_dict,
                                _read_json(kb_path))
                else:
                    kb = KnowledgeBase(article_id=article.id)
                kb.log = _read_jsonl(d / "kb_log.jsonl")
                store.add_article(article, kb)
        shared_path = root / "shared" / "shared.json"
        if shared_path.exists():
            store.registry = _build(shared_path, AnchorRegistry.from_dict,
                                    _read_json(shared_path))
            store.registry.log = _read_jsonl(root / "shared" / "shared_log.jsonl")
            for aid, article in store.articles.items():
                store.registry.attach_article(article, store.kbs[aid])
        return store

    def snapshot(self) -> dict:
        """Order-normalized full state, the hashing and equality basis."""
        return {
            "articles": [self.articles[aid].to_dict()
                         for aid in sorted(self.articles)],
            "kbs": [self.kbs[aid].to_dict() for aid in sorted(self.kbs)],
            "shared": self.registry.to_dict(),
        }

    def store_hash(self) -> str:
        return sha256_of(self.snapshot())

    # -- cross-article services --------------------------------------------

    def instruments_index(self) -> dict[str, dict]:
        index: dict[str, dict] = {}
        for aid in sorted(self.kbs):
            for iid, instrument in self.kbs[aid].instruments.items():
                entry = index.setdefault(iid, {"name": instrument.name,
                                               "articles": []})
                entry["articles"].append(aid)
        return index

    def cluster_by_method(self, instrument_id: str) -> InstrumentUsageCluster:
        """Usages of one instrument across the library, grouped by the
        method signature of the flow that produced each dataset."""
        if instrument_id not in self.instruments_index():
            raise UnknownInstrument(f"no instrument {instrument_id!r}")
        groups: dict[str, list[tuple[str, str]]] = {}
        for aid in sorted(self.kbs):
            kb = self.kbs[aid]
            for fid in sorted(kb.flows, key=natural_key):
                flow = kb.flows[fid]
                if flow.kind != FLOW_METHOD or flow.dataset_id is None:
                    continue
                dataset = kb.datasets.get(flow.dataset_id)
                if dataset is None or instrument_id not in dataset.instrument_ids:
                    continue
                groups.setdefault(method_signature(kb, flow), []).append((aid, fid))
        ordered = {sig: sorted(groups[sig]) for sig in sorted(groups)}
        return InstrumentUsageCluster(instrument_id=instrument_id,
                                      groups=ordered)

    # -- consistency -------------------------------------------------------

    def consistency_lint(self) -> dict:
        """Cross-store report: same-named classes whose shared dimensions
        declare disjoint state sets, and references that no longer resolve.
        Read-only."""
        conflicts = []
        by_name: dict[str, dict[str, dict[str, set[str]]]] = {}
        for aid in sorted(self.kbs):
            for cls in self.kbs[aid].classes.values():
                dims = by_name.setdefault(cls.name, {}).setdefault(aid, {})
                for dim in cls.dimensions:
                    dims.setdefault(dim.name, set()).update(dim.states)
        for name in sorted(by_name):
            articles = sorted(by_name[name])
            for i, a in enumerate(articles):
                for b in articles[i + 1:]:
                    shared_dims = sorted(set(by_name[name][a])
                                         & set(by_name[name][b]))
                    for dim in shared_dims:
                        left, right = by_name[name][a][dim], by_name[name][b][dim]
                        if left and right and not (left & right):
                            conflicts.append({
                                "kind": "class_conflict",
                                "class_name": name,
                                "dimension": dim,
                                "articles": [a, b],
                                "states": [sorted(left), sorted(right)],
                            })
        dangling = []
        for aid in sorted(self.registry.anchors, key=natural_key):
            anchor = self.registry.anchors[aid]
            problem = self._anchor_problem(anchor)
            if problem:
                dangling.append({"kind": "dangling_anchor", "anchor_id": aid,
                                 "detail": problem})
        for lid in sorted(self.registry.links, key=natural_key):
            link = self.registry.links[lid]
            problem = self._link_problem(link)
            if problem:
                dangling.append({"kind": "dangling_link", "link_id": lid,
                                 "detail": problem})
        return {"conflicts": conflicts, "dangling": dangling}

    def _anchor_problem(self, anchor) -> str | None:
        article = self.articles.get(anchor.article_id)
        if article is None:
            return f"article {anchor.article_id!r} not in library"
        target = anchor.target
        if target.get("kind") == "span":
            try:
                resolve_span(article, Span.from_dict(target))
            except (UnknownBlock, OutOfRange) as exc:
                return str(exc)
        elif target.get("kind") == "element":
            kb = self.kbs.get(anchor.article_id)
            if kb is None or target.get("element_id") not in kb.element_ids():
                return f"element {target.get('element_id')!r} not found"
        return None

    def _link_problem(self, link) -> str | None:
        if link.anchor_id not in self.registry.anchors:
            return f"anchor {link.anchor_id!r} not found"
        citing = self.articles.get(link.citing_article_id)
        if citing is None:
            return f"article {link.citing_article_id!r} not in library"
        if link.citing_mark_id not in mark_map(citing):
            return f"mark {link.citing_mark_id!r} not found"
        return None
