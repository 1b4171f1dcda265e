"""Command line front end for the article library.

Every verb prints canonical JSON on stdout so output can be piped,
diffed, or archived. The content root comes from ``--root``, falling
back to the PAPERSTRUCT_ROOT environment variable, then ``./library``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from paperstruct.canon import canonical_json
from paperstruct.errors import PaperstructError
from paperstruct.ingest import RawSource
from paperstruct.kb.store import KnowledgeBase
from paperstruct.library import LibraryStore, slugify
from paperstruct.model import Span
from paperstruct.navigation import build_toc, extend_toc, fisheye_select
from paperstruct.references import (
    MODE_ALPHABETICAL,
    MODE_APPEARANCE,
    order_alphabetical,
    order_by_appearance,
    renumber,
)


def _emit(payload) -> None:
    sys.stdout.write(canonical_json(payload))


def _load_commands(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = payload.get("commands", [])
    if not isinstance(payload, list):
        raise ValueError("command file must hold a list or {'commands': [...]}")
    return payload


def cmd_ingest(lib: LibraryStore, args) -> int:
    source = RawSource.from_file(args.file)
    article, report = lib.ingest_source(source)
    lib.save()
    _emit({"article_id": article.id, "slug": slugify(article.id),
           "report": report.to_dict()})
    return 0


def cmd_validate(lib: LibraryStore, args) -> int:
    problems = []
    for aid in sorted(lib.kbs):
        kb = lib.kbs[aid]
        replayed = KnowledgeBase.replay(kb.log, article=lib.articles.get(aid),
                                        article_id=aid)
        if canonical_json(replayed.to_dict()) != canonical_json(kb.to_dict()):
            problems.append({"kind": "replay_mismatch", "article_id": aid})
    lint = lib.consistency_lint()
    report = {
        "articles": len(lib.articles),
        "problems": problems,
        "lint": lint,
    }
    _emit(report)
    dirty = problems or lint["conflicts"] or lint["dangling"]
    return 1 if dirty else 0


def cmd_toc(lib: LibraryStore, args) -> int:
    aid = lib.resolve_article_id(args.article)
    article = lib.articles[aid]
    toc = extend_toc(article, build_toc(article), lib.kbs[aid].list_blocks())
    _emit(fisheye_select(toc, args.select).to_dict())
    return 0


def cmd_refs(lib: LibraryStore, args) -> int:
    aid = lib.resolve_article_id(args.article)
    article = lib.articles[aid]
    if args.order == MODE_APPEARANCE:
        ordering = order_by_appearance(article)
    else:
        ordering = order_alphabetical(article)
    mapping, renumbered = renumber(article, ordering)
    refs = {r.id: r for r in renumbered.references}
    _emit({
        "article_id": aid,
        "mode": ordering.mode,
        "order": [refs[rid].to_dict() for rid in ordering.sequence],
        "renumber_map": mapping.to_dict(),
        "warnings": list(ordering.warnings),
    })
    return 0


def cmd_kb_apply(lib: LibraryStore, args) -> int:
    aid = lib.resolve_article_id(args.article)
    kb = lib.kbs[aid]
    commands = _load_commands(args.file)
    for command in commands:
        kb.apply(command)
    lib.save()
    _emit({"article_id": aid, "applied": len(commands), "log_size": len(kb.log)})
    return 0


def cmd_anchor_add(lib: LibraryStore, args) -> int:
    aid = lib.resolve_article_id(args.article)
    if args.element:
        target = args.element
    else:
        target = Span(args.block, args.start, args.end)
    anchor = lib.registry.register_anchor(aid, target, topic_label=args.label)
    lib.save()
    _emit(anchor.to_dict())
    return 0


def cmd_anchor_link(lib: LibraryStore, args) -> int:
    citing = lib.resolve_article_id(args.citing)
    link = lib.registry.link_citation(citing, args.mark, args.anchor, args.role)
    lib.save()
    _emit(link.to_dict())
    return 0


def cmd_anchor_context(lib: LibraryStore, args) -> int:
    _emit(lib.registry.context_summary(args.anchor).to_dict())
    return 0


def cmd_lint(lib: LibraryStore, args) -> int:
    _emit(lib.consistency_lint())
    return 0


def cmd_serve(lib: LibraryStore, args) -> int:
    import uvicorn

    from paperstruct.service import create_app

    uvicorn.run(create_app(lib), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paperstruct")
    parser.add_argument("--root", default=None,
                        help="library directory (default: $PAPERSTRUCT_ROOT or ./library)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="add an article from a JATS XML file")
    p.add_argument("file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("validate", help="check stored state replays and lints clean")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("toc", help="print the navigation view of an article")
    p.add_argument("article")
    p.add_argument("--select", default=None)
    p.set_defaults(func=cmd_toc)

    p = sub.add_parser("refs", help="print the reference list in a chosen order")
    p.add_argument("article")
    p.add_argument("--order", choices=[MODE_APPEARANCE, MODE_ALPHABETICAL],
                   default=MODE_APPEARANCE)
    p.set_defaults(func=cmd_refs)

    p = sub.add_parser("kb", help="knowledgebase operations")
    kb_sub = p.add_subparsers(dest="kb_verb", required=True)
    ap = kb_sub.add_parser("apply", help="apply a JSON list of commands")
    ap.add_argument("file")
    ap.add_argument("--article", required=True)
    ap.set_defaults(func=cmd_kb_apply)

    p = sub.add_parser("anchor", help="citation anchor operations")
    a_sub = p.add_subparsers(dest="anchor_verb", required=True)
    aa = a_sub.add_parser("add", help="register an anchor on an article")
    aa.add_argument("article")
    aa.add_argument("--block", default=None)
    aa.add_argument("--start", type=int, default=0)
    aa.add_argument("--end", type=int, default=0)
    aa.add_argument("--element", default=None)
    aa.add_argument("--label", default="")
    aa.set_defaults(func=cmd_anchor_add)
    al = a_sub.add_parser("link", help="link a citation mark to an anchor")
    al.add_argument("citing")
    al.add_argument("mark")
    al.add_argument("anchor")
    al.add_argument("--role", default="discusses")
    al.set_defaults(func=cmd_anchor_link)
    ac = a_sub.add_parser("context", help="print an anchor's context summary")
    ac.add_argument("anchor")
    ac.set_defaults(func=cmd_anchor_context)

    p = sub.add_parser("lint", help="report cross-article inconsistencies")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    root = args.root or os.environ.get("PAPERSTRUCT_ROOT") or "library"
    try:
        lib = LibraryStore.load(Path(root))
        return args.func(lib, args)
    except PaperstructError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 2
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
