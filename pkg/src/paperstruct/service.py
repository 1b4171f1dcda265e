"""HTTP facade over a library store.

Every GET endpoint is a pure view: it reads the store and builds a JSON
response without mutating anything, so repeated reads never change the
store hash. Writes (ingest, KB commands) are serialized behind a lock
and persist to disk when the library has a root directory.
"""

from __future__ import annotations

import threading
from pathlib import PurePosixPath

from fastapi import FastAPI, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse

from paperstruct.errors import (
    MalformedXml,
    PaperstructError,
    UnknownAnchor,
    UnknownArticle,
    UnknownInstrument,
    UnknownSection,
    UnrecognizedSchema,
)
from paperstruct.ingest import RawSource
from paperstruct.library import LibraryStore, slugify
from paperstruct.navigation import build_toc, extend_toc, fisheye_select
from paperstruct.references import (
    MODE_ALPHABETICAL,
    MODE_APPEARANCE,
    order_alphabetical,
    order_by_appearance,
    renumber,
)

NOT_FOUND_ERRORS = (UnknownArticle, UnknownAnchor, UnknownInstrument, UnknownSection)


def _error_body(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def create_app(library: LibraryStore) -> FastAPI:
    app = FastAPI(title="paperstruct", docs_url=None, redoc_url=None)
    write_lock = threading.Lock()

    def resolve(key: str) -> str:
        try:
            return library.resolve_article_id(key)
        except UnknownArticle as exc:
            raise HTTPException(status_code=404, detail=_error_body(exc))

    def persist() -> None:
        if library.root is not None:
            library.save()

    @app.exception_handler(PaperstructError)
    def domain_error(request: Request, exc: PaperstructError) -> JSONResponse:
        status = 404 if isinstance(exc, NOT_FOUND_ERRORS) else 400
        return JSONResponse(status_code=status, content=_error_body(exc))

    @app.exception_handler(HTTPException)
    def http_error(request: Request, exc: HTTPException) -> JSONResponse:
        body = exc.detail if isinstance(exc.detail, dict) else {"error": "HTTPException",
                                                               "message": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content=body)

    # -- article views -----------------------------------------------------

    @app.get("/articles")
    def list_articles() -> dict:
        rows = []
        for aid in sorted(library.articles):
            art = library.articles[aid]
            rows.append({
                "id": aid,
                "slug": slugify(aid),
                "title": art.title,
                "authors": [f"{p.given} {p.surname}".strip() for p in art.authors],
            })
        return {"articles": rows}

    @app.get("/articles/{key}")
    def get_article(key: str) -> dict:
        aid = resolve(key)
        return library.articles[aid].to_dict()

    @app.get("/articles/{key}/toc")
    def get_toc(key: str, selected: str | None = None) -> dict:
        aid = resolve(key)
        article = library.articles[aid]
        toc = build_toc(article)
        extended = extend_toc(article, toc, library.kbs[aid].list_blocks())
        return fisheye_select(extended, selected).to_dict()

    @app.get("/articles/{key}/references")
    def get_references(key: str, order: str = MODE_APPEARANCE) -> dict:
        aid = resolve(key)
        article = library.articles[aid]
        if order == MODE_APPEARANCE:
            ordering = order_by_appearance(article)
        elif order == MODE_ALPHABETICAL:
            ordering = order_alphabetical(article)
        else:
            raise HTTPException(status_code=400, detail={
                "error": "InvalidOrderMode",
                "message": f"order must be {MODE_APPEARANCE!r} or {MODE_ALPHABETICAL!r}",
            })
        mapping, renumbered = renumber(article, ordering)
        refs = {r.id: r for r in renumbered.references}
        listed = [refs[rid].to_dict() for rid in ordering.sequence]
        return {
            "article_id": aid,
            "mode": ordering.mode,
            "order": listed,
            "renumber_map": mapping.to_dict(),
            "warnings": list(ordering.warnings),
        }

    @app.get("/articles/{key}/blocks")
    def get_blocks(key: str) -> dict:
        aid = resolve(key)
        blocks = library.kbs[aid].list_blocks()
        return {"article_id": aid, "blocks": [b.to_dict() for b in blocks]}

    @app.get("/articles/{key}/model")
    def get_model(key: str) -> dict:
        aid = resolve(key)
        return library.kbs[aid].to_dict()

    @app.get("/articles/{key}/backlinks")
    def get_backlinks(key: str) -> dict:
        aid = resolve(key)
        links = library.registry.backlinks(aid)
        return {"article_id": aid, "backlinks": [l.to_dict() for l in links]}

    @app.get("/anchors/{anchor_id}/context")
    def get_context(anchor_id: str) -> dict:
        return library.registry.context_summary(anchor_id).to_dict()

    @app.get("/instruments/{instrument_id}/usages")
    def get_usages(instrument_id: str) -> dict:
        return library.cluster_by_method(instrument_id).to_dict()

    # -- writes ------------------------------------------------------------

    @app.post("/ingest")
    async def post_ingest(file: UploadFile) -> dict:
        data = await file.read()
        article_id = PurePosixPath(file.filename or "upload.xml").stem
        source = RawSource(article_id=article_id, data=data,
                           source_name=file.filename or "")
        with write_lock:
            try:
                article, report = library.ingest_source(source)
            except (MalformedXml, UnrecognizedSchema) as exc:
                raise HTTPException(status_code=400, detail=_error_body(exc))
            persist()
        return {
            "article_id": article.id,
            "slug": slugify(article.id),
            "report": report.to_dict(),
        }

    @app.post("/kb/{key}/commands")
    async def post_commands(key: str, request: Request) -> dict:
        aid = resolve(key)
        payload = await request.json()
        commands = payload.get("commands") if isinstance(payload, dict) else payload
        if not isinstance(commands, list):
            raise HTTPException(status_code=400, detail={
                "error": "InvalidPayload",
                "message": "body must be a list of commands or {'commands': [...]}",
            })
        kb = library.kbs[aid]
        with write_lock:
            applied = 0
            for command in commands:
                try:
                    kb.apply(command)
                except PaperstructError as exc:
                    # Earlier commands in the batch stay applied; the caller
                    # learns how far the batch got before the failure.
                    raise HTTPException(status_code=400, detail={
                        "error": type(exc).__name__,
                        "message": str(exc),
                        "applied": applied,
                    })
                applied += 1
            persist()
        return {"article_id": aid, "applied": applied, "log_size": len(kb.log)}

    return app
