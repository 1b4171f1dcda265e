"""Structured browsing and modeling tools for full-text research articles."""

from paperstruct.ingest import (
    IngestReport,
    RawSource,
    ingest,
    parse_article,
    plain_text,
    split_grouped_citations,
)
from paperstruct.model import Article, resolve_span, section_of

__all__ = [
    "Article",
    "IngestReport",
    "RawSource",
    "ingest",
    "parse_article",
    "plain_text",
    "resolve_span",
    "section_of",
    "split_grouped_citations",
]

__version__ = "0.1.0"
