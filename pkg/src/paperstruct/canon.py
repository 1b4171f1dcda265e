"""Canonical JSON serialization.

All persisted files and API payloads go through ``canonical_json`` so that
identical in-memory state always produces byte-identical output: UTF-8,
two-space indentation, keys in the order the ``to_dict`` methods emit them,
LF line endings, and a single trailing newline.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(data: Any) -> str:
    """Serialize ``data`` to the canonical JSON text form."""
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def canonical_bytes(data: Any) -> bytes:
    return canonical_json(data).encode("utf-8")


def sha256_of(data: Any) -> str:
    """Stable content hash of a JSON-serializable structure."""
    return hashlib.sha256(canonical_bytes(data)).hexdigest()
