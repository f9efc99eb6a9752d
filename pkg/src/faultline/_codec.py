"""Value encoding shared by call-site digests and report serialization."""

from __future__ import annotations

import hashlib
import json
from typing import Any

BYTES_TAG = "$bytes"


def to_jsonable(value: Any) -> Any:
    """Map a response/argument value onto plain JSON types.

    Byte strings become ``{"$bytes": "<hex>"}``; tuples become lists.
    Anything else unknown is rendered with ``repr`` so that digests and
    previews still work for opaque objects.
    """
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, (bytes, bytearray)):
        return {BYTES_TAG: bytes(value).hex()}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return {"$repr": repr(value)}


def from_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        if len(value) == 1 and BYTES_TAG in value:
            return bytes.fromhex(value[BYTES_TAG])
        return {k: from_jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [from_jsonable(v) for v in value]
    return value


def canonical_bytes(value: Any) -> bytes:
    # sorted keys + fixed separators: the digest must not depend on dict order
    return json.dumps(
        to_jsonable(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def preview(value: Any) -> str:
    """Human-readable rendering used in report cells."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bytes, bytearray)):
        return "bytes[" + bytes(value).hex() + "]"
    try:
        return json.dumps(to_jsonable(value), ensure_ascii=False)
    except (TypeError, ValueError):
        return repr(value)
