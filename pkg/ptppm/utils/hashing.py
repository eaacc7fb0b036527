"""
Config hashing for output headers.

The hash covers the canonical JSON form (sorted keys, no whitespace) of
everything that determines a run, so two runs with equal hashes and seeds
produce identical files.
"""
import hashlib
import json
from typing import Any

from pydantic import BaseModel

from ..constants import TOOL_NAME
from ..models.outputs import Header

CONFIG_HASH_LENGTH = 16


def canonical_json(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(payload: Any) -> str:
    """Short SHA-256 hex digest of the canonical JSON form."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:CONFIG_HASH_LENGTH]


def make_header(command: str, payload: Any) -> Header:
    return Header(tool=TOOL_NAME, config_hash=config_hash(payload), command=command)
