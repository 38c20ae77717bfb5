"""Small shared helpers: stable hashing, canonical JSON, data directory resolution."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

DATA_DIR_ENV = "TIPPY_DATA_DIR"
DEFAULT_DATA_DIR = "./data"


def stable_hash64(*parts: object) -> int:
    """Deterministic 64-bit hash of the given parts; stable across processes.

    Python's builtin hash() is salted per process, so every seeded draw in the
    engine and the embedding hashes go through this instead.
    """
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def unit_draw(*parts: object) -> float:
    """Deterministic draw in [0, 1) keyed by the given parts."""
    return stable_hash64(*parts) / 2**64


def canonical_json(payload) -> str:
    """Canonical serialization: sorted keys, fixed separators, 2-space indent.

    Equal values produce byte-identical text, which backs the snapshot
    byte-equality and content-addressing contracts.
    """
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR))


def atomic_write_text(path: Path, text: str) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
