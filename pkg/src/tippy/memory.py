"""Vector memory: hashed bag-of-words embeddings and a file-backed store.

The embedding is fully deterministic and dependency-free; semantic quality is
explicitly not claimed. dimension 256, L2-normalized (zero vectors stay zero).
"""

from __future__ import annotations

import json
import math
import re
import threading
from pathlib import Path

from .util import stable_hash64

EMBED_DIM = 256
_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def embed(text: str) -> list[float]:
    """Hashed bag of words: index = hash mod 256, sign from bit 8 of the hash."""
    vec = [0.0] * EMBED_DIM
    for token in _TOKEN_SPLIT.split(text.lower()):
        if not token:
            continue
        h = stable_hash64(token)
        index = h % EMBED_DIM
        sign = 1.0 if (h >> 8) & 1 else -1.0
        vec[index] += sign
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0.0:
        return vec
    return [v / norm for v in vec]


def cosine(a: list[float], b: list[float]) -> float:
    return sum(x * y for x, y in zip(a, b))


class MemoryStore:
    """Append-only record store persisted as one JSON line per record."""

    def __init__(self, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                self.records.append(json.loads(line))

    def add(self, text: str, metadata: dict | None = None) -> str:
        with self._lock:
            record = {
                "id": f"m{len(self.records) + 1:06d}",
                "text": text,
                "embedding": embed(text),
                "metadata": metadata or {},
            }
            self.records.append(record)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
            return record["id"]

    def search(self, query: str, k: int = 3) -> list[dict]:
        """Top-k by cosine similarity, ties by id ascending; zero-vector
        queries (and empty stores) return []."""
        if k < 1:
            raise ValueError("k must be >= 1")
        q = embed(query)
        if all(v == 0.0 for v in q):
            return []
        scored = [
            {"id": r["id"], "score": round(cosine(q, r["embedding"]), 9), "text": r["text"]}
            for r in self.records
        ]
        scored.sort(key=lambda s: (-s["score"], s["id"]))
        return scored[:k]

    def __len__(self) -> int:
        return len(self.records)
