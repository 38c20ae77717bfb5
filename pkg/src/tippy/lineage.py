"""Content-addressed configuration lineage with tags.

Each snapshot hashes the canonical serialization of the live configuration
(instruction files, guardrail rules, scripted rule table, toolset rosters,
engine constants). Identical content deduplicates; changes chain to their
parent, and tags round-trip payloads byte-identically for rollback.
Digest: SHA-256.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import ConflictError, NotFoundError
from .util import canonical_json, sha256_hex


@dataclass
class ConfigSnapshot:
    hash: str
    parent_hash: str | None
    created_at: float
    payload: dict
    tag: str | None = None

    def to_dict(self) -> dict:
        return {
            "hash": self.hash, "parent_hash": self.parent_hash,
            "created_at": self.created_at, "payload": self.payload, "tag": self.tag,
        }


def collect_config_payload(config_root: Path | str, extras: dict | None = None) -> dict:
    """File contents under the config root plus structured extras (rosters,
    engine constants)."""
    root = Path(config_root)
    files = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            files[path.relative_to(root).as_posix()] = path.read_text(encoding="utf-8")
    return {"files": files, **(extras or {})}


class ConfigLineage:
    def __init__(self, clock, path: Path | str | None = None):
        self._clock = clock
        self.path = Path(path) if path is not None else None
        self.snapshots: list[ConfigSnapshot] = []
        self.tags: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if record["event"] == "snapshot":
                self.snapshots.append(ConfigSnapshot(
                    hash=record["hash"], parent_hash=record["parent_hash"],
                    created_at=record["created_at"], payload=record["payload"],
                ))
            elif record["event"] == "tag":
                self.tags[record["label"]] = record["hash"]

    def _append(self, record: dict) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    @property
    def head(self) -> ConfigSnapshot | None:
        return self.snapshots[-1] if self.snapshots else None

    def snapshot(self, payload: dict) -> ConfigSnapshot:
        """Hash and append; identical content returns the head unchanged."""
        with self._lock:
            digest = sha256_hex(canonical_json(payload))
            head = self.head
            if head is not None and head.hash == digest:
                return head
            snap = ConfigSnapshot(
                hash=digest,
                parent_hash=head.hash if head else None,
                created_at=self._clock.now_s,
                payload=payload,
            )
            self.snapshots.append(snap)
            self._append({"event": "snapshot", **{k: v for k, v in snap.to_dict().items() if k != "tag"}})
            return snap

    def snapshot_config(self, config_root: Path | str, extras: dict | None = None) -> ConfigSnapshot:
        return self.snapshot(collect_config_payload(config_root, extras))

    def tag(self, digest: str, label: str) -> None:
        with self._lock:
            if label in self.tags:
                raise ConflictError(f"tag {label!r} already exists")
            if not any(s.hash == digest for s in self.snapshots):
                raise NotFoundError(f"no snapshot with hash {digest}")
            self.tags[label] = digest
            self._append({"event": "tag", "label": label, "hash": digest})

    def get_by_tag(self, label: str) -> ConfigSnapshot:
        digest = self.tags.get(label)
        if digest is None:
            raise NotFoundError(f"unknown tag {label!r}")
        for snap in self.snapshots:
            if snap.hash == digest:
                return snap
        raise NotFoundError(f"snapshot for tag {label!r} missing")

    def get_by_hash(self, digest: str) -> ConfigSnapshot:
        for snap in self.snapshots:
            if snap.hash == digest:
                return snap
        raise NotFoundError(f"no snapshot with hash {digest}")

    def chain_from(self, digest: str) -> list[str]:
        """Walk parents from a snapshot back to genesis."""
        chain = []
        current: str | None = digest
        seen = set()
        while current is not None:
            if current in seen:
                raise ConflictError("lineage contains a cycle")
            seen.add(current)
            snap = self.get_by_hash(current)
            chain.append(snap.hash)
            current = snap.parent_hash
        return chain


def materialize_files(snapshot: ConfigSnapshot, target_root: Path | str) -> None:
    """Rollback helper: write the snapshot's files back to disk."""
    root = Path(target_root)
    for rel, content in snapshot.payload.get("files", {}).items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
