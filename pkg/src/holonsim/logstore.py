"""Append-only run log.

One record per line: `{"tick", "seq", "kind", "payload"}` serialized
canonically (sorted keys, no whitespace) so identical runs produce
byte-identical files. The in-memory list and the on-disk file always
agree; the log is the system of record for replay and verification.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import IO, Iterator, Optional


def encode_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), default=str)


class LogStore:
    def __init__(self, path: Optional[str | Path] = None):
        self.records: list[dict] = []
        self._path = Path(path) if path else None
        self._fh: Optional[IO[str]] = None
        if self._path:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self._path.open("w", encoding="utf-8")

    def append(self, tick: int, kind: str, payload: dict) -> dict:
        if self._path and self._fh is None:
            raise ValueError("log is closed")
        record = {"tick": tick, "seq": len(self.records), "kind": kind, "payload": payload}
        self.records.append(record)
        if self._fh:
            self._fh.write(encode_record(record) + "\n")
            self._fh.flush()
        return record

    def since(self, from_seq: int) -> list[dict]:
        if from_seq <= 0:
            return list(self.records)
        return self.records[from_seq:]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[dict]:
        return iter(self.records)

    def hash(self) -> str:
        digest = hashlib.sha256()
        for record in self.records:
            digest.update(encode_record(record).encode())
            digest.update(b"\n")
        return digest.hexdigest()

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None


def load_log(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
