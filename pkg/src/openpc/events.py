"""Append-only event log: newline-delimited JSON, gap-free sequence numbers,
state hashing for replay-equality checks.

Persistence contract: an event is durably on disk before its mutation is
applied, and a failed append leaves the log exactly as it was.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from .errors import CorruptLogError, StorageFailureError


@dataclass(frozen=True)
class Event:
    seq: int
    ts: float
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str, line_no: int) -> "Event":
        try:
            doc = json.loads(line)
            return cls(
                seq=int(doc["seq"]),
                ts=float(doc["ts"]),
                kind=str(doc["kind"]),
                payload=dict(doc["payload"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptLogError(line_no, f"unreadable event: {exc}") from None


class EventLog:
    """One NDJSON file; append() is the only writer."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = None
        self.last_seq = 0
        if self.path.exists():
            events = self.read_all()
            self.last_seq = events[-1].seq if events else 0

    def _file(self):
        if self._handle is None:
            self._handle = open(self.path, "a", encoding="utf-8")
        return self._handle

    def append(self, ts: float, kind: str, payload: dict) -> Event:
        """Durably write the next event; the log is unchanged on failure."""
        event = Event(seq=self.last_seq + 1, ts=ts, kind=kind, payload=payload)
        handle = None
        try:
            handle = self._file()
            start = handle.tell()
            handle.write(event.to_json() + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        except OSError as exc:
            if handle is not None:
                try:
                    handle.truncate(start)
                except OSError:
                    pass
            raise StorageFailureError(f"append failed: {exc}") from exc
        self.last_seq = event.seq
        return event

    def read_all(self) -> list[Event]:
        """Load and validate the whole log; sequence must be 1,2,3,... exactly."""
        if not self.path.exists():
            return []
        events = []
        with open(self.path, "r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                event = Event.from_json(line, line_no)
                expected = len(events) + 1
                if event.seq != expected:
                    raise CorruptLogError(
                        event.seq, f"expected seq {expected}, found {event.seq}"
                    )
                events.append(event)
        return events

    def __iter__(self) -> Iterator[Event]:
        return iter(self.read_all())

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def state_hash(snapshot: dict) -> str:
    """sha256 over the canonical JSON form of a state snapshot."""
    canonical = json.dumps(snapshot, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_snapshot(path: str | os.PathLike, snapshot: dict, last_seq: int) -> None:
    doc = {"last_seq": last_seq, "state": snapshot}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
