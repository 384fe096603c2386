"""Durable append-only event log plus snapshot/restore.

The log file is the single source of truth. ``EventLog`` owns sequence
numbering and timestamp clamping so that every append is written flushed,
in order, with no gaps; readers enforce the same invariants and refuse a
log that violates them. Snapshots are an optimization only: restoring a
snapshot plus the log tail must equal replaying the whole log.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import CorruptLog, SnapshotMismatch, StorageFailure
from .events import Actor, EventKind, EventRecord, truncate_to_millis
from .state import ServiceState, apply_event

__all__ = [
    "EventLog",
    "load_snapshot",
    "read_events",
    "recover",
    "replay",
    "restore",
    "write_snapshot",
]

SNAPSHOT_FORMAT = "helploop-snapshot/1"


class EventLog:
    """Append-only newline-delimited JSON event log.

    Appends are serialized by a lock and flushed before returning, so an
    acknowledged event survives a process kill. Pass ``fsync=True`` to also
    force the data to disk against whole-machine crashes.
    """

    def __init__(self, path: str | Path, fsync: bool = False) -> None:
        self.path = Path(path)
        self._fsync = fsync
        self._lock = threading.Lock()
        self._handle: Any = None
        self._last_sequence_number = 0
        self._last_timestamp: datetime | None = None

    @property
    def last_sequence_number(self) -> int:
        return self._last_sequence_number

    def open(self) -> list[EventRecord]:
        """Open for appending; return all prior events after validating them.

        A trailing fragment without a final newline is a write that was never
        acknowledged (appends flush line plus newline before returning), so it
        is truncated away rather than treated as corruption.
        """
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch(exist_ok=True)
            self._repair_torn_tail()
            records = list(read_events(self.path))
            self._handle = self.path.open("a", encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot open event log {self.path}: {exc}") from exc
        if records:
            self._last_sequence_number = records[-1].sequence_number
            self._last_timestamp = records[-1].timestamp
        return records

    def _repair_torn_tail(self) -> None:
        data = self.path.read_bytes()
        if not data or data.endswith(b"\n"):
            return
        keep = data.rfind(b"\n") + 1
        with self.path.open("r+b") as handle:
            handle.truncate(keep)

    def append(
        self,
        timestamp: datetime,
        actor: Actor,
        kind: EventKind,
        payload: dict[str, Any],
    ) -> EventRecord:
        """Durably append one event; returns the record as written."""
        with self._lock:
            if self._handle is None:
                raise StorageFailure("event log is not open")
            instant = truncate_to_millis(timestamp)
            if self._last_timestamp is not None and instant < self._last_timestamp:
                instant = self._last_timestamp
            record = EventRecord(
                sequence_number=self._last_sequence_number + 1,
                timestamp=instant,
                actor=actor,
                kind=kind,
                payload=payload,
            )
            try:
                self._handle.write(record.to_json_line() + "\n")
                self._handle.flush()
                if self._fsync:
                    os.fsync(self._handle.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append to {self.path}: {exc}") from exc
            self._last_sequence_number = record.sequence_number
            self._last_timestamp = record.timestamp
            return record

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    def __enter__(self) -> "EventLog":
        self.open()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def read_events(path: str | Path, first_expected: int = 1) -> Iterator[EventRecord]:
    """Yield events from a log file, enforcing the ordering invariants.

    Raises CorruptLog, carrying the offending sequence number, on a gap or
    non-monotone sequence, or on a timestamp that goes backwards.
    """
    expected = first_expected
    last_timestamp: datetime | None = None
    try:
        with Path(path).open("r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = EventRecord.from_json_line(line, line_number=line_number)
                if record.sequence_number != expected:
                    raise CorruptLog(
                        f"expected sequence {expected}, found {record.sequence_number}"
                        f" at line {line_number}",
                        sequence_number=record.sequence_number,
                    )
                if last_timestamp is not None and record.timestamp < last_timestamp:
                    raise CorruptLog(
                        f"timestamp goes backwards at sequence {record.sequence_number}",
                        sequence_number=record.sequence_number,
                    )
                yield record
                expected += 1
                last_timestamp = record.timestamp
    except OSError as exc:
        raise StorageFailure(f"cannot read event log {path}: {exc}") from exc


def replay(path: str | Path) -> ServiceState:
    """Rebuild the full service state by folding the log from the start."""
    state = ServiceState()
    for record in read_events(path):
        apply_event(state, record)
    return state


def write_snapshot(path: str | Path, state: ServiceState) -> None:
    """Write a point-in-time snapshot, atomically via a temp file rename."""
    target = Path(path)
    payload = json.dumps(
        {"format": SNAPSHOT_FORMAT, "state": state.to_dict()},
        sort_keys=True,
        separators=(",", ":"),
    )
    tmp = target.with_suffix(target.suffix + ".tmp")
    try:
        tmp.write_text(payload + "\n", encoding="utf-8")
        tmp.replace(target)
    except OSError as exc:
        raise StorageFailure(f"cannot write snapshot {target}: {exc}") from exc


def load_snapshot(path: str | Path) -> ServiceState:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageFailure(f"cannot read snapshot {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SnapshotMismatch(f"snapshot {path} is not valid JSON: {exc}") from exc
    if raw.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotMismatch(f"snapshot {path} has unknown format {raw.get('format')!r}")
    return ServiceState.from_dict(raw["state"])


def restore(snapshot: ServiceState, tail: Iterable[EventRecord]) -> ServiceState:
    """Fold tail events onto a snapshot; tail must start right after it."""
    state = ServiceState.from_dict(snapshot.to_dict())
    expected = state.last_sequence_number + 1
    for record in tail:
        if record.sequence_number != expected:
            raise SnapshotMismatch(
                f"tail starts at sequence {record.sequence_number},"
                f" expected {expected}"
            )
        apply_event(state, record)
        expected += 1
    return state


def recover(log_path: str | Path, snapshot_path: str | Path | None = None) -> ServiceState:
    """Rebuild state from snapshot plus log tail, or from the log alone."""
    if snapshot_path is None or not Path(snapshot_path).exists():
        return replay(log_path)
    snapshot = load_snapshot(snapshot_path)
    tail = (
        record
        for record in read_events(log_path)
        if record.sequence_number > snapshot.last_sequence_number
    )
    return restore(snapshot, tail)
