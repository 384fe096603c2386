"""Append-only event records and their newline-delimited JSON wire format.

One event per line: ``{"seq": .., "ts": .., "actor": .., "kind": .., "payload": ..}``.
This exact format is the analytics input contract; the full payload schema per
kind is documented in docs/event_log.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any

from .errors import CorruptLog

__all__ = [
    "Actor",
    "EventKind",
    "ActivityKind",
    "EventRecord",
    "format_instant",
    "parse_instant",
    "truncate_to_millis",
]


class Actor(str, Enum):
    STUDENT = "student"
    INSTRUCTOR = "instructor"
    SYSTEM = "system"


class EventKind(str, Enum):
    CONSENT_GIVEN = "ConsentGiven"
    REQUEST_CREATED = "RequestCreated"
    GENERATION_STARTED = "GenerationStarted"
    HINT_DELIVERED = "HintDelivered"
    GENERATION_FAILED = "GenerationFailed"
    HINT_RATED = "HintRated"
    ESCALATED = "Escalated"
    ESCALATION_VIEWED = "EscalationViewed"
    FEEDBACK_SUBMITTED = "FeedbackSubmitted"
    LEASE_ACQUIRED = "LeaseAcquired"
    LEASE_RELEASED = "LeaseReleased"
    ACTIVITY_OBSERVED = "ActivityObserved"
    CASE_ANNOTATED = "CaseAnnotated"


class ActivityKind(str, Enum):
    CODING = "Coding"
    VIDEO_WATCH = "VideoWatch"
    HINT_REQUEST = "HintRequest"
    QUESTION_SOLVED = "QuestionSolved"


def truncate_to_millis(instant: datetime) -> datetime:
    """Clamp an instant to UTC millisecond precision (the log's resolution)."""
    if instant.tzinfo is None:
        instant = instant.replace(tzinfo=timezone.utc)
    instant = instant.astimezone(timezone.utc)
    return instant.replace(microsecond=(instant.microsecond // 1000) * 1000)


def format_instant(instant: datetime) -> str:
    return truncate_to_millis(instant).isoformat(timespec="milliseconds")


def parse_instant(text: str) -> datetime:
    return datetime.fromisoformat(text)


@dataclass(frozen=True)
class EventRecord:
    sequence_number: int
    timestamp: datetime
    actor: Actor
    kind: EventKind
    payload: dict[str, Any]

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "seq": self.sequence_number,
                "ts": format_instant(self.timestamp),
                "actor": self.actor.value,
                "kind": self.kind.value,
                "payload": self.payload,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json_line(cls, line: str, line_number: int | None = None) -> "EventRecord":
        where = f" at line {line_number}" if line_number is not None else ""
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptLog(f"unparseable event{where}: {exc}") from exc
        try:
            return cls(
                sequence_number=int(raw["seq"]),
                timestamp=parse_instant(raw["ts"]),
                actor=Actor(raw["actor"]),
                kind=EventKind(raw["kind"]),
                payload=dict(raw["payload"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptLog(f"malformed event{where}: {exc}") from exc
