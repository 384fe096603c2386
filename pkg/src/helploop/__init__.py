"""helploop: AI programming-hint orchestration with instructor escalation.

Students request planning, debugging, or optimization hints under per-question
quotas, rate what they get, and escalate unhelpful hints to an anonymized
oldest-first instructor queue. Every change is an event in an append-only log,
so all state is replayable and survives restarts, and the analytics module
recomputes deployment metrics straight from that log.
"""

from .domain import (
    Escalation,
    EscalationStatus,
    HelpRequest,
    Hint,
    HintType,
    InstructorFeedback,
    LifecycleEvent,
    QuotaPolicy,
    Rating,
    RequestState,
    StudentProfile,
)
from .events import ActivityKind, Actor, EventKind, EventRecord
from .queue import ClaimLease, EscalationContext
from .service import HelpService, HintThread
from .state import ServiceState
from .store import EventLog, replay
from .taxonomy import (
    AnnotatedCase,
    BugType,
    FeedbackQuality,
    QualityLabel,
    UnhelpfulReason,
)

__all__ = [
    "ActivityKind",
    "Actor",
    "AnnotatedCase",
    "BugType",
    "ClaimLease",
    "Escalation",
    "EscalationContext",
    "EscalationStatus",
    "EventKind",
    "EventLog",
    "EventRecord",
    "FeedbackQuality",
    "HelpRequest",
    "HelpService",
    "Hint",
    "HintThread",
    "HintType",
    "InstructorFeedback",
    "LifecycleEvent",
    "QualityLabel",
    "QuotaPolicy",
    "Rating",
    "RequestState",
    "ServiceState",
    "StudentProfile",
    "UnhelpfulReason",
    "replay",
]

__version__ = "0.1.0"
