"""Core domain types: hint requests, ratings, escalations, quotas, consent.

Everything here is an immutable value plus pure functions; the service layer
owns event emission and persistence. The request lifecycle is a fixed state
machine -- exactly the transitions in ``TRANSITIONS`` are legal.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Mapping

from .errors import AlreadyRated, IllegalTransition, NotDelivered

__all__ = [
    "HintType",
    "Rating",
    "RequestState",
    "LifecycleEvent",
    "TRANSITIONS",
    "QuotaPolicy",
    "StudentProfile",
    "HelpRequest",
    "Hint",
    "EscalationStatus",
    "Escalation",
    "InstructorFeedback",
    "apply_transition",
    "rate_hint",
    "record_consent",
    "remaining_quota",
    "quota_slot_available",
]


class HintType(str, Enum):
    PLANNING = "planning"
    DEBUGGING = "debugging"
    OPTIMIZATION = "optimization"


class Rating(str, Enum):
    HELPFUL = "helpful"
    UNHELPFUL = "unhelpful"


class RequestState(str, Enum):
    CREATED = "created"
    GENERATING = "generating"
    DELIVERED = "delivered"
    FAILED = "failed"
    RATED_HELPFUL = "rated_helpful"
    RATED_UNHELPFUL = "rated_unhelpful"
    ESCALATED = "escalated"
    INSTRUCTOR_VIEWED = "instructor_viewed"
    RESOLVED = "resolved"


class LifecycleEvent(str, Enum):
    START_GENERATION = "start_generation"
    DELIVER_HINT = "deliver_hint"
    FAIL_GENERATION = "fail_generation"
    RATE_HELPFUL = "rate_helpful"
    RATE_UNHELPFUL = "rate_unhelpful"
    ESCALATE = "escalate"
    INSTRUCTOR_VIEW = "instructor_view"
    RESOLVE = "resolve"


# The eight legal (state, event) -> state edges. Anything else is an error.
TRANSITIONS: Mapping[tuple[RequestState, LifecycleEvent], RequestState] = {
    (RequestState.CREATED, LifecycleEvent.START_GENERATION): RequestState.GENERATING,
    (RequestState.GENERATING, LifecycleEvent.DELIVER_HINT): RequestState.DELIVERED,
    (RequestState.GENERATING, LifecycleEvent.FAIL_GENERATION): RequestState.FAILED,
    (RequestState.DELIVERED, LifecycleEvent.RATE_HELPFUL): RequestState.RATED_HELPFUL,
    (RequestState.DELIVERED, LifecycleEvent.RATE_UNHELPFUL): RequestState.RATED_UNHELPFUL,
    (RequestState.RATED_UNHELPFUL, LifecycleEvent.ESCALATE): RequestState.ESCALATED,
    (RequestState.ESCALATED, LifecycleEvent.INSTRUCTOR_VIEW): RequestState.INSTRUCTOR_VIEWED,
    (RequestState.INSTRUCTOR_VIEWED, LifecycleEvent.RESOLVE): RequestState.RESOLVED,
}

# States in which the request has consumed (or will consume) a quota slot.
# Failed generations are refunded; everything else holds its slot.
_QUOTA_DELIVERED_STATES = frozenset(
    {
        RequestState.DELIVERED,
        RequestState.RATED_HELPFUL,
        RequestState.RATED_UNHELPFUL,
        RequestState.ESCALATED,
        RequestState.INSTRUCTOR_VIEWED,
        RequestState.RESOLVED,
    }
)


DEFAULT_LIMITS: Mapping[HintType, int] = {
    HintType.PLANNING: 1,
    HintType.DEBUGGING: 3,
    HintType.OPTIMIZATION: 1,
}


@dataclass(frozen=True)
class QuotaPolicy:
    """Per-question ceiling on delivered hints for each hint type."""

    per_question_limits: Mapping[HintType, int] = field(
        default_factory=lambda: dict(DEFAULT_LIMITS)
    )

    def __post_init__(self):
        for hint_type in HintType:
            if self.limit(hint_type) < 0:
                raise ValueError(f"quota limit for {hint_type.value} must be >= 0")

    def limit(self, hint_type: HintType) -> int:
        return int(self.per_question_limits.get(hint_type, 0))


@dataclass(frozen=True)
class StudentProfile:
    student_id: str
    consent_given: bool = False
    consent_timestamp: datetime | None = None

    def __post_init__(self):
        if self.consent_given != (self.consent_timestamp is not None):
            raise ValueError("consent_timestamp must be present iff consent_given")


@dataclass(frozen=True)
class HelpRequest:
    request_id: str
    student_id: str
    assignment_id: str
    question_id: str
    hint_type: HintType
    student_comment: str | None
    code_snapshot: str
    created_at: datetime
    state: RequestState = RequestState.CREATED


@dataclass(frozen=True)
class Hint:
    hint_id: str
    request_id: str
    text: str
    generated_at: datetime
    generation_latency: float  # seconds
    rating: Rating | None = None

    def __post_init__(self):
        if self.generation_latency < 0:
            raise ValueError("generation_latency must be >= 0")


class EscalationStatus(str, Enum):
    PENDING = "pending"
    VIEWED = "viewed"
    RESOLVED = "resolved"


@dataclass(frozen=True)
class Escalation:
    """Anonymized forwarding of an unhelpful hint to the instructor queue.

    ``anonymous_token`` is an opaque identifier minted independently of the
    student id; the private event log holds the only mapping between them.
    """

    escalation_id: str
    hint_id: str
    anonymous_token: str
    student_note: str | None
    created_at: datetime
    status: EscalationStatus = EscalationStatus.PENDING
    viewed_at: datetime | None = None
    resolved_at: datetime | None = None
    claimed_by: str | None = None
    claim_expires_at: datetime | None = None

    def __post_init__(self):
        if self.viewed_at is not None and self.viewed_at < self.created_at:
            raise ValueError("viewed_at must not precede created_at")
        if (
            self.viewed_at is not None
            and self.resolved_at is not None
            and self.resolved_at < self.viewed_at
        ):
            raise ValueError("resolved_at must not precede viewed_at")


@dataclass(frozen=True)
class InstructorFeedback:
    feedback_id: str
    escalation_id: str
    instructor_id: str
    text: str
    created_at: datetime

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("feedback text must be non-empty")


def apply_transition(request: HelpRequest, event: LifecycleEvent) -> HelpRequest:
    """Return the request advanced along one legal lifecycle edge.

    Raises IllegalTransition for any (state, event) pair outside TRANSITIONS;
    such a call signals a programming or replay error, never user input.
    """
    key = (request.state, event)
    if key not in TRANSITIONS:
        raise IllegalTransition(
            f"no transition {request.state.value} --{event.value}-->"
        )
    return dataclasses.replace(request, state=TRANSITIONS[key])


def rate_hint(hint: Hint, rating: Rating, request_state: RequestState) -> Hint:
    """Record a one-shot Helpful/Unhelpful rating on a delivered hint."""
    if hint.rating is not None:
        raise AlreadyRated(f"hint {hint.hint_id} already rated {hint.rating.value}")
    if request_state is not RequestState.DELIVERED:
        raise NotDelivered(
            f"hint {hint.hint_id} belongs to a request in state "
            f"{request_state.value}, not delivered"
        )
    return dataclasses.replace(hint, rating=rating)


def record_consent(student: StudentProfile, at: datetime) -> StudentProfile:
    """Set consent on first call; later calls keep the original timestamp."""
    if student.consent_given:
        return student
    return dataclasses.replace(student, consent_given=True, consent_timestamp=at)


def remaining_quota(
    student_id: str,
    question_id: str,
    policy: QuotaPolicy,
    history: Iterable[HelpRequest],
) -> dict[HintType, int]:
    """Limit minus the count of requests that reached Delivered.

    Failed generations do not consume quota. In-flight requests
    (Created/Generating) are not counted here either; the create-time guard
    ``quota_slot_available`` reserves their slots separately.
    """
    counts = {hint_type: 0 for hint_type in HintType}
    for request in history:
        if request.student_id != student_id or request.question_id != question_id:
            continue
        if request.state in _QUOTA_DELIVERED_STATES:
            counts[request.hint_type] += 1
    return {
        hint_type: max(policy.limit(hint_type) - counts[hint_type], 0)
        for hint_type in HintType
    }


def quota_slot_available(
    student_id: str,
    question_id: str,
    hint_type: HintType,
    policy: QuotaPolicy,
    history: Iterable[HelpRequest],
) -> bool:
    """Create-time guard: in-flight requests reserve a slot until they fail.

    Counting Created/Generating alongside delivered requests keeps the
    delivered total under the limit even when generations overlap.
    """
    held = 0
    for request in history:
        if request.student_id != student_id or request.question_id != question_id:
            continue
        if request.hint_type is not hint_type:
            continue
        if request.state is not RequestState.FAILED:
            held += 1
    return held < policy.limit(hint_type)
