"""Oldest-first escalation queue with claim leases.

The queue is derived, not stored: candidates are computed from the current
escalations on demand, ordered by creation time with the append sequence
number as tiebreaker. A claim gives one instructor a time-limited lease on
a case; expired leases simply stop counting, so the case is served again.

Everything an instructor sees travels through ``EscalationContext``, which
deliberately has no student identity field, only the escalation's own
anonymous token.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

from .domain import Escalation, EscalationStatus, HelpRequest, Hint

__all__ = [
    "ClaimLease",
    "DEFAULT_LEASE_MINUTES",
    "EscalationContext",
    "build_context",
    "lease_active",
    "next_candidate",
    "pending_escalations",
]

DEFAULT_LEASE_MINUTES = 30


@dataclass(frozen=True)
class ClaimLease:
    """Exclusive hold on one escalation while an instructor works it."""

    instructor_id: str
    escalation_id: str
    acquired_at: datetime
    expires_at: datetime

    def __post_init__(self) -> None:
        if self.expires_at <= self.acquired_at:
            raise ValueError("lease must expire after it is acquired")


@dataclass(frozen=True)
class EscalationContext:
    """Case file shown to instructors. Carries no student identity."""

    escalation: Escalation
    task_description: str
    code_snapshot: str
    student_comment: str | None
    ai_hint_text: str
    student_note: str | None
    assignment_id: str
    question_id: str
    hint_type: str
    hint_generated_at: datetime


def lease_active(lease: ClaimLease | None, now: datetime) -> bool:
    return lease is not None and lease.expires_at > now


def pending_escalations(
    escalations: dict[str, Escalation],
    escalation_seq: dict[str, int],
    leases: dict[str, ClaimLease],
    now: datetime,
    instructor_id: str | None = None,
) -> list[Escalation]:
    """Unresolved escalations not held by someone else, oldest first.

    An instructor's own live lease does not hide the case from them, so a
    repeated next-case call is idempotent while the lease lasts.
    """
    candidates = []
    for escalation in escalations.values():
        if escalation.status is EscalationStatus.RESOLVED:
            continue
        lease = leases.get(escalation.escalation_id)
        if lease_active(lease, now) and lease.instructor_id != instructor_id:
            continue
        candidates.append(escalation)
    candidates.sort(
        key=lambda esc: (esc.created_at, escalation_seq[esc.escalation_id])
    )
    return candidates


def next_candidate(
    escalations: dict[str, Escalation],
    escalation_seq: dict[str, int],
    leases: dict[str, ClaimLease],
    now: datetime,
    instructor_id: str | None = None,
) -> Escalation | None:
    candidates = pending_escalations(
        escalations, escalation_seq, leases, now, instructor_id
    )
    return candidates[0] if candidates else None


def new_lease(
    instructor_id: str,
    escalation_id: str,
    now: datetime,
    minutes: int = DEFAULT_LEASE_MINUTES,
) -> ClaimLease:
    return ClaimLease(
        instructor_id=instructor_id,
        escalation_id=escalation_id,
        acquired_at=now,
        expires_at=now + timedelta(minutes=minutes),
    )


def build_context(
    escalation: Escalation,
    hint: Hint,
    request: HelpRequest,
    task_description: str,
) -> EscalationContext:
    """Assemble the instructor-facing view from the underlying records."""
    return EscalationContext(
        escalation=escalation,
        task_description=task_description,
        code_snapshot=request.code_snapshot,
        student_comment=request.student_comment,
        ai_hint_text=hint.text,
        student_note=escalation.student_note,
        assignment_id=request.assignment_id,
        question_id=request.question_id,
        hint_type=request.hint_type.value,
        hint_generated_at=hint.generated_at,
    )
