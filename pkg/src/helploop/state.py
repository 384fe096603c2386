"""Materialized service state and the deterministic event fold.

``apply_event`` is the only way state changes, both live and during replay,
so a replayed log always reproduces the exact live state. ``to_dict`` /
``from_dict`` round-trip the state for snapshots, and ``canonical_json``
is the byte-stable serialization used by equality checks.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any

from .taxonomy import (
    AnnotatedCase,
    BugType,
    FeedbackQuality,
    QualityLabel,
    UnhelpfulReason,
)
from .domain import (
    Escalation,
    EscalationStatus,
    HelpRequest,
    Hint,
    HintType,
    InstructorFeedback,
    LifecycleEvent,
    Rating,
    RequestState,
    StudentProfile,
    apply_transition,
)
from .errors import CorruptLog
from .events import ActivityKind, EventKind, EventRecord, format_instant, parse_instant
from .queue import ClaimLease

__all__ = ["ActivityEvent", "ServiceState", "apply_event"]


@dataclass(frozen=True)
class ActivityEvent:
    """One observed learning activity, as reported by the platform."""

    student_id: str
    question_id: str
    activity: ActivityKind
    at: datetime


@dataclass
class ServiceState:
    students: dict[str, StudentProfile] = field(default_factory=dict)
    requests: dict[str, HelpRequest] = field(default_factory=dict)
    hints: dict[str, Hint] = field(default_factory=dict)
    hint_by_request: dict[str, str] = field(default_factory=dict)
    escalations: dict[str, Escalation] = field(default_factory=dict)
    escalation_by_hint: dict[str, str] = field(default_factory=dict)
    escalation_seq: dict[str, int] = field(default_factory=dict)
    feedback: dict[str, InstructorFeedback] = field(default_factory=dict)
    feedback_by_escalation: dict[str, str] = field(default_factory=dict)
    leases: dict[str, ClaimLease] = field(default_factory=dict)
    activities: list[ActivityEvent] = field(default_factory=list)
    annotations: dict[str, AnnotatedCase] = field(default_factory=dict)
    annotation_log: list[AnnotatedCase] = field(default_factory=list)
    last_sequence_number: int = 0
    last_timestamp: datetime | None = None

    # -- lookups ---------------------------------------------------------

    def request_for_hint(self, hint_id: str) -> HelpRequest:
        return self.requests[self.hints[hint_id].request_id]

    def hint_for_request(self, request_id: str) -> Hint | None:
        hint_id = self.hint_by_request.get(request_id)
        return self.hints[hint_id] if hint_id else None

    def requests_for(self, student_id: str, question_id: str) -> list[HelpRequest]:
        return [
            request
            for request in self.requests.values()
            if request.student_id == student_id and request.question_id == question_id
        ]

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "students": {
                sid: _student_dict(profile) for sid, profile in self.students.items()
            },
            "requests": {
                rid: _request_dict(request) for rid, request in self.requests.items()
            },
            "hints": {hid: _hint_dict(hint) for hid, hint in self.hints.items()},
            "hint_by_request": dict(self.hint_by_request),
            "escalations": {
                eid: _escalation_dict(esc) for eid, esc in self.escalations.items()
            },
            "escalation_by_hint": dict(self.escalation_by_hint),
            "escalation_seq": dict(self.escalation_seq),
            "feedback": {fid: _feedback_dict(fb) for fid, fb in self.feedback.items()},
            "feedback_by_escalation": dict(self.feedback_by_escalation),
            "leases": {eid: _lease_dict(lease) for eid, lease in self.leases.items()},
            "activities": [_activity_dict(act) for act in self.activities],
            "annotations": {
                cid: _annotation_dict(case) for cid, case in self.annotations.items()
            },
            "annotation_log": [_annotation_dict(case) for case in self.annotation_log],
            "last_sequence_number": self.last_sequence_number,
            "last_timestamp": _opt_instant(self.last_timestamp),
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ServiceState":
        state = cls()
        state.students = {
            sid: _student_from(d) for sid, d in raw["students"].items()
        }
        state.requests = {
            rid: _request_from(d) for rid, d in raw["requests"].items()
        }
        state.hints = {hid: _hint_from(d) for hid, d in raw["hints"].items()}
        state.hint_by_request = dict(raw["hint_by_request"])
        state.escalations = {
            eid: _escalation_from(d) for eid, d in raw["escalations"].items()
        }
        state.escalation_by_hint = dict(raw["escalation_by_hint"])
        state.escalation_seq = {k: int(v) for k, v in raw["escalation_seq"].items()}
        state.feedback = {fid: _feedback_from(d) for fid, d in raw["feedback"].items()}
        state.feedback_by_escalation = dict(raw["feedback_by_escalation"])
        state.leases = {eid: _lease_from(d) for eid, d in raw["leases"].items()}
        state.activities = [_activity_from(d) for d in raw["activities"]]
        state.annotations = {
            cid: _annotation_from(d) for cid, d in raw["annotations"].items()
        }
        state.annotation_log = [_annotation_from(d) for d in raw["annotation_log"]]
        state.last_sequence_number = int(raw["last_sequence_number"])
        ts = raw["last_timestamp"]
        state.last_timestamp = parse_instant(ts) if ts else None
        return state

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def apply_event(state: ServiceState, record: EventRecord) -> ServiceState:
    """Fold one event into the state, mutating and returning it.

    Events are trusted: commands validated them before appending. A fold
    failure therefore means the log is corrupt or foreign.
    """
    try:
        _APPLIERS[record.kind](state, record)
    except CorruptLog:
        raise
    except Exception as exc:
        raise CorruptLog(
            f"event {record.sequence_number} ({record.kind.value}) cannot be applied: {exc}",
            sequence_number=record.sequence_number,
        ) from exc
    state.last_sequence_number = record.sequence_number
    state.last_timestamp = record.timestamp
    return state


def _transition(state: ServiceState, request_id: str, event: LifecycleEvent) -> None:
    state.requests[request_id] = apply_transition(state.requests[request_id], event)


def _apply_consent(state: ServiceState, record: EventRecord) -> None:
    student_id = record.payload["student_id"]
    if student_id in state.students and state.students[student_id].consent_given:
        return  # consent is idempotent; first timestamp wins
    state.students[student_id] = StudentProfile(
        student_id=student_id,
        consent_given=True,
        consent_timestamp=record.timestamp,
    )


def _apply_request_created(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    request = HelpRequest(
        request_id=payload["request_id"],
        student_id=payload["student_id"],
        assignment_id=payload["assignment_id"],
        question_id=payload["question_id"],
        hint_type=HintType(payload["hint_type"]),
        student_comment=payload.get("student_comment"),
        code_snapshot=payload.get("code_snapshot", ""),
        created_at=record.timestamp,
        state=RequestState.CREATED,
    )
    state.requests[request.request_id] = request


def _apply_generation_started(state: ServiceState, record: EventRecord) -> None:
    _transition(state, record.payload["request_id"], LifecycleEvent.START_GENERATION)


def _apply_hint_delivered(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    hint = Hint(
        hint_id=payload["hint_id"],
        request_id=payload["request_id"],
        text=payload["text"],
        generated_at=record.timestamp,
        generation_latency=float(payload["generation_latency_seconds"]),
    )
    state.hints[hint.hint_id] = hint
    state.hint_by_request[hint.request_id] = hint.hint_id
    _transition(state, hint.request_id, LifecycleEvent.DELIVER_HINT)


def _apply_generation_failed(state: ServiceState, record: EventRecord) -> None:
    _transition(state, record.payload["request_id"], LifecycleEvent.FAIL_GENERATION)


def _apply_hint_rated(state: ServiceState, record: EventRecord) -> None:
    hint_id = record.payload["hint_id"]
    rating = Rating(record.payload["rating"])
    hint = state.hints[hint_id]
    state.hints[hint_id] = dataclasses.replace(hint, rating=rating)
    lifecycle = (
        LifecycleEvent.RATE_HELPFUL
        if rating is Rating.HELPFUL
        else LifecycleEvent.RATE_UNHELPFUL
    )
    _transition(state, hint.request_id, lifecycle)


def _apply_escalated(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    escalation = Escalation(
        escalation_id=payload["escalation_id"],
        hint_id=payload["hint_id"],
        anonymous_token=payload["anonymous_token"],
        student_note=payload.get("student_note"),
        created_at=record.timestamp,
    )
    state.escalations[escalation.escalation_id] = escalation
    state.escalation_by_hint[escalation.hint_id] = escalation.escalation_id
    state.escalation_seq[escalation.escalation_id] = record.sequence_number
    _transition(state, state.hints[escalation.hint_id].request_id, LifecycleEvent.ESCALATE)


def _apply_escalation_viewed(state: ServiceState, record: EventRecord) -> None:
    escalation = state.escalations[record.payload["escalation_id"]]
    state.escalations[escalation.escalation_id] = dataclasses.replace(
        escalation, status=EscalationStatus.VIEWED, viewed_at=record.timestamp
    )
    request_id = state.hints[escalation.hint_id].request_id
    _transition(state, request_id, LifecycleEvent.INSTRUCTOR_VIEW)


def _apply_lease_acquired(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    escalation_id = payload["escalation_id"]
    lease = ClaimLease(
        instructor_id=payload["instructor_id"],
        escalation_id=escalation_id,
        acquired_at=record.timestamp,
        expires_at=parse_instant(payload["expires_at"]),
    )
    state.leases[escalation_id] = lease
    escalation = state.escalations[escalation_id]
    state.escalations[escalation_id] = dataclasses.replace(
        escalation, claimed_by=lease.instructor_id, claim_expires_at=lease.expires_at
    )


def _apply_lease_released(state: ServiceState, record: EventRecord) -> None:
    escalation_id = record.payload["escalation_id"]
    state.leases.pop(escalation_id, None)
    escalation = state.escalations[escalation_id]
    state.escalations[escalation_id] = dataclasses.replace(
        escalation, claimed_by=None, claim_expires_at=None
    )


def _apply_feedback_submitted(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    feedback = InstructorFeedback(
        feedback_id=payload["feedback_id"],
        escalation_id=payload["escalation_id"],
        instructor_id=payload["instructor_id"],
        text=payload["text"],
        created_at=record.timestamp,
    )
    escalation = state.escalations[feedback.escalation_id]
    state.feedback[feedback.feedback_id] = feedback
    state.feedback_by_escalation[feedback.escalation_id] = feedback.feedback_id
    state.escalations[feedback.escalation_id] = dataclasses.replace(
        escalation,
        status=EscalationStatus.RESOLVED,
        resolved_at=record.timestamp,
        claimed_by=None,
        claim_expires_at=None,
    )
    state.leases.pop(feedback.escalation_id, None)
    request_id = state.hints[escalation.hint_id].request_id
    _transition(state, request_id, LifecycleEvent.RESOLVE)


def _apply_activity_observed(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    state.activities.append(
        ActivityEvent(
            student_id=payload["student_id"],
            question_id=payload["question_id"],
            activity=ActivityKind(payload["activity"]),
            at=parse_instant(payload["at"]),
        )
    )


def _apply_case_annotated(state: ServiceState, record: EventRecord) -> None:
    payload = record.payload
    quality = payload.get("feedback_quality")
    case = AnnotatedCase(
        case_id=payload["case_id"],
        hint_id=payload["hint_id"],
        escalation_id=payload.get("escalation_id"),
        bug_types=frozenset(BugType(b) for b in payload["bug_types"]),
        unhelpful_reasons=frozenset(
            UnhelpfulReason(r) for r in payload["unhelpful_reasons"]
        ),
        feedback_quality=_quality_from(quality),
        annotator=payload["annotator"],
        annotated_at=record.timestamp,
    )
    state.annotations[case.case_id] = case
    state.annotation_log.append(case)


_APPLIERS = {
    EventKind.CONSENT_GIVEN: _apply_consent,
    EventKind.REQUEST_CREATED: _apply_request_created,
    EventKind.GENERATION_STARTED: _apply_generation_started,
    EventKind.HINT_DELIVERED: _apply_hint_delivered,
    EventKind.GENERATION_FAILED: _apply_generation_failed,
    EventKind.HINT_RATED: _apply_hint_rated,
    EventKind.ESCALATED: _apply_escalated,
    EventKind.ESCALATION_VIEWED: _apply_escalation_viewed,
    EventKind.LEASE_ACQUIRED: _apply_lease_acquired,
    EventKind.LEASE_RELEASED: _apply_lease_released,
    EventKind.FEEDBACK_SUBMITTED: _apply_feedback_submitted,
    EventKind.ACTIVITY_OBSERVED: _apply_activity_observed,
    EventKind.CASE_ANNOTATED: _apply_case_annotated,
}


# -- dict codecs ---------------------------------------------------------


def _opt_instant(instant: datetime | None) -> str | None:
    return format_instant(instant) if instant is not None else None


def _opt_parse(text: str | None) -> datetime | None:
    return parse_instant(text) if text else None


def _student_dict(profile: StudentProfile) -> dict[str, Any]:
    return {
        "student_id": profile.student_id,
        "consent_given": profile.consent_given,
        "consent_timestamp": _opt_instant(profile.consent_timestamp),
    }


def _student_from(raw: dict[str, Any]) -> StudentProfile:
    return StudentProfile(
        student_id=raw["student_id"],
        consent_given=raw["consent_given"],
        consent_timestamp=_opt_parse(raw["consent_timestamp"]),
    )


def _request_dict(request: HelpRequest) -> dict[str, Any]:
    return {
        "request_id": request.request_id,
        "student_id": request.student_id,
        "assignment_id": request.assignment_id,
        "question_id": request.question_id,
        "hint_type": request.hint_type.value,
        "student_comment": request.student_comment,
        "code_snapshot": request.code_snapshot,
        "created_at": format_instant(request.created_at),
        "state": request.state.value,
    }


def _request_from(raw: dict[str, Any]) -> HelpRequest:
    return HelpRequest(
        request_id=raw["request_id"],
        student_id=raw["student_id"],
        assignment_id=raw["assignment_id"],
        question_id=raw["question_id"],
        hint_type=HintType(raw["hint_type"]),
        student_comment=raw["student_comment"],
        code_snapshot=raw["code_snapshot"],
        created_at=parse_instant(raw["created_at"]),
        state=RequestState(raw["state"]),
    )


def _hint_dict(hint: Hint) -> dict[str, Any]:
    return {
        "hint_id": hint.hint_id,
        "request_id": hint.request_id,
        "text": hint.text,
        "generated_at": format_instant(hint.generated_at),
        "generation_latency": hint.generation_latency,
        "rating": hint.rating.value if hint.rating else None,
    }


def _hint_from(raw: dict[str, Any]) -> Hint:
    return Hint(
        hint_id=raw["hint_id"],
        request_id=raw["request_id"],
        text=raw["text"],
        generated_at=parse_instant(raw["generated_at"]),
        generation_latency=raw["generation_latency"],
        rating=Rating(raw["rating"]) if raw["rating"] else None,
    )


def _escalation_dict(escalation: Escalation) -> dict[str, Any]:
    return {
        "escalation_id": escalation.escalation_id,
        "hint_id": escalation.hint_id,
        "anonymous_token": escalation.anonymous_token,
        "student_note": escalation.student_note,
        "created_at": format_instant(escalation.created_at),
        "status": escalation.status.value,
        "viewed_at": _opt_instant(escalation.viewed_at),
        "resolved_at": _opt_instant(escalation.resolved_at),
        "claimed_by": escalation.claimed_by,
        "claim_expires_at": _opt_instant(escalation.claim_expires_at),
    }


def _escalation_from(raw: dict[str, Any]) -> Escalation:
    return Escalation(
        escalation_id=raw["escalation_id"],
        hint_id=raw["hint_id"],
        anonymous_token=raw["anonymous_token"],
        student_note=raw["student_note"],
        created_at=parse_instant(raw["created_at"]),
        status=EscalationStatus(raw["status"]),
        viewed_at=_opt_parse(raw["viewed_at"]),
        resolved_at=_opt_parse(raw["resolved_at"]),
        claimed_by=raw["claimed_by"],
        claim_expires_at=_opt_parse(raw["claim_expires_at"]),
    )


def _feedback_dict(feedback: InstructorFeedback) -> dict[str, Any]:
    return {
        "feedback_id": feedback.feedback_id,
        "escalation_id": feedback.escalation_id,
        "instructor_id": feedback.instructor_id,
        "text": feedback.text,
        "created_at": format_instant(feedback.created_at),
    }


def _feedback_from(raw: dict[str, Any]) -> InstructorFeedback:
    return InstructorFeedback(
        feedback_id=raw["feedback_id"],
        escalation_id=raw["escalation_id"],
        instructor_id=raw["instructor_id"],
        text=raw["text"],
        created_at=parse_instant(raw["created_at"]),
    )


def _lease_dict(lease: ClaimLease) -> dict[str, Any]:
    return {
        "instructor_id": lease.instructor_id,
        "escalation_id": lease.escalation_id,
        "acquired_at": format_instant(lease.acquired_at),
        "expires_at": format_instant(lease.expires_at),
    }


def _lease_from(raw: dict[str, Any]) -> ClaimLease:
    return ClaimLease(
        instructor_id=raw["instructor_id"],
        escalation_id=raw["escalation_id"],
        acquired_at=parse_instant(raw["acquired_at"]),
        expires_at=parse_instant(raw["expires_at"]),
    )


def _activity_dict(activity: ActivityEvent) -> dict[str, Any]:
    return {
        "student_id": activity.student_id,
        "question_id": activity.question_id,
        "activity": activity.activity.value,
        "at": format_instant(activity.at),
    }


def _activity_from(raw: dict[str, Any]) -> ActivityEvent:
    return ActivityEvent(
        student_id=raw["student_id"],
        question_id=raw["question_id"],
        activity=ActivityKind(raw["activity"]),
        at=parse_instant(raw["at"]),
    )


def _quality_from(raw: dict[str, Any] | None) -> FeedbackQuality | None:
    if raw is None:
        return None
    return FeedbackQuality(
        label=QualityLabel(raw["label"]),
        low_reasons=frozenset(UnhelpfulReason(r) for r in raw["low_reasons"]),
    )


def _annotation_dict(case: AnnotatedCase) -> dict[str, Any]:
    return {
        "case_id": case.case_id,
        "hint_id": case.hint_id,
        "escalation_id": case.escalation_id,
        "bug_types": sorted(b.value for b in case.bug_types),
        "unhelpful_reasons": sorted(r.value for r in case.unhelpful_reasons),
        "feedback_quality": (
            {
                "label": case.feedback_quality.label.value,
                "low_reasons": sorted(
                    r.value for r in case.feedback_quality.low_reasons
                ),
            }
            if case.feedback_quality
            else None
        ),
        "annotator": case.annotator,
        "annotated_at": format_instant(case.annotated_at),
    }


def _annotation_from(raw: dict[str, Any]) -> AnnotatedCase:
    return AnnotatedCase(
        case_id=raw["case_id"],
        hint_id=raw["hint_id"],
        escalation_id=raw["escalation_id"],
        bug_types=frozenset(BugType(b) for b in raw["bug_types"]),
        unhelpful_reasons=frozenset(
            UnhelpfulReason(r) for r in raw["unhelpful_reasons"]
        ),
        feedback_quality=_quality_from(raw["feedback_quality"]),
        annotator=raw["annotator"],
        annotated_at=parse_instant(raw["annotated_at"]),
    )
