"""The command layer: validates, appends one event, folds it into state.

Every mutation follows the same shape. Validate against current state, append
exactly one event to the durable log, then fold that event through the same
reducer replay uses. The in-memory state is therefore always byte-identical
to a fresh replay of the log, which is the core persistence guarantee.

All commands are serialized by a single lock; queries take it too so they
see complete states only.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable

from .domain import (
    Escalation,
    HelpRequest,
    Hint,
    HintType,
    InstructorFeedback,
    LifecycleEvent,
    QuotaPolicy,
    Rating,
    RequestState,
    StudentProfile,
    TRANSITIONS,
)
from .domain import rate_hint as rate_hint_value
from .domain import record_consent as consent_value
from .domain import quota_slot_available, remaining_quota
from .errors import (
    AlreadyResolved,
    ConsentMissing,
    DuplicateEscalation,
    EmptyFeedback,
    EmptyReasonSet,
    IllegalTransition,
    InvalidAnnotation,
    NotLeaseHolder,
    QuotaExceeded,
    UnknownEscalation,
    UnknownHint,
    UnknownRequest,
)
from .events import ActivityKind, Actor, EventKind, EventRecord, format_instant
from .queue import (
    DEFAULT_LEASE_MINUTES,
    EscalationContext,
    build_context,
    lease_active,
    new_lease,
    next_candidate,
    pending_escalations,
)
from .state import ServiceState, apply_event
from .store import EventLog, load_snapshot, restore, write_snapshot
from .taxonomy import AnnotatedCase, BugType, FeedbackQuality, UnhelpfulReason

__all__ = ["HelpService", "HintThread", "default_id_factory", "utc_now"]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def default_id_factory(kind: str) -> str:
    return f"{kind}-{uuid.uuid4().hex}"


@dataclass(frozen=True)
class HintThread:
    """Everything a student sees about one of their requests."""

    request: HelpRequest
    hint: Hint | None
    escalation: Escalation | None
    feedback: InstructorFeedback | None


class HelpService:
    """Orchestrates hint requests, ratings, escalations, and feedback."""

    def __init__(
        self,
        log: EventLog,
        state: ServiceState,
        *,
        policy: QuotaPolicy | None = None,
        clock: Callable[[], datetime] = utc_now,
        id_factory: Callable[[str], str] = default_id_factory,
        lease_minutes: int = DEFAULT_LEASE_MINUTES,
        task_catalog: dict[str, str] | None = None,
    ) -> None:
        self._log = log
        self._state = state
        self.policy = policy or QuotaPolicy()
        self._clock = clock
        self._new_id = id_factory
        self._lease_minutes = lease_minutes
        self._task_catalog = dict(task_catalog or {})
        self._lock = threading.RLock()
        # Observers must not call back into the service; they run under the
        # command lock so state reads inside them are consistent.
        self._observers: list[Callable[[EventRecord], None]] = []

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def open(
        cls,
        log_path: str | Path,
        *,
        snapshot_path: str | Path | None = None,
        fsync: bool = False,
        **kwargs: Any,
    ) -> "HelpService":
        """Open (or create) the log, rebuild state, and drop stale leases.

        Claim leases do not survive a restart: any lease still present in the
        rebuilt state is released with an explicit event, so the log remains
        the complete story and the cases become servable again.
        """
        log = EventLog(log_path, fsync=fsync)
        records = log.open()
        if snapshot_path is not None and Path(snapshot_path).exists():
            snapshot = load_snapshot(snapshot_path)
            tail = (
                r for r in records if r.sequence_number > snapshot.last_sequence_number
            )
            state = restore(snapshot, tail)
        else:
            state = ServiceState()
            for record in records:
                apply_event(state, record)
        service = cls(log, state, **kwargs)
        for escalation_id in list(state.leases):
            lease = state.leases[escalation_id]
            service._append(
                Actor.SYSTEM,
                EventKind.LEASE_RELEASED,
                {
                    "escalation_id": escalation_id,
                    "instructor_id": lease.instructor_id,
                    "reason": "service_restart",
                },
            )
        return service

    def close(self) -> None:
        self._log.close()

    def __enter__(self) -> "HelpService":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def subscribe(self, observer: Callable[[EventRecord], None]) -> None:
        with self._lock:
            self._observers.append(observer)

    def write_snapshot(self, path: str | Path) -> None:
        with self._lock:
            write_snapshot(path, self._state)

    @property
    def state(self) -> ServiceState:
        return self._state

    def _append(
        self, actor: Actor, kind: EventKind, payload: dict[str, Any]
    ) -> EventRecord:
        record = self._log.append(self._clock(), actor, kind, payload)
        apply_event(self._state, record)
        for observer in self._observers:
            observer(record)
        return record

    # -- student commands --------------------------------------------------

    def record_consent(self, student_id: str) -> StudentProfile:
        """Idempotent: first call records the instant, later calls no-op."""
        with self._lock:
            existing = self._state.students.get(student_id)
            if existing is not None and existing.consent_given:
                return consent_value(existing, self._clock())
            self._append(
                Actor.STUDENT, EventKind.CONSENT_GIVEN, {"student_id": student_id}
            )
            return self._state.students[student_id]

    def create_help_request(
        self,
        student_id: str,
        assignment_id: str,
        question_id: str,
        hint_type: HintType,
        student_comment: str | None = None,
        code_snapshot: str = "",
    ) -> HelpRequest:
        with self._lock:
            student = self._state.students.get(student_id)
            if student is None or not student.consent_given:
                raise ConsentMissing(
                    f"student {student_id} has not accepted the consent terms"
                )
            history = self._state.requests_for(student_id, question_id)
            if not quota_slot_available(
                student_id, question_id, hint_type, self.policy, history
            ):
                raise QuotaExceeded(
                    f"no {hint_type.value} hints left on question {question_id}"
                )
            request_id = self._new_id("req")
            self._append(
                Actor.STUDENT,
                EventKind.REQUEST_CREATED,
                {
                    "request_id": request_id,
                    "student_id": student_id,
                    "assignment_id": assignment_id,
                    "question_id": question_id,
                    "hint_type": hint_type.value,
                    "student_comment": student_comment,
                    "code_snapshot": code_snapshot,
                },
            )
            return self._state.requests[request_id]

    def rate_hint(self, hint_id: str, rating: Rating) -> Hint:
        with self._lock:
            hint = self._state.hints.get(hint_id)
            if hint is None:
                raise UnknownHint(f"no hint {hint_id}")
            request = self._state.requests[hint.request_id]
            rate_hint_value(hint, rating, request.state)  # raises if not rateable
            self._append(
                Actor.STUDENT,
                EventKind.HINT_RATED,
                {"hint_id": hint_id, "rating": rating.value},
            )
            return self._state.hints[hint_id]

    def escalate_hint(self, hint_id: str, student_note: str | None = None) -> Escalation:
        with self._lock:
            hint = self._state.hints.get(hint_id)
            if hint is None:
                raise UnknownHint(f"no hint {hint_id}")
            if hint_id in self._state.escalation_by_hint:
                raise DuplicateEscalation(f"hint {hint_id} is already escalated")
            request = self._state.requests[hint.request_id]
            self._require_edge(request, LifecycleEvent.ESCALATE)
            escalation_id = self._new_id("esc")
            self._append(
                Actor.STUDENT,
                EventKind.ESCALATED,
                {
                    "escalation_id": escalation_id,
                    "hint_id": hint_id,
                    # Minted fresh; shares no bytes with the student id.
                    "anonymous_token": self._new_id("anon"),
                    "student_note": student_note,
                },
            )
            return self._state.escalations[escalation_id]

    def record_activity(
        self,
        student_id: str,
        question_id: str,
        activity: ActivityKind,
        at: datetime | None = None,
    ) -> None:
        with self._lock:
            self._append(
                Actor.SYSTEM,
                EventKind.ACTIVITY_OBSERVED,
                {
                    "student_id": student_id,
                    "question_id": question_id,
                    "activity": activity.value,
                    "at": format_instant(at if at is not None else self._clock()),
                },
            )

    # -- generation commands (driven by the worker) -------------------------

    def begin_generation(self, request_id: str) -> HelpRequest:
        with self._lock:
            request = self._require_request(request_id)
            self._require_edge(request, LifecycleEvent.START_GENERATION)
            self._append(
                Actor.SYSTEM, EventKind.GENERATION_STARTED, {"request_id": request_id}
            )
            return self._state.requests[request_id]

    def deliver_hint(
        self, request_id: str, text: str, generation_latency: float
    ) -> Hint:
        with self._lock:
            request = self._require_request(request_id)
            self._require_edge(request, LifecycleEvent.DELIVER_HINT)
            hint_id = self._new_id("hint")
            self._append(
                Actor.SYSTEM,
                EventKind.HINT_DELIVERED,
                {
                    "request_id": request_id,
                    "hint_id": hint_id,
                    "text": text,
                    "generation_latency_seconds": round(generation_latency, 3),
                },
            )
            return self._state.hints[hint_id]

    def fail_generation(self, request_id: str, reason: str) -> HelpRequest:
        """Marks the request Failed; its quota slot is freed by that fact."""
        with self._lock:
            request = self._require_request(request_id)
            self._require_edge(request, LifecycleEvent.FAIL_GENERATION)
            self._append(
                Actor.SYSTEM,
                EventKind.GENERATION_FAILED,
                {"request_id": request_id, "reason": reason},
            )
            return self._state.requests[request_id]

    # -- instructor commands -------------------------------------------------

    def next_unresolved(self, instructor_id: str) -> EscalationContext | None:
        """Serve the oldest unresolved escalation and lease it to the caller.

        First service marks the escalation viewed; re-serving the same case to
        its current lease holder is idempotent and does not extend the lease.
        """
        with self._lock:
            now = self._clock()
            candidate = next_candidate(
                self._state.escalations,
                self._state.escalation_seq,
                self._state.leases,
                now,
                instructor_id,
            )
            if candidate is None:
                return None
            escalation_id = candidate.escalation_id
            lease = self._state.leases.get(escalation_id)
            if not lease_active(lease, now) or lease.instructor_id != instructor_id:
                lease = new_lease(
                    instructor_id, escalation_id, now, self._lease_minutes
                )
                self._append(
                    Actor.INSTRUCTOR,
                    EventKind.LEASE_ACQUIRED,
                    {
                        "escalation_id": escalation_id,
                        "instructor_id": instructor_id,
                        "expires_at": format_instant(lease.expires_at),
                    },
                )
            if self._state.escalations[escalation_id].viewed_at is None:
                self._append(
                    Actor.INSTRUCTOR,
                    EventKind.ESCALATION_VIEWED,
                    {"escalation_id": escalation_id, "instructor_id": instructor_id},
                )
            return self.escalation_context(escalation_id)

    def submit_feedback(
        self, instructor_id: str, escalation_id: str, text: str
    ) -> InstructorFeedback:
        with self._lock:
            escalation = self._require_escalation(escalation_id)
            if escalation.resolved_at is not None:
                raise AlreadyResolved(f"escalation {escalation_id} is resolved")
            if not text or not text.strip():
                raise EmptyFeedback("feedback text must be non-empty")
            lease = self._state.leases.get(escalation_id)
            if not lease_active(lease, self._clock()) or lease.instructor_id != instructor_id:
                raise NotLeaseHolder(
                    f"{instructor_id} does not hold the active lease on {escalation_id}"
                )
            feedback_id = self._new_id("fb")
            self._append(
                Actor.INSTRUCTOR,
                EventKind.FEEDBACK_SUBMITTED,
                {
                    "feedback_id": feedback_id,
                    "escalation_id": escalation_id,
                    "instructor_id": instructor_id,
                    "text": text,
                },
            )
            return self._state.feedback[feedback_id]

    def release_claim(self, instructor_id: str, escalation_id: str) -> None:
        with self._lock:
            self._require_escalation(escalation_id)
            lease = self._state.leases.get(escalation_id)
            if not lease_active(lease, self._clock()) or lease.instructor_id != instructor_id:
                raise NotLeaseHolder(
                    f"{instructor_id} does not hold the active lease on {escalation_id}"
                )
            self._append(
                Actor.INSTRUCTOR,
                EventKind.LEASE_RELEASED,
                {
                    "escalation_id": escalation_id,
                    "instructor_id": instructor_id,
                    "reason": "released",
                },
            )

    def annotate_case(
        self,
        target_id: str,
        bug_types: Iterable[BugType],
        unhelpful_reasons: Iterable[UnhelpfulReason],
        feedback_quality: FeedbackQuality | None,
        annotator: str,
    ) -> AnnotatedCase:
        """Label an escalation, or an unhelpful-rated hint kept for contrast.

        The case id is the target id itself, so re-annotating overwrites the
        current label while the event log keeps the full audit trail.
        """
        with self._lock:
            escalation = self._state.escalations.get(target_id)
            if escalation is not None:
                escalation_id: str | None = target_id
                hint_id = escalation.hint_id
            elif target_id in self._state.hints:
                hint = self._state.hints[target_id]
                if hint.rating is not Rating.UNHELPFUL:
                    raise InvalidAnnotation(
                        f"hint {target_id} is not rated unhelpful; nothing to review"
                    )
                escalation_id = self._state.escalation_by_hint.get(target_id)
                hint_id = target_id
            else:
                raise UnknownEscalation(f"no escalation or hint {target_id}")
            reasons = frozenset(unhelpful_reasons)
            if not reasons:
                raise EmptyReasonSet("unhelpful cases need at least one reason")
            if feedback_quality is not None and escalation_id is None:
                raise InvalidAnnotation(
                    "feedback quality only applies to escalated cases"
                )
            case_id = escalation_id or hint_id
            self._append(
                Actor.INSTRUCTOR,
                EventKind.CASE_ANNOTATED,
                {
                    "case_id": case_id,
                    "escalation_id": escalation_id,
                    "hint_id": hint_id,
                    "bug_types": sorted(b.value for b in bug_types),
                    "unhelpful_reasons": sorted(r.value for r in reasons),
                    "feedback_quality": (
                        {
                            "label": feedback_quality.label.value,
                            "low_reasons": sorted(
                                r.value for r in feedback_quality.low_reasons
                            ),
                        }
                        if feedback_quality is not None
                        else None
                    ),
                    "annotator": annotator,
                },
            )
            return self._state.annotations[case_id]

    # -- queries -------------------------------------------------------------

    def remaining_quota(self, student_id: str, question_id: str) -> dict[HintType, int]:
        with self._lock:
            return remaining_quota(
                student_id,
                question_id,
                self.policy,
                self._state.requests_for(student_id, question_id),
            )

    def request_status(self, request_id: str) -> HelpRequest:
        with self._lock:
            return self._require_request(request_id)

    def hint_thread(self, request: HelpRequest) -> HintThread:
        hint = self._state.hint_for_request(request.request_id)
        escalation = feedback = None
        if hint is not None:
            escalation_id = self._state.escalation_by_hint.get(hint.hint_id)
            if escalation_id is not None:
                escalation = self._state.escalations[escalation_id]
                feedback_id = self._state.feedback_by_escalation.get(escalation_id)
                if feedback_id is not None:
                    feedback = self._state.feedback[feedback_id]
        return HintThread(request, hint, escalation, feedback)

    def student_hints(self, student_id: str, question_id: str) -> list[HintThread]:
        """All of a student's requests on a question, oldest first."""
        with self._lock:
            threads = [
                self.hint_thread(request)
                for request in self._state.requests_for(student_id, question_id)
            ]
            threads.sort(key=lambda t: t.request.created_at)
            return threads

    def escalation_context(self, escalation_id: str) -> EscalationContext:
        with self._lock:
            escalation = self._require_escalation(escalation_id)
            hint = self._state.hints[escalation.hint_id]
            request = self._state.requests[hint.request_id]
            return build_context(
                escalation, hint, request, self.task_description(request.question_id)
            )

    def queue_depth(self, instructor_id: str | None = None) -> int:
        with self._lock:
            return len(
                pending_escalations(
                    self._state.escalations,
                    self._state.escalation_seq,
                    self._state.leases,
                    self._clock(),
                    instructor_id,
                )
            )

    def task_description(self, question_id: str) -> str:
        return self._task_catalog.get(question_id, "")

    # -- guards ---------------------------------------------------------------

    def _require_request(self, request_id: str) -> HelpRequest:
        request = self._state.requests.get(request_id)
        if request is None:
            raise UnknownRequest(f"no help request {request_id}")
        return request

    def _require_escalation(self, escalation_id: str) -> Escalation:
        escalation = self._state.escalations.get(escalation_id)
        if escalation is None:
            raise UnknownEscalation(f"no escalation {escalation_id}")
        return escalation

    @staticmethod
    def _require_edge(request: HelpRequest, event: LifecycleEvent) -> None:
        if (request.state, event) not in TRANSITIONS:
            raise IllegalTransition(
                f"no transition {request.state.value} --{event.value}-->"
            )
