"""HTTP surface: student routes, instructor routes, activity ingestion.

Authentication is a bearer token per role, mapped to an identity in the
config file. Domain errors surface as JSON bodies with stable machine codes
(``{"error": {"code": ..., "message": ...}}``), so clients can branch
without parsing prose. Students only ever see their own resources, and
instructor-facing payloads never contain a student identity.
"""

from __future__ import annotations

from datetime import datetime
from typing import Any

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig
from .domain import HelpRequest, Hint, HintType, Rating, RequestState
from .errors import (
    AlreadyRated,
    AlreadyResolved,
    ConsentMissing,
    DomainError,
    DuplicateEscalation,
    EmptyFeedback,
    EmptyReasonSet,
    HelpLoopError,
    IllegalTransition,
    InvalidAnnotation,
    NotDelivered,
    NotLeaseHolder,
    QuotaExceeded,
    StorageFailure,
    UnknownEscalation,
    UnknownHint,
    UnknownRequest,
    UnknownStudent,
)
from .events import ActivityKind, format_instant
from .notifications import NotificationWorker, jobs_from_event
from .queue import EscalationContext
from .service import HelpService, HintThread
from .taxonomy import BugType, FeedbackQuality, QualityLabel, UnhelpfulReason
from .worker import GenerationWorker

__all__ = ["create_app"]

_STATUS = {
    ConsentMissing: 403,
    QuotaExceeded: 429,
    AlreadyRated: 409,
    NotDelivered: 409,
    DuplicateEscalation: 409,
    AlreadyResolved: 409,
    IllegalTransition: 409,
    NotLeaseHolder: 409,
    EmptyFeedback: 422,
    EmptyReasonSet: 422,
    InvalidAnnotation: 422,
    UnknownStudent: 404,
    UnknownRequest: 404,
    UnknownHint: 404,
    UnknownEscalation: 404,
    StorageFailure: 503,
}


def _http_status(exc: HelpLoopError) -> int:
    for kind, status in _STATUS.items():
        if isinstance(exc, kind):
            return status
    return 400 if isinstance(exc, DomainError) else 500


def _error_body(code: str, message: str) -> dict[str, Any]:
    return {"error": {"code": code, "message": message}}


class HintRequestBody(BaseModel):
    assignment_id: str
    question_id: str
    hint_type: HintType
    student_comment: str | None = None
    code_snapshot: str = ""


class RatingBody(BaseModel):
    hint_id: str
    rating: Rating


class EscalationBody(BaseModel):
    hint_id: str
    student_note: str | None = None


class FeedbackBody(BaseModel):
    escalation_id: str
    text: str


class ReleaseBody(BaseModel):
    escalation_id: str


class ActivityBody(BaseModel):
    student_id: str
    question_id: str
    activity: ActivityKind
    at: datetime | None = None


class QualityBody(BaseModel):
    label: QualityLabel
    low_reasons: list[UnhelpfulReason] = []


class AnnotationBody(BaseModel):
    case_id: str
    bug_types: list[BugType]
    unhelpful_reasons: list[UnhelpfulReason]
    feedback_quality: QualityBody | None = None
    annotator: str = ""


def _opt_instant(instant: datetime | None) -> str | None:
    return format_instant(instant) if instant is not None else None


def _request_view(request: HelpRequest) -> dict[str, Any]:
    return {
        "request_id": request.request_id,
        "assignment_id": request.assignment_id,
        "question_id": request.question_id,
        "hint_type": request.hint_type.value,
        "student_comment": request.student_comment,
        "code_snapshot": request.code_snapshot,
        "created_at": format_instant(request.created_at),
        "status": request.state.value,
    }


def _hint_view(hint: Hint) -> dict[str, Any]:
    return {
        "hint_id": hint.hint_id,
        "text": hint.text,
        "generated_at": format_instant(hint.generated_at),
        "generation_latency_seconds": hint.generation_latency,
        "rating": hint.rating.value if hint.rating else None,
    }


def _thread_view(thread: HintThread, attribution: bool) -> dict[str, Any]:
    view: dict[str, Any] = {
        "request": _request_view(thread.request),
        "hint": _hint_view(thread.hint) if thread.hint else None,
        "escalation": None,
        "feedback": None,
    }
    if thread.escalation:
        view["escalation"] = {
            "escalation_id": thread.escalation.escalation_id,
            "status": thread.escalation.status.value,
            "student_note": thread.escalation.student_note,
            "created_at": format_instant(thread.escalation.created_at),
        }
    if thread.feedback:
        feedback = {
            "text": thread.feedback.text,
            "created_at": format_instant(thread.feedback.created_at),
        }
        # Default is anonymous both ways; attribution is an operator opt-in.
        if attribution:
            feedback["instructor_id"] = thread.feedback.instructor_id
        view["feedback"] = feedback
    return view


def _context_view(context: EscalationContext) -> dict[str, Any]:
    escalation = context.escalation
    return {
        "escalation": {
            "escalation_id": escalation.escalation_id,
            "anonymous_token": escalation.anonymous_token,
            "student_note": escalation.student_note,
            "created_at": format_instant(escalation.created_at),
            "status": escalation.status.value,
            "viewed_at": _opt_instant(escalation.viewed_at),
            "claim_expires_at": _opt_instant(escalation.claim_expires_at),
        },
        "task_description": context.task_description,
        "code_snapshot": context.code_snapshot,
        "student_comment": context.student_comment,
        "ai_hint_text": context.ai_hint_text,
        "student_note": context.student_note,
        "assignment_id": context.assignment_id,
        "question_id": context.question_id,
        "hint_type": context.hint_type,
        "hint_generated_at": format_instant(context.hint_generated_at),
    }


def create_app(
    service: HelpService,
    config: ServiceConfig,
    generation_worker: GenerationWorker | None = None,
    notification_worker: NotificationWorker | None = None,
) -> FastAPI:
    app = FastAPI(title="helploop", docs_url=None, redoc_url=None)

    if notification_worker is not None:
        service.subscribe(
            lambda record: [
                notification_worker.offer(job)
                for job in jobs_from_event(record, service.state)
            ]
        )
    if generation_worker is not None:
        generation_worker.attach()

    @app.exception_handler(HelpLoopError)
    async def handle_domain_error(request: Request, exc: HelpLoopError):
        return JSONResponse(
            status_code=_http_status(exc),
            content=_error_body(exc.code, str(exc)),
        )

    def _bearer(authorization: str | None) -> str | None:
        if authorization and authorization.startswith("Bearer "):
            return authorization[len("Bearer ") :]
        return None

    class _AuthFailure(Exception):
        def __init__(self, message: str):
            self.message = message

    @app.exception_handler(_AuthFailure)
    async def handle_auth_failure(request: Request, exc: _AuthFailure):
        return JSONResponse(
            status_code=401, content=_error_body("unauthorized", exc.message)
        )

    def student_id(authorization: str | None = Header(default=None)) -> str:
        token = _bearer(authorization)
        identity = config.student_tokens.get(token or "")
        if identity is None:
            raise _AuthFailure("a valid student token is required")
        return identity

    def instructor_id(authorization: str | None = Header(default=None)) -> str:
        token = _bearer(authorization)
        identity = config.instructor_tokens.get(token or "")
        if identity is None:
            raise _AuthFailure("a valid instructor token is required")
        return identity

    def ingest_auth(authorization: str | None = Header(default=None)) -> None:
        token = _bearer(authorization)
        if token not in config.ingest_tokens:
            raise _AuthFailure("a valid ingestion token is required")

    def _own_request(student: str, request_id: str) -> HelpRequest:
        request = service.request_status(request_id)
        if request.student_id != student:
            raise UnknownRequest(f"no help request {request_id}")
        return request

    def _own_hint(student: str, hint_id: str) -> Hint:
        hint = service.state.hints.get(hint_id)
        if hint is None or service.state.requests[hint.request_id].student_id != student:
            raise UnknownHint(f"no hint {hint_id}")
        return hint

    # -- student routes ---------------------------------------------------

    @app.post("/api/consent")
    def give_consent(student: str = Depends(student_id)):
        profile = service.record_consent(student)
        return {
            "student_id": profile.student_id,
            "consent_given": profile.consent_given,
            "consent_timestamp": _opt_instant(profile.consent_timestamp),
        }

    @app.post("/api/hint-request", status_code=201)
    def create_hint_request(
        body: HintRequestBody, student: str = Depends(student_id)
    ):
        request = service.create_help_request(
            student,
            body.assignment_id,
            body.question_id,
            body.hint_type,
            student_comment=body.student_comment,
            code_snapshot=body.code_snapshot,
        )
        return {
            "request": _request_view(request),
            "notice": config.ui_copy["generation_notice"],
        }

    @app.get("/api/request-status/{request_id}")
    def request_status(request_id: str, student: str = Depends(student_id)):
        request = _own_request(student, request_id)
        view: dict[str, Any] = {
            "request_id": request.request_id,
            "status": request.state.value,
        }
        if request.state in (RequestState.CREATED, RequestState.GENERATING):
            view["notice"] = config.ui_copy["generation_notice"]
        hint = service.state.hint_for_request(request.request_id)
        if hint is not None:
            view["hint"] = _hint_view(hint)
        return view

    @app.post("/api/rating")
    def rate(body: RatingBody, student: str = Depends(student_id)):
        _own_hint(student, body.hint_id)
        hint = service.rate_hint(body.hint_id, body.rating)
        return {"hint": _hint_view(hint)}

    @app.post("/api/escalation", status_code=201)
    def escalate(body: EscalationBody, student: str = Depends(student_id)):
        _own_hint(student, body.hint_id)
        escalation = service.escalate_hint(body.hint_id, body.student_note)
        return {
            "escalation": {
                "escalation_id": escalation.escalation_id,
                "status": escalation.status.value,
                "created_at": format_instant(escalation.created_at),
            },
            "notice": config.ui_copy["escalation_notice"],
        }

    @app.get("/api/student-hints")
    def student_hints(question_id: str, student: str = Depends(student_id)):
        threads = service.student_hints(student, question_id)
        quota = service.remaining_quota(student, question_id)
        return {
            "question_id": question_id,
            "remaining_quota": {k.value: v for k, v in quota.items()},
            "threads": [_thread_view(t, config.attribution) for t in threads],
        }

    # -- instructor routes -------------------------------------------------

    @app.get("/api/instructor/next")
    def next_unresolved(instructor: str = Depends(instructor_id)):
        context = service.next_unresolved(instructor)
        if context is None:
            return Response(status_code=204)
        return {
            "context": _context_view(context),
            "queue_depth": service.queue_depth(instructor),
        }

    @app.post("/api/instructor/feedback", status_code=201)
    def submit_feedback(body: FeedbackBody, instructor: str = Depends(instructor_id)):
        feedback = service.submit_feedback(instructor, body.escalation_id, body.text)
        return {
            "feedback": {
                "feedback_id": feedback.feedback_id,
                "escalation_id": feedback.escalation_id,
                "created_at": format_instant(feedback.created_at),
            }
        }

    @app.post("/api/instructor/release")
    def release(body: ReleaseBody, instructor: str = Depends(instructor_id)):
        service.release_claim(instructor, body.escalation_id)
        return {"released": body.escalation_id}

    @app.post("/api/instructor/annotate", status_code=201)
    def annotate(body: AnnotationBody, instructor: str = Depends(instructor_id)):
        quality = None
        if body.feedback_quality is not None:
            quality = FeedbackQuality(
                label=body.feedback_quality.label,
                low_reasons=frozenset(body.feedback_quality.low_reasons),
            )
        case = service.annotate_case(
            body.case_id,
            bug_types=body.bug_types,
            unhelpful_reasons=body.unhelpful_reasons,
            feedback_quality=quality,
            annotator=body.annotator or instructor,
        )
        return {
            "case": {
                "case_id": case.case_id,
                "bug_types": sorted(b.value for b in case.bug_types),
                "unhelpful_reasons": sorted(r.value for r in case.unhelpful_reasons),
            }
        }

    # -- platform ingestion and operations ----------------------------------

    @app.post("/api/activity-event", status_code=202, dependencies=[Depends(ingest_auth)])
    def activity_event(body: ActivityBody):
        service.record_activity(
            body.student_id, body.question_id, body.activity, at=body.at
        )
        return {"recorded": True}

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "events": service.state.last_sequence_number,
        }

    @app.get("/api/meta")
    def meta():
        return {
            "quota_limits": {
                hint_type.value: service.policy.limit(hint_type)
                for hint_type in HintType
            },
            "copy": config.ui_copy,
            "attribution": config.attribution,
        }

    return app
