"""Notification jobs and delivery adapters.

Escalations notify the instructor list; submitted feedback notifies the
requesting student. Delivery runs on a background worker so a slow or broken
mail server never blocks (or rolls back) the domain action that triggered
the message. Message content is anonymous both ways: students are never
named to instructors, instructors are never named to students.
"""

from __future__ import annotations

import logging
import queue
import smtplib
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from email.message import EmailMessage
from enum import Enum

from .events import EventKind, EventRecord
from .state import ServiceState

__all__ = [
    "DeliveryState",
    "LogNotifier",
    "NotificationJob",
    "NotificationKind",
    "NotificationWorker",
    "Notifier",
    "Recipient",
    "SmtpNotifier",
    "jobs_from_event",
    "notify",
]

log = logging.getLogger("helploop.notify")


class Recipient(str, Enum):
    INSTRUCTOR_LIST = "instructor_list"
    STUDENT = "student"


class NotificationKind(str, Enum):
    NEW_ESCALATION = "new_escalation"
    FEEDBACK_AVAILABLE = "feedback_available"


class DeliveryState(str, Enum):
    QUEUED = "queued"
    SENT = "sent"
    FAILED = "failed"


@dataclass
class NotificationJob:
    recipient: Recipient
    kind: NotificationKind
    created_at: datetime
    subject: str
    body: str
    # Opaque address: a student id for Recipient.STUDENT, ignored otherwise.
    address: str = ""
    delivery_state: DeliveryState = DeliveryState.QUEUED

    def __post_init__(self) -> None:
        expected = (
            Recipient.INSTRUCTOR_LIST
            if self.kind is NotificationKind.NEW_ESCALATION
            else Recipient.STUDENT
        )
        if self.recipient is not expected:
            raise ValueError(
                f"{self.kind.value} notifications go to {expected.value}"
            )


class Notifier(ABC):
    """Delivery adapter; raises on failure so ``notify`` can retry."""

    @abstractmethod
    def deliver(self, job: NotificationJob) -> None: ...


class LogNotifier(Notifier):
    """Writes deliveries to the log and keeps them for test assertions."""

    def __init__(self) -> None:
        self.delivered: list[NotificationJob] = []

    def deliver(self, job: NotificationJob) -> None:
        log.info(
            "notify %s -> %s: %s", job.kind.value, job.recipient.value, job.subject
        )
        self.delivered.append(job)


class SmtpNotifier(Notifier):
    """Plain SMTP delivery; addresses come from configuration, not the log."""

    def __init__(
        self,
        host: str,
        port: int,
        sender: str,
        instructor_addresses: list[str],
        student_addresses: dict[str, str] | None = None,
    ) -> None:
        self._host = host
        self._port = port
        self._sender = sender
        self._instructor_addresses = list(instructor_addresses)
        self._student_addresses = dict(student_addresses or {})

    def _addresses(self, job: NotificationJob) -> list[str]:
        if job.recipient is Recipient.INSTRUCTOR_LIST:
            return self._instructor_addresses
        address = self._student_addresses.get(job.address)
        return [address] if address else []

    def deliver(self, job: NotificationJob) -> None:
        recipients = self._addresses(job)
        if not recipients:
            raise RuntimeError(f"no delivery address for {job.recipient.value}")
        message = EmailMessage()
        message["From"] = self._sender
        message["To"] = ", ".join(recipients)
        message["Subject"] = job.subject
        message.set_content(job.body)
        with smtplib.SMTP(self._host, self._port) as smtp:
            smtp.send_message(message)


def notify(job: NotificationJob, notifier: Notifier, max_retries: int = 2) -> DeliveryState:
    """Deliver with retries; failures mark the job Failed, never raise."""
    for _ in range(max_retries + 1):
        try:
            notifier.deliver(job)
            job.delivery_state = DeliveryState.SENT
            return job.delivery_state
        except Exception:
            log.exception("notification delivery failed (%s)", job.kind.value)
    job.delivery_state = DeliveryState.FAILED
    return job.delivery_state


def jobs_from_event(record: EventRecord, state: ServiceState) -> list[NotificationJob]:
    """Translate a domain event into the notification jobs it owes.

    Exactly one NewEscalation job per escalation and one FeedbackAvailable
    job per feedback submission; everything else produces none.
    """
    if record.kind is EventKind.ESCALATED:
        escalation = state.escalations[record.payload["escalation_id"]]
        return [
            NotificationJob(
                recipient=Recipient.INSTRUCTOR_LIST,
                kind=NotificationKind.NEW_ESCALATION,
                created_at=record.timestamp,
                subject="New escalated hint awaiting review",
                body=(
                    "A student escalated an unhelpful AI hint "
                    f"(case token {escalation.anonymous_token}). "
                    "Open the instructor console to review the oldest case."
                ),
            )
        ]
    if record.kind is EventKind.FEEDBACK_SUBMITTED:
        escalation = state.escalations[record.payload["escalation_id"]]
        hint = state.hints[escalation.hint_id]
        request = state.requests[hint.request_id]
        return [
            NotificationJob(
                recipient=Recipient.STUDENT,
                kind=NotificationKind.FEEDBACK_AVAILABLE,
                created_at=record.timestamp,
                subject="Instructor feedback on your escalated hint",
                body=(
                    "An instructor has responded to your escalated hint on "
                    f"question {request.question_id}. Open the help panel to read it."
                ),
                address=request.student_id,
            )
        ]
    return []


class NotificationWorker:
    """Single background thread draining a job queue through one adapter."""

    def __init__(self, notifier: Notifier, max_retries: int = 2) -> None:
        self._notifier = notifier
        self._max_retries = max_retries
        self._queue: "queue.Queue[NotificationJob | None]" = queue.Queue()
        self._thread: threading.Thread | None = None
        self.history: list[NotificationJob] = []

    def offer(self, job: NotificationJob) -> None:
        self._queue.put(job)

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(
            target=self._run, name="helploop-notify", daemon=True
        )
        self._thread.start()

    def _run(self) -> None:
        while True:
            job = self._queue.get()
            try:
                if job is None:
                    return
                notify(job, self._notifier, self._max_retries)
                self.history.append(job)
            finally:
                self._queue.task_done()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._queue.put(None)
        self._thread.join(timeout=10)
        self._thread = None

    def drain(self) -> None:
        """Block until everything queued so far is delivered."""
        if self._thread is not None:
            self._queue.join()
            return
        while True:
            try:
                job = self._queue.get_nowait()
            except queue.Empty:
                return
            try:
                if job is not None:
                    notify(job, self._notifier, self._max_retries)
                    self.history.append(job)
            finally:
                self._queue.task_done()
