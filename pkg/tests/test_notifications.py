"""Notification jobs: routing, anonymity, retries, background delivery."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from helploop import HintType, Rating
from helploop.notifications import (
    DeliveryState,
    LogNotifier,
    NotificationJob,
    NotificationKind,
    NotificationWorker,
    Notifier,
    Recipient,
    jobs_from_event,
    notify,
)

T0 = datetime(2026, 3, 2, 9, 0, tzinfo=timezone.utc)


def job_of(kind: NotificationKind, recipient: Recipient) -> NotificationJob:
    return NotificationJob(
        recipient=recipient,
        kind=kind,
        created_at=T0,
        subject="s",
        body="b",
        address="s1",
    )


class FlakyNotifier(Notifier):
    def __init__(self, fail_first: int):
        self.failures_left = fail_first
        self.attempts = 0

    def deliver(self, job: NotificationJob) -> None:
        self.attempts += 1
        if self.failures_left > 0:
            self.failures_left -= 1
            raise RuntimeError("smtp down")


class TestRouting:
    def test_escalations_go_to_the_instructor_list(self):
        with pytest.raises(ValueError):
            job_of(NotificationKind.NEW_ESCALATION, Recipient.STUDENT)

    def test_feedback_goes_to_the_student(self):
        with pytest.raises(ValueError):
            job_of(NotificationKind.FEEDBACK_AVAILABLE, Recipient.INSTRUCTOR_LIST)


class TestJobsFromEvents:
    def escalated(self, service, clock):
        service.record_consent("s1")
        request = service.create_help_request(
            "s1", "a1", "a1-q1", HintType.DEBUGGING, code_snapshot="x"
        )
        service.begin_generation(request.request_id)
        hint = service.deliver_hint(request.request_id, "check keys", 5.0)
        service.rate_hint(hint.hint_id, Rating.UNHELPFUL)
        return service.escalate_hint(hint.hint_id)

    def test_escalation_event_owes_one_instructor_job(self, service, clock):
        captured = []
        service.subscribe(
            lambda record: captured.extend(jobs_from_event(record, service.state))
        )
        escalation = self.escalated(service, clock)
        assert len(captured) == 1
        job = captured[0]
        assert job.kind is NotificationKind.NEW_ESCALATION
        assert job.recipient is Recipient.INSTRUCTOR_LIST
        assert escalation.anonymous_token in job.body
        assert "s1" not in job.body  # the student is never named

    def test_feedback_event_owes_one_student_job_naming_the_question(self, service, clock):
        escalation = self.escalated(service, clock)
        captured = []
        service.subscribe(
            lambda record: captured.extend(jobs_from_event(record, service.state))
        )
        service.next_unresolved("inst-1")
        service.submit_feedback("inst-1", escalation.escalation_id, "count rows")
        feedback_jobs = [
            j for j in captured if j.kind is NotificationKind.FEEDBACK_AVAILABLE
        ]
        assert len(feedback_jobs) == 1
        job = feedback_jobs[0]
        assert job.address == "s1"  # routing only; not shown to anyone
        assert "a1-q1" in job.body
        assert "inst-1" not in job.body  # the instructor is never named

    def test_other_events_owe_nothing(self, service):
        captured = []
        service.subscribe(
            lambda record: captured.extend(jobs_from_event(record, service.state))
        )
        service.record_consent("s1")
        service.create_help_request("s1", "a1", "a1-q1", HintType.PLANNING)
        assert captured == []


class TestDelivery:
    def test_success_marks_the_job_sent(self):
        job = job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST)
        notifier = LogNotifier()
        assert notify(job, notifier) is DeliveryState.SENT
        assert notifier.delivered == [job]

    def test_transient_failure_is_retried(self):
        job = job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST)
        notifier = FlakyNotifier(fail_first=2)
        assert notify(job, notifier, max_retries=2) is DeliveryState.SENT
        assert notifier.attempts == 3

    def test_exhausted_retries_mark_the_job_failed_without_raising(self):
        job = job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST)
        notifier = FlakyNotifier(fail_first=10)
        assert notify(job, notifier, max_retries=2) is DeliveryState.FAILED
        assert notifier.attempts == 3


class TestSmtpNotifier:
    def make(self) -> "SmtpNotifier":
        from helploop.notifications import SmtpNotifier

        return SmtpNotifier(
            host="mail.example.edu",
            port=25,
            sender="helploop@example.edu",
            instructor_addresses=["staff@example.edu", "ta@example.edu"],
            student_addresses={"s1": "s1@example.edu"},
        )

    def test_instructor_mail_goes_to_the_whole_list(self, monkeypatch):
        sent = []

        class FakeSmtp:
            def __init__(self, host, port):
                self.endpoint = (host, port)

            def __enter__(self):
                return self

            def __exit__(self, *exc):
                return False

            def send_message(self, message):
                sent.append((self.endpoint, message))

        monkeypatch.setattr("helploop.notifications.smtplib.SMTP", FakeSmtp)
        self.make().deliver(job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST))
        (endpoint, message), = sent
        assert endpoint == ("mail.example.edu", 25)
        assert message["To"] == "staff@example.edu, ta@example.edu"
        assert message["From"] == "helploop@example.edu"
        assert message["Subject"] == "s"

    def test_student_mail_resolves_through_the_address_book(self, monkeypatch):
        sent = []

        class FakeSmtp:
            def __init__(self, host, port):
                pass

            def __enter__(self):
                return self

            def __exit__(self, *exc):
                return False

            def send_message(self, message):
                sent.append(message)

        monkeypatch.setattr("helploop.notifications.smtplib.SMTP", FakeSmtp)
        self.make().deliver(job_of(NotificationKind.FEEDBACK_AVAILABLE, Recipient.STUDENT))
        assert sent[0]["To"] == "s1@example.edu"

    def test_unknown_student_address_fails_the_delivery(self):
        job = NotificationJob(
            recipient=Recipient.STUDENT,
            kind=NotificationKind.FEEDBACK_AVAILABLE,
            created_at=T0,
            subject="s",
            body="b",
            address="s-unknown",
        )
        with pytest.raises(RuntimeError):
            self.make().deliver(job)
        assert notify(job, self.make(), max_retries=0) is DeliveryState.FAILED


class TestWorker:
    def test_background_thread_drains_offered_jobs(self):
        notifier = LogNotifier()
        worker = NotificationWorker(notifier)
        worker.start()
        try:
            for _ in range(3):
                worker.offer(job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST))
            worker.drain()
            assert len(notifier.delivered) == 3
            assert all(j.delivery_state is DeliveryState.SENT for j in worker.history)
        finally:
            worker.stop()

    def test_drain_without_a_thread_delivers_synchronously(self):
        notifier = LogNotifier()
        worker = NotificationWorker(notifier)
        worker.offer(job_of(NotificationKind.FEEDBACK_AVAILABLE, Recipient.STUDENT))
        worker.drain()
        assert len(notifier.delivered) == 1

    def test_stop_is_idempotent(self):
        worker = NotificationWorker(LogNotifier())
        worker.start()
        worker.stop()
        worker.stop()

    def test_failed_delivery_does_not_stall_the_queue(self):
        notifier = FlakyNotifier(fail_first=100)
        worker = NotificationWorker(notifier, max_retries=0)
        worker.start()
        try:
            worker.offer(job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST))
            worker.offer(job_of(NotificationKind.NEW_ESCALATION, Recipient.INSTRUCTOR_LIST))
            worker.drain()
            states = [j.delivery_state for j in worker.history]
            assert states == [DeliveryState.FAILED, DeliveryState.FAILED]
        finally:
            worker.stop()
