"""Derived escalation queue: oldest first, claim leases, anonymity."""

from __future__ import annotations

import dataclasses
from datetime import datetime, timedelta, timezone

import pytest

from helploop.domain import (
    Escalation,
    EscalationStatus,
    HelpRequest,
    Hint,
    HintType,
    RequestState,
)
from helploop.queue import (
    DEFAULT_LEASE_MINUTES,
    ClaimLease,
    build_context,
    lease_active,
    new_lease,
    next_candidate,
    pending_escalations,
)

T0 = datetime(2026, 3, 2, 9, 0, tzinfo=timezone.utc)


def escalation(n: int, *, created_offset: int = 0, status=EscalationStatus.PENDING) -> Escalation:
    return Escalation(
        escalation_id=f"esc-{n}",
        hint_id=f"hint-{n}",
        anonymous_token=f"anon-{n}",
        student_note=None,
        created_at=T0 + timedelta(seconds=created_offset),
        status=status,
    )


def index(escalations) -> tuple[dict, dict]:
    by_id = {esc.escalation_id: esc for esc in escalations}
    seq = {esc.escalation_id: i + 1 for i, esc in enumerate(escalations)}
    return by_id, seq


class TestOrdering:
    def test_oldest_creation_time_comes_first(self):
        by_id, seq = index([
            escalation(1, created_offset=60),
            escalation(2, created_offset=0),
            escalation(3, created_offset=120),
        ])
        ordered = pending_escalations(by_id, seq, {}, T0 + timedelta(hours=1))
        assert [esc.escalation_id for esc in ordered] == ["esc-2", "esc-1", "esc-3"]

    def test_equal_timestamps_fall_back_to_append_order(self):
        by_id, seq = index([escalation(1), escalation(2), escalation(3)])
        ordered = pending_escalations(by_id, seq, {}, T0 + timedelta(hours=1))
        assert [esc.escalation_id for esc in ordered] == ["esc-1", "esc-2", "esc-3"]

    def test_resolved_cases_never_appear(self):
        by_id, seq = index([
            escalation(1, status=EscalationStatus.RESOLVED),
            escalation(2),
        ])
        assert next_candidate(by_id, seq, {}, T0).escalation_id == "esc-2"

    def test_viewed_but_unresolved_cases_still_queue(self):
        by_id, seq = index([escalation(1, status=EscalationStatus.VIEWED)])
        assert next_candidate(by_id, seq, {}, T0) is not None

    def test_empty_queue_yields_none(self):
        assert next_candidate({}, {}, {}, T0) is None


class TestLeases:
    def test_live_lease_hides_the_case_from_other_instructors(self):
        by_id, seq = index([escalation(1), escalation(2)])
        leases = {"esc-1": new_lease("inst-a", "esc-1", T0)}
        candidate = next_candidate(by_id, seq, leases, T0 + timedelta(minutes=5), "inst-b")
        assert candidate.escalation_id == "esc-2"

    def test_own_lease_keeps_the_case_visible_to_its_holder(self):
        by_id, seq = index([escalation(1), escalation(2)])
        leases = {"esc-1": new_lease("inst-a", "esc-1", T0)}
        candidate = next_candidate(by_id, seq, leases, T0 + timedelta(minutes=5), "inst-a")
        assert candidate.escalation_id == "esc-1"

    def test_expired_lease_stops_counting(self):
        by_id, seq = index([escalation(1)])
        leases = {"esc-1": new_lease("inst-a", "esc-1", T0)}
        after_expiry = T0 + timedelta(minutes=DEFAULT_LEASE_MINUTES, seconds=1)
        candidate = next_candidate(by_id, seq, leases, after_expiry, "inst-b")
        assert candidate.escalation_id == "esc-1"

    def test_default_lease_runs_thirty_minutes(self):
        lease = new_lease("inst-a", "esc-1", T0)
        assert lease.expires_at == T0 + timedelta(minutes=30)
        assert lease_active(lease, T0 + timedelta(minutes=29, seconds=59))
        assert not lease_active(lease, T0 + timedelta(minutes=30))

    def test_missing_lease_is_inactive(self):
        assert not lease_active(None, T0)

    def test_lease_must_expire_after_acquisition(self):
        with pytest.raises(ValueError):
            ClaimLease("inst-a", "esc-1", T0, T0)


class TestContext:
    def test_context_carries_the_case_file_but_no_student_identity(self):
        request = HelpRequest(
            request_id="req-1",
            student_id="s-secret",
            assignment_id="a1",
            question_id="a1-q1",
            hint_type=HintType.DEBUGGING,
            student_comment="keeps crashing",
            code_snapshot="df[df.col > 0]",
            created_at=T0,
            state=RequestState.ESCALATED,
        )
        hint = Hint("hint-1", "req-1", "check the filter", T0, 10.0)
        esc = dataclasses.replace(escalation(1), student_note="please help")
        context = build_context(esc, hint, request, "Filter the rows and sum.")
        assert context.escalation.anonymous_token == "anon-1"
        assert context.task_description == "Filter the rows and sum."
        assert context.code_snapshot == "df[df.col > 0]"
        assert context.student_comment == "keeps crashing"
        assert context.ai_hint_text == "check the filter"
        assert context.student_note == "please help"
        assert context.hint_type == "debugging"
        # No field of the context exposes the student id.
        assert not any(
            field.name == "student_id" for field in dataclasses.fields(context)
        )
        assert "s-secret" not in str(context)
