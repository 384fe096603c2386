"""Lifecycle state machine, rating rules, consent, and quota arithmetic."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from helploop.domain import (
    DEFAULT_LIMITS,
    TRANSITIONS,
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
    apply_transition,
    quota_slot_available,
    rate_hint,
    record_consent,
    remaining_quota,
)
from helploop.errors import AlreadyRated, IllegalTransition, NotDelivered

T0 = datetime(2026, 3, 2, 9, 0, tzinfo=timezone.utc)


def request_in(state: RequestState, *, hint_type=HintType.DEBUGGING, n=1) -> HelpRequest:
    return HelpRequest(
        request_id=f"req-{n}",
        student_id="s1",
        assignment_id="a1",
        question_id="a1-q1",
        hint_type=hint_type,
        student_comment=None,
        code_snapshot="",
        created_at=T0,
        state=state,
    )


class TestStateMachine:
    def test_exactly_the_eight_legal_edges(self):
        assert TRANSITIONS == {
            (RequestState.CREATED, LifecycleEvent.START_GENERATION): RequestState.GENERATING,
            (RequestState.GENERATING, LifecycleEvent.DELIVER_HINT): RequestState.DELIVERED,
            (RequestState.GENERATING, LifecycleEvent.FAIL_GENERATION): RequestState.FAILED,
            (RequestState.DELIVERED, LifecycleEvent.RATE_HELPFUL): RequestState.RATED_HELPFUL,
            (RequestState.DELIVERED, LifecycleEvent.RATE_UNHELPFUL): RequestState.RATED_UNHELPFUL,
            (RequestState.RATED_UNHELPFUL, LifecycleEvent.ESCALATE): RequestState.ESCALATED,
            (RequestState.ESCALATED, LifecycleEvent.INSTRUCTOR_VIEW): RequestState.INSTRUCTOR_VIEWED,
            (RequestState.INSTRUCTOR_VIEWED, LifecycleEvent.RESOLVE): RequestState.RESOLVED,
        }

    @pytest.mark.parametrize("state,event", sorted(TRANSITIONS, key=str))
    def test_each_legal_edge_advances(self, state, event):
        assert apply_transition(request_in(state), event).state is TRANSITIONS[(state, event)]

    @pytest.mark.parametrize(
        "state,event",
        sorted(
            (
                (state, event)
                for state in RequestState
                for event in LifecycleEvent
                if (state, event) not in TRANSITIONS
            ),
            key=str,
        ),
    )
    def test_every_other_pair_is_rejected(self, state, event):
        with pytest.raises(IllegalTransition):
            apply_transition(request_in(state), event)

    def test_transition_returns_a_new_value(self):
        before = request_in(RequestState.CREATED)
        after = apply_transition(before, LifecycleEvent.START_GENERATION)
        assert before.state is RequestState.CREATED
        assert after is not before


class TestRating:
    def hint(self, rating=None) -> Hint:
        return Hint("hint-1", "req-1", "try a smaller input", T0, 12.5, rating)

    def test_rating_sets_the_flag_once(self):
        rated = rate_hint(self.hint(), Rating.HELPFUL, RequestState.DELIVERED)
        assert rated.rating is Rating.HELPFUL

    def test_second_rating_is_rejected(self):
        with pytest.raises(AlreadyRated):
            rate_hint(self.hint(Rating.HELPFUL), Rating.UNHELPFUL, RequestState.RATED_HELPFUL)

    @pytest.mark.parametrize(
        "state", [s for s in RequestState if s is not RequestState.DELIVERED]
    )
    def test_only_delivered_requests_can_be_rated(self, state):
        with pytest.raises(NotDelivered):
            rate_hint(self.hint(), Rating.HELPFUL, state)


class TestConsent:
    def test_first_consent_records_the_instant(self):
        student = record_consent(StudentProfile("s1"), T0)
        assert student.consent_given and student.consent_timestamp == T0

    def test_repeat_consent_keeps_the_first_timestamp(self):
        student = record_consent(StudentProfile("s1"), T0)
        again = record_consent(student, T0 + timedelta(days=1))
        assert again.consent_timestamp == T0

    def test_profile_requires_timestamp_iff_consent(self):
        with pytest.raises(ValueError):
            StudentProfile("s1", consent_given=True, consent_timestamp=None)
        with pytest.raises(ValueError):
            StudentProfile("s1", consent_given=False, consent_timestamp=T0)


class TestQuota:
    # Hand-worked example used throughout: limits planning 1 / debugging 3 /
    # optimization 1; two debugging hints delivered, one planning failed.
    def history(self):
        return [
            request_in(RequestState.RATED_HELPFUL, n=1),
            request_in(RequestState.DELIVERED, n=2),
            request_in(RequestState.FAILED, hint_type=HintType.PLANNING, n=3),
        ]

    def test_default_limits(self):
        assert dict(DEFAULT_LIMITS) == {
            HintType.PLANNING: 1,
            HintType.DEBUGGING: 3,
            HintType.OPTIMIZATION: 1,
        }

    def test_delivered_or_later_requests_consume_quota(self):
        left = remaining_quota("s1", "a1-q1", QuotaPolicy(), self.history())
        assert left == {
            HintType.PLANNING: 1,  # the failed attempt was refunded
            HintType.DEBUGGING: 1,  # 3 - 2 delivered
            HintType.OPTIMIZATION: 1,
        }

    def test_other_students_and_questions_do_not_count(self):
        other = [
            HelpRequest(
                "req-9", "s2", "a1", "a1-q1", HintType.DEBUGGING, None, "", T0,
                RequestState.DELIVERED,
            ),
            HelpRequest(
                "req-10", "s1", "a1", "a1-q2", HintType.DEBUGGING, None, "", T0,
                RequestState.DELIVERED,
            ),
        ]
        left = remaining_quota("s1", "a1-q1", QuotaPolicy(), other)
        assert left[HintType.DEBUGGING] == 3

    def test_remaining_quota_never_goes_negative(self):
        history = [request_in(RequestState.DELIVERED, n=i) for i in range(5)]
        left = remaining_quota("s1", "a1-q1", QuotaPolicy(), history)
        assert left[HintType.DEBUGGING] == 0

    def test_in_flight_requests_reserve_a_slot(self):
        # Two delivered plus one still generating: the third slot is spoken
        # for even though remaining_quota still reports one left.
        history = self.history() + [request_in(RequestState.GENERATING, n=4)]
        assert remaining_quota("s1", "a1-q1", QuotaPolicy(), history)[HintType.DEBUGGING] == 1
        assert not quota_slot_available(
            "s1", "a1-q1", HintType.DEBUGGING, QuotaPolicy(), history
        )

    def test_failed_requests_free_their_slot(self):
        history = [
            request_in(RequestState.FAILED, hint_type=HintType.PLANNING, n=1)
        ]
        assert quota_slot_available(
            "s1", "a1-q1", HintType.PLANNING, QuotaPolicy(), history
        )

    def test_custom_limits_are_honoured(self):
        policy = QuotaPolicy({HintType.DEBUGGING: 1})
        assert policy.limit(HintType.DEBUGGING) == 1
        assert policy.limit(HintType.PLANNING) == 0
        assert not quota_slot_available(
            "s1", "a1-q1", HintType.PLANNING, policy, []
        )

    def test_negative_limits_are_rejected(self):
        with pytest.raises(ValueError):
            QuotaPolicy({HintType.PLANNING: -1})


class TestValueValidation:
    def test_hint_latency_must_be_non_negative(self):
        with pytest.raises(ValueError):
            Hint("hint-1", "req-1", "text", T0, -0.1)

    def test_escalation_timestamps_must_be_ordered(self):
        with pytest.raises(ValueError):
            Escalation("esc-1", "hint-1", "anon-1", None, T0, viewed_at=T0 - timedelta(seconds=1))
        with pytest.raises(ValueError):
            Escalation(
                "esc-1", "hint-1", "anon-1", None, T0,
                viewed_at=T0 + timedelta(minutes=2),
                resolved_at=T0 + timedelta(minutes=1),
            )

    def test_feedback_text_must_be_non_empty(self):
        with pytest.raises(ValueError):
            InstructorFeedback("fb-1", "esc-1", "inst-1", "   ", T0)
