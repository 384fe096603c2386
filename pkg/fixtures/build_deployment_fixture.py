"""Build the deployment fixture event log.

Drives a real ``HelpService`` through a scripted semester-scale workload and
writes the resulting append-only log to ``fixtures/deployment_log.ndjson``.
The script is fully deterministic (fixed epoch, counter-based ids, scripted
clock), so regenerating the fixture always reproduces the committed file
byte for byte.

The workload is sized so the analytics pipeline recovers the reference
deployment figures exactly:

* 82 consented students, 71 of whom request hints, 9 of whom escalate
* 673 delivered hints (planning 152 / debugging 431 / optimization 90)
* 146 unhelpful ratings (22 / 112 / 12) and 16 escalations, all debugging
* per-assignment request counts 101 / 134 / 202 / 236
* mean instructor wait 13.5 h (48 600 s), one case above 24 h
* mean post-view turnaround 1 068 s, mean generation latency 20.0 s
* activity during the wait window: coding 14/16, video 12/16,
  further hints 8/16, solved-before-feedback 4/16
* 46 annotated cases (16 escalated + 30 unhelpful-but-not-escalated)
  with the Incorrect / Uninformative / Misfocused / Unclear split of
  7+6 / 4+12 / 3+8 / 2+4 and feedback quality 7 High / 9 Low, of which
  the post-Incorrect cases grade 1 High / 6 Low

Usage::

    python3 fixtures/build_deployment_fixture.py [output.ndjson]
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from itertools import cycle
from pathlib import Path

from helploop import HelpService, HintType, Rating
from helploop.analytics import compute_report
from helploop.events import ActivityKind
from helploop.taxonomy import (
    BugType,
    FeedbackQuality,
    QualityLabel,
    UnhelpfulReason,
)

EPOCH = datetime(2026, 2, 2, 8, 0, tzinfo=timezone.utc)

ASSIGNMENTS = ("a1", "a2", "a3", "a4")
QUESTIONS_PER_ASSIGNMENT = 14
INSTRUCTOR = "inst-1"

# Requests per assignment and hint type (delivered == requested here: the
# scripted generation path never fails).
REQUESTS = {
    "a1": {HintType.PLANNING: 30, HintType.DEBUGGING: 55, HintType.OPTIMIZATION: 16},
    "a2": {HintType.PLANNING: 32, HintType.DEBUGGING: 86, HintType.OPTIMIZATION: 16},
    "a3": {HintType.PLANNING: 44, HintType.DEBUGGING: 130, HintType.OPTIMIZATION: 28},
    "a4": {HintType.PLANNING: 46, HintType.DEBUGGING: 160, HintType.OPTIMIZATION: 30},
}

# Unhelpful ratings per assignment and hint type.
UNHELPFUL = {
    "a1": {HintType.PLANNING: 5, HintType.DEBUGGING: 18, HintType.OPTIMIZATION: 3},
    "a2": {HintType.PLANNING: 5, HintType.DEBUGGING: 22, HintType.OPTIMIZATION: 3},
    "a3": {HintType.PLANNING: 6, HintType.DEBUGGING: 36, HintType.OPTIMIZATION: 3},
    "a4": {HintType.PLANNING: 6, HintType.DEBUGGING: 36, HintType.OPTIMIZATION: 3},
}

ESCALATIONS_PER_ASSIGNMENT = {"a1": 2, "a2": 3, "a3": 7, "a4": 4}
CONTRAST_PER_ASSIGNMENT = {"a1": 6, "a2": 7, "a3": 9, "a4": 8}

# Sixteen escalated cases owned by nine distinct students.
ESCALATION_OWNERS = (
    "s01", "s01",                                     # a1
    "s02", "s02", "s03",                              # a2
    "s03", "s04", "s04", "s05", "s05", "s06", "s06",  # a3
    "s07", "s07", "s08", "s09",                       # a4
)

# Thirty unhelpful-but-not-escalated debugging cases kept for contrast
# annotation, drawn from the same nine students.
CONTRAST_OWNERS = (
    "s01", "s01", "s01", "s01", "s02", "s02",                # a1 (6)
    "s02", "s02", "s03", "s03", "s03", "s03", "s04",         # a2 (7)
    "s04", "s04", "s05", "s05", "s05", "s06", "s06", "s06",  # a3 (9)
    "s07",                                                   # a3
    "s07", "s07", "s08", "s08", "s08", "s09", "s09", "s09",  # a4 (8)
)

# Instructor response waits per escalation, in hours.  Sum 216 h over 16
# cases gives a 13.5 h mean; exactly one case exceeds 24 h.
WAIT_HOURS = (6, 8, 9, 10, 11, 12, 12, 13, 13, 14, 14, 15, 16, 16, 17, 30)

# Seconds between first instructor view and the feedback submission.
# Sum 17 088 s over 16 cases gives a 1 068 s mean.
POST_VIEW_SECONDS = (
    300, 420, 480, 540, 600, 660, 780, 900,
    960, 1080, 1200, 1320, 1500, 1680, 1920, 2748,
)

# Which escalation windows contain which student activity (nested prefixes).
CODING_CASES = 14
VIDEO_CASES = 12
FURTHER_HINT_CASES = 8
SOLVED_CASES = 4

# Annotation reason splits, in case order (escalated, then contrast).
ESCALATED_REASONS = (
    (UnhelpfulReason.INCORRECT,) * 7
    + (UnhelpfulReason.UNINFORMATIVE,) * 4
    + (UnhelpfulReason.MISFOCUSED,) * 3
    + (UnhelpfulReason.UNCLEAR,) * 2
)
CONTRAST_REASONS = (
    (UnhelpfulReason.INCORRECT,) * 6
    + (UnhelpfulReason.UNINFORMATIVE,) * 12
    + (UnhelpfulReason.MISFOCUSED,) * 8
    + (UnhelpfulReason.UNCLEAR,) * 4
)

# Feedback quality per escalated case: the seven post-Incorrect cases grade
# 6 Low + 1 High, the remaining nine grade 6 High + 3 Low.
ESCALATED_QUALITY = (
    (QualityLabel.LOW,) * 6
    + (QualityLabel.HIGH,) * 7
    + (QualityLabel.LOW,) * 3
)

# Root-cause labels cycle through every category except suboptimal coding,
# which the deployment never observed among rated-unhelpful cases.
BUG_TYPE_CYCLE = (
    BugType.SEMANTIC_BUG,
    BugType.DATASET_MISUNDERSTANDING,
    BugType.TASK_MISUNDERSTANDING,
    BugType.MISSING_VALUE_MISHANDLING,
    BugType.LANGUAGE_ENVIRONMENT_BUG,
)


def consenting_students() -> list[str]:
    return [f"s{i:02d}" for i in range(1, 83)]


def background_students() -> list[str]:
    """Students who request hints but never escalate."""
    return [f"s{i:02d}" for i in range(10, 72)]


@dataclass(frozen=True)
class RequestSpec:
    student_id: str
    assignment_id: str
    hint_type: HintType
    rating: Rating
    escalation_index: int | None = None
    contrast_index: int | None = None


def build_request_specs() -> list[RequestSpec]:
    specs: list[RequestSpec] = []
    escalation_owner = iter(ESCALATION_OWNERS)
    contrast_owner = iter(CONTRAST_OWNERS)
    background = cycle(background_students())
    escalation_index = 0
    contrast_index = 0
    for assignment in ASSIGNMENTS:
        escalated = ESCALATIONS_PER_ASSIGNMENT[assignment]
        contrast = CONTRAST_PER_ASSIGNMENT[assignment]
        for _ in range(escalated):
            specs.append(
                RequestSpec(
                    next(escalation_owner),
                    assignment,
                    HintType.DEBUGGING,
                    Rating.UNHELPFUL,
                    escalation_index=escalation_index,
                )
            )
            escalation_index += 1
        for _ in range(contrast):
            specs.append(
                RequestSpec(
                    next(contrast_owner),
                    assignment,
                    HintType.DEBUGGING,
                    Rating.UNHELPFUL,
                    contrast_index=contrast_index,
                )
            )
            contrast_index += 1
        for hint_type in (HintType.DEBUGGING, HintType.PLANNING, HintType.OPTIMIZATION):
            unhelpful = UNHELPFUL[assignment][hint_type]
            if hint_type is HintType.DEBUGGING:
                unhelpful -= escalated + contrast
            helpful = REQUESTS[assignment][hint_type] - UNHELPFUL[assignment][hint_type]
            for _ in range(unhelpful):
                specs.append(
                    RequestSpec(next(background), assignment, hint_type, Rating.UNHELPFUL)
                )
            for _ in range(helpful):
                specs.append(
                    RequestSpec(next(background), assignment, hint_type, Rating.HELPFUL)
                )
    assert len(specs) == sum(sum(counts.values()) for counts in REQUESTS.values())
    return specs


class QuestionAllocator:
    """Hand out question ids so no (student, question) exceeds its quota."""

    def __init__(self) -> None:
        self._used: dict[tuple[str, str, HintType], int] = {}

    def question_for(self, student_id: str, assignment_id: str, hint_type: HintType) -> str:
        key = (student_id, assignment_id, hint_type)
        count = self._used.get(key, 0)
        self._used[key] = count + 1
        per_question = 3 if hint_type is HintType.DEBUGGING else 1
        index = count // per_question
        if index >= QUESTIONS_PER_ASSIGNMENT:
            raise AssertionError(f"question capacity exhausted for {key}")
        return f"{assignment_id}-q{index + 1:02d}"


class ScriptedClock:
    def __init__(self, start: datetime) -> None:
        self._now = start

    def now(self) -> datetime:
        return self._now

    def tick(self, seconds: float) -> datetime:
        self._now += timedelta(seconds=seconds)
        return self._now

    def jump(self, instant: datetime) -> datetime:
        if instant < self._now:
            raise AssertionError(f"clock may not move backwards: {instant} < {self._now}")
        self._now = instant
        return self._now


def counter_id_factory():
    counters: dict[str, int] = {}

    def factory(kind: str) -> str:
        counters[kind] = counters.get(kind, 0) + 1
        return f"{kind}-{counters[kind]:05d}"

    return factory


def generation_latency(delivery_index: int, total: int) -> float:
    """Alternate 18 s / 22 s, with a final 20 s hint pinning the mean at 20.0."""
    if delivery_index == total - 1:
        return 20.0
    return 18.0 if delivery_index % 2 == 0 else 22.0


def hint_text(spec: RequestSpec, delivery_index: int) -> str:
    topic = {
        HintType.PLANNING: "break the task into the load, clean, and aggregate steps",
        HintType.DEBUGGING: "re-check how the grouping column is selected before aggregating",
        HintType.OPTIMIZATION: "replace the row loop with a vectorised column operation",
    }[spec.hint_type]
    return f"Hint {delivery_index + 1}: {topic}."


def bug_types_for(case_index: int) -> list[BugType]:
    primary = BUG_TYPE_CYCLE[case_index % len(BUG_TYPE_CYCLE)]
    types = [primary]
    if case_index % 3 == 0 and primary is not BugType.SEMANTIC_BUG:
        types.append(BugType.SEMANTIC_BUG)
    return types


def build_fixture(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()

    clock = ScriptedClock(EPOCH)
    service = HelpService.open(
        path,
        clock=clock.now,
        id_factory=counter_id_factory(),
        lease_minutes=60,
        task_catalog={},
    )

    # Phase 1: consent, one student a minute.
    for student_id in consenting_students():
        service.record_consent(student_id)
        clock.tick(60)

    # Phase 2: the full request/generate/deliver/rate workload.
    specs = build_request_specs()
    questions = QuestionAllocator()
    escalation_hints: dict[int, tuple[str, RequestSpec, str]] = {}
    contrast_hints: dict[int, str] = {}
    for index, spec in enumerate(specs):
        question_id = questions.question_for(spec.student_id, spec.assignment_id, spec.hint_type)
        clock.tick(30)
        request = service.create_help_request(
            spec.student_id,
            spec.assignment_id,
            question_id,
            spec.hint_type,
            student_comment="My aggregation output looks wrong."
            if spec.hint_type is HintType.DEBUGGING
            else None,
            code_snapshot="df.groupby('col').mean()",
        )
        clock.tick(1)
        service.begin_generation(request.request_id)
        latency = generation_latency(index, len(specs))
        clock.tick(latency)
        hint = service.deliver_hint(request.request_id, hint_text(spec, index), latency)
        clock.tick(5)
        service.rate_hint(hint.hint_id, spec.rating)
        if spec.escalation_index is not None:
            escalation_hints[spec.escalation_index] = (hint.hint_id, spec, question_id)
        if spec.contrast_index is not None:
            contrast_hints[spec.contrast_index] = hint.hint_id

    # Phase 3: sequential escalation windows.  Each case is escalated, the
    # student is observed working during the wait, and the instructor views
    # and answers the case before the next one is opened.
    escalation_ids: list[str] = []
    window_start = clock.now() + timedelta(hours=1)
    for case in range(len(ESCALATION_OWNERS)):
        hint_id, spec, question_id = escalation_hints[case]
        clock.jump(window_start)
        escalation = service.escalate_hint(
            hint_id, student_note="The hint does not match the failure I am seeing."
        )
        escalation_ids.append(escalation.escalation_id)

        if case < CODING_CASES:
            clock.jump(window_start + timedelta(minutes=10))
            service.record_activity(spec.student_id, question_id, ActivityKind.CODING)
        if case < VIDEO_CASES:
            clock.jump(window_start + timedelta(hours=2))
            service.record_activity(spec.student_id, question_id, ActivityKind.VIDEO_WATCH)
        if case < FURTHER_HINT_CASES:
            clock.jump(window_start + timedelta(hours=3))
            service.record_activity(spec.student_id, question_id, ActivityKind.HINT_REQUEST)
        if case < SOLVED_CASES:
            clock.jump(window_start + timedelta(hours=4))
            service.record_activity(spec.student_id, question_id, ActivityKind.QUESTION_SOLVED)

        resolved_at = window_start + timedelta(hours=WAIT_HOURS[case])
        clock.jump(resolved_at - timedelta(seconds=POST_VIEW_SECONDS[case]))
        context = service.next_unresolved(INSTRUCTOR)
        assert context is not None
        assert context.escalation.escalation_id == escalation.escalation_id
        clock.jump(resolved_at)
        service.submit_feedback(
            INSTRUCTOR,
            escalation.escalation_id,
            "Your filter drops the rows you need; compare the group keys "
            "against the raw column values.",
        )
        window_start = resolved_at + timedelta(minutes=10)

    # Phase 4: the instructor annotates every escalated case and the thirty
    # contrast cases after the fact.
    clock.jump(window_start + timedelta(hours=1))
    for case, escalation_id in enumerate(escalation_ids):
        reason = ESCALATED_REASONS[case]
        label = ESCALATED_QUALITY[case]
        quality = FeedbackQuality(
            label=label,
            low_reasons=frozenset()
            if label is QualityLabel.HIGH
            else frozenset({UnhelpfulReason.UNINFORMATIVE}),
        )
        service.annotate_case(
            escalation_id,
            bug_types_for(case),
            [reason],
            quality,
            INSTRUCTOR,
        )
        clock.tick(30)
    for case in range(len(CONTRAST_OWNERS)):
        service.annotate_case(
            contrast_hints[case],
            bug_types_for(len(escalation_ids) + case),
            [CONTRAST_REASONS[case]],
            None,
            INSTRUCTOR,
        )
        clock.tick(30)

    state = service.state
    service.close()
    verify(state)


def verify(state) -> None:
    """Self-check: the log must reproduce the reference figures exactly."""
    report = compute_report(state)
    usage, waits, activity, notes = (
        report.usage,
        report.waits,
        report.activity,
        report.annotations,
    )
    assert usage.delivered == 673, usage.delivered
    assert usage.unhelpful == 146, usage.unhelpful
    assert usage.escalated == 16, usage.escalated
    assert usage.per_type[HintType.PLANNING].delivered == 152
    assert usage.per_type[HintType.DEBUGGING].delivered == 431
    assert usage.per_type[HintType.OPTIMIZATION].delivered == 90
    assert usage.per_type[HintType.DEBUGGING].unhelpful == 112
    assert usage.per_type[HintType.DEBUGGING].escalated == 16
    assert usage.per_type[HintType.PLANNING].escalated == 0
    assert usage.per_type[HintType.OPTIMIZATION].escalated == 0
    assert usage.per_assignment_requests == {"a1": 101, "a2": 134, "a3": 202, "a4": 236}
    assert usage.consented_students == 82
    assert usage.requesting_students == 71
    assert usage.escalating_students == 9
    assert waits.resolved_count == 16 and waits.open_count == 0
    assert waits.mean_wait_seconds == 48600.0, waits.mean_wait_seconds
    assert waits.median_wait_seconds == 46800.0, waits.median_wait_seconds
    assert waits.mean_post_view_seconds == 1068.0, waits.mean_post_view_seconds
    assert waits.mean_ai_latency_seconds == 20.0, waits.mean_ai_latency_seconds
    assert activity.measured == 16
    assert activity.coding_within_hour == 0.875, activity.coding_within_hour
    assert activity.video_during_wait == 0.75
    assert activity.further_hints_during_wait == 0.5
    assert activity.solved_before_feedback == 0.25
    assert notes.annotated_cases == 46 and notes.escalated_cases == 16
    incorrect = notes.reason_rates[UnhelpfulReason.INCORRECT]
    assert (incorrect.escalated, incorrect.total) == (7, 13)
    assert notes.feedback_high == 7 and notes.feedback_graded == 16
    assert (notes.post_incorrect_low, notes.post_incorrect_total) == (6, 7)
    for counts in notes.bug_type_counts.get(BugType.SUBOPTIMAL_CODING, {}).values():
        assert counts == 0


def main(argv: list[str]) -> int:
    target = Path(argv[1]) if len(argv) > 1 else Path(__file__).parent / "deployment_log.ndjson"
    build_fixture(target)
    line_count = sum(1 for _ in target.open())
    print(f"wrote {target} ({line_count} events)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
