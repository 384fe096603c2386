"""Deployment metrics recomputed from event logs.

Everything here is a pure function of a replayed ``ServiceState``: usage
tallies per hint type and assignment, escalation wait-time statistics,
what students did while waiting, and aggregates over the manual case
annotations. Rates are kept as raw fractions in [0, 1]; rendering to
"22%"-style figures happens only at the presentation edge.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from statistics import median
from typing import Any

from .domain import HintType, Rating
from .errors import CorruptLog, IoFailure
from .events import ActivityKind
from .state import ServiceState
from .store import replay
from .taxonomy import BugType, QualityLabel, UnhelpfulReason

__all__ = [
    "ActivityDuringWait",
    "AnalyticsReport",
    "AnnotationStats",
    "EscalationTimeline",
    "ReasonRate",
    "TypeUsage",
    "UsageStats",
    "WaitStats",
    "compute_activity_during_wait",
    "compute_annotation_stats",
    "compute_report",
    "compute_usage_stats",
    "compute_wait_stats",
    "emit_report",
    "percent_text",
    "rounded_percent",
    "write_report",
]

CODING_WINDOW = timedelta(hours=1)


def _as_state(source: ServiceState | str | Path) -> ServiceState:
    if isinstance(source, ServiceState):
        return source
    return replay(source)


def _rate(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def rounded_percent(rate: float | None) -> int | None:
    """Nearest integer percent, half rounding up (0.4375 -> 44)."""
    if rate is None:
        return None
    return int(
        Decimal(str(rate * 100)).quantize(Decimal("1"), rounding=ROUND_HALF_UP)
    )


def percent_text(rate: float | None) -> str:
    return "n/a" if rate is None else f"{rate * 100:.1f}%"


# -- usage -----------------------------------------------------------------


@dataclass(frozen=True)
class TypeUsage:
    requested: int
    delivered: int
    unhelpful: int
    escalated: int


@dataclass(frozen=True)
class UsageStats:
    per_type: dict[HintType, TypeUsage]
    per_assignment_requests: dict[str, int]
    per_assignment_share: dict[str, float]
    requested: int
    delivered: int
    unhelpful: int
    escalated: int
    unhelpful_rate: float | None
    escalation_rate_of_unhelpful: float | None
    consented_students: int
    requesting_students: int
    escalating_students: int


def compute_usage_stats(source: ServiceState | str | Path) -> UsageStats:
    state = _as_state(source)
    requested = {t: 0 for t in HintType}
    delivered = {t: 0 for t in HintType}
    unhelpful = {t: 0 for t in HintType}
    escalated = {t: 0 for t in HintType}
    per_assignment: dict[str, int] = {}
    requesting: set[str] = set()
    for request in state.requests.values():
        requested[request.hint_type] += 1
        per_assignment[request.assignment_id] = (
            per_assignment.get(request.assignment_id, 0) + 1
        )
        requesting.add(request.student_id)
    for hint in state.hints.values():
        hint_type = state.requests[hint.request_id].hint_type
        delivered[hint_type] += 1
        if hint.rating is Rating.UNHELPFUL:
            unhelpful[hint_type] += 1
    escalating: set[str] = set()
    for escalation in state.escalations.values():
        request = state.request_for_hint(escalation.hint_id)
        escalated[request.hint_type] += 1
        escalating.add(request.student_id)
    for hint_type in HintType:
        chain = (
            escalated[hint_type],
            unhelpful[hint_type],
            delivered[hint_type],
            requested[hint_type],
        )
        if not (chain[0] <= chain[1] <= chain[2] <= chain[3]):
            raise CorruptLog(
                f"conservation violated for {hint_type.value}: "
                f"escalated {chain[0]} <= unhelpful {chain[1]} <= "
                f"delivered {chain[2]} <= requested {chain[3]} does not hold"
            )
    total_requested = sum(requested.values())
    total_delivered = sum(delivered.values())
    total_unhelpful = sum(unhelpful.values())
    total_escalated = sum(escalated.values())
    return UsageStats(
        per_type={
            t: TypeUsage(requested[t], delivered[t], unhelpful[t], escalated[t])
            for t in HintType
        },
        per_assignment_requests=dict(sorted(per_assignment.items())),
        per_assignment_share={
            assignment: count / total_requested
            for assignment, count in sorted(per_assignment.items())
        }
        if total_requested
        else {},
        requested=total_requested,
        delivered=total_delivered,
        unhelpful=total_unhelpful,
        escalated=total_escalated,
        unhelpful_rate=_rate(total_unhelpful, total_delivered),
        escalation_rate_of_unhelpful=_rate(total_escalated, total_unhelpful),
        consented_students=len(state.students),
        requesting_students=len(requesting),
        escalating_students=len(escalating),
    )


# -- waits -------------------------------------------------------------------


@dataclass(frozen=True)
class WaitStats:
    resolved_count: int
    open_count: int
    mean_wait_seconds: float | None
    median_wait_seconds: float | None
    mean_post_view_seconds: float | None
    mean_ai_latency_seconds: float | None


def compute_wait_stats(source: ServiceState | str | Path) -> WaitStats:
    state = _as_state(source)
    waits: list[float] = []
    post_views: list[float] = []
    open_count = 0
    for escalation in state.escalations.values():
        if escalation.resolved_at is None:
            open_count += 1
            continue
        waits.append((escalation.resolved_at - escalation.created_at).total_seconds())
        if escalation.viewed_at is not None:
            post_views.append(
                (escalation.resolved_at - escalation.viewed_at).total_seconds()
            )
    latencies = [hint.generation_latency for hint in state.hints.values()]
    return WaitStats(
        resolved_count=len(waits),
        open_count=open_count,
        mean_wait_seconds=sum(waits) / len(waits) if waits else None,
        median_wait_seconds=float(median(waits)) if waits else None,
        mean_post_view_seconds=(
            sum(post_views) / len(post_views) if post_views else None
        ),
        mean_ai_latency_seconds=(
            sum(latencies) / len(latencies) if latencies else None
        ),
    )


# -- activity during the wait --------------------------------------------------


@dataclass(frozen=True)
class EscalationTimeline:
    """First occurrence of each activity inside one escalation's wait window.

    Offsets are seconds from the escalation instant; None means the activity
    never happened before feedback arrived.
    """

    escalation_id: str
    waited_seconds: float | None
    first_coding: float | None
    first_video: float | None
    first_further_hint: float | None
    solved_at: float | None


@dataclass(frozen=True)
class ActivityDuringWait:
    timelines: tuple[EscalationTimeline, ...]
    measured: int
    coding_within_hour: float | None
    video_during_wait: float | None
    further_hints_during_wait: float | None
    solved_before_feedback: float | None


def _first_activity(
    state: ServiceState,
    student_id: str,
    question_id: str | None,
    kind: ActivityKind,
    start: datetime,
    end: datetime | None,
) -> float | None:
    best: datetime | None = None
    for activity in state.activities:
        if activity.activity is not kind or activity.student_id != student_id:
            continue
        if question_id is not None and activity.question_id != question_id:
            continue
        if activity.at < start or (end is not None and activity.at > end):
            continue
        if best is None or activity.at < best:
            best = activity.at
    return (best - start).total_seconds() if best is not None else None


def compute_activity_during_wait(
    source: ServiceState | str | Path,
) -> ActivityDuringWait:
    state = _as_state(source)
    timelines: list[EscalationTimeline] = []
    ordered = sorted(
        state.escalations.values(),
        key=lambda esc: state.escalation_seq[esc.escalation_id],
    )
    for escalation in ordered:
        request = state.request_for_hint(escalation.hint_id)
        start = escalation.created_at
        end = escalation.resolved_at
        timelines.append(
            EscalationTimeline(
                escalation_id=escalation.escalation_id,
                waited_seconds=(
                    (end - start).total_seconds() if end is not None else None
                ),
                first_coding=_first_activity(
                    state, request.student_id, None, ActivityKind.CODING, start, end
                ),
                first_video=_first_activity(
                    state, request.student_id, None, ActivityKind.VIDEO_WATCH, start, end
                ),
                first_further_hint=_first_activity(
                    state, request.student_id, None, ActivityKind.HINT_REQUEST, start, end
                ),
                solved_at=_first_activity(
                    state,
                    request.student_id,
                    request.question_id,
                    ActivityKind.QUESTION_SOLVED,
                    start,
                    end,
                ),
            )
        )
    # Fractions are over escalations whose wait has concluded; an open window
    # cannot yet say what the student did "while waiting".
    closed = [t for t in timelines if t.waited_seconds is not None]
    measured = len(closed)
    window = CODING_WINDOW.total_seconds()
    coding = sum(1 for t in closed if t.first_coding is not None and t.first_coding <= window)
    video = sum(1 for t in closed if t.first_video is not None)
    further = sum(1 for t in closed if t.first_further_hint is not None)
    solved = sum(1 for t in closed if t.solved_at is not None)
    return ActivityDuringWait(
        timelines=tuple(timelines),
        measured=measured,
        coding_within_hour=_rate(coding, measured),
        video_during_wait=_rate(video, measured),
        further_hints_during_wait=_rate(further, measured),
        solved_before_feedback=_rate(solved, measured),
    )


# -- annotations -----------------------------------------------------------------


@dataclass(frozen=True)
class ReasonRate:
    escalated: int
    total: int
    rate: float | None


@dataclass(frozen=True)
class AnnotationStats:
    annotated_cases: int
    escalated_cases: int
    reason_rates: dict[UnhelpfulReason, ReasonRate]
    bug_type_counts: dict[BugType, dict[str, int]]
    feedback_high: int
    feedback_graded: int
    feedback_high_rate: float | None
    post_incorrect_low: int
    post_incorrect_total: int
    post_incorrect_low_rate: float | None


def compute_annotation_stats(source: ServiceState | str | Path) -> AnnotationStats:
    state = _as_state(source)
    cases = list(state.annotations.values())
    escalated_cases = [c for c in cases if c.escalation_id is not None]
    reason_rates: dict[UnhelpfulReason, ReasonRate] = {}
    for reason in UnhelpfulReason:
        with_reason = [c for c in cases if reason in c.unhelpful_reasons]
        escalated = sum(1 for c in with_reason if c.escalation_id is not None)
        reason_rates[reason] = ReasonRate(
            escalated=escalated,
            total=len(with_reason),
            rate=_rate(escalated, len(with_reason)),
        )
    bug_type_counts = {
        bug: {
            "escalated": sum(
                1
                for c in cases
                if bug in c.bug_types and c.escalation_id is not None
            ),
            "non_escalated": sum(
                1 for c in cases if bug in c.bug_types and c.escalation_id is None
            ),
        }
        for bug in BugType
    }
    graded = [c for c in cases if c.feedback_quality is not None]
    high = sum(1 for c in graded if c.feedback_quality.label is QualityLabel.HIGH)
    post_incorrect = [
        c for c in escalated_cases if UnhelpfulReason.INCORRECT in c.unhelpful_reasons
    ]
    post_incorrect_low = sum(
        1
        for c in post_incorrect
        if c.feedback_quality is not None
        and c.feedback_quality.label is QualityLabel.LOW
    )
    return AnnotationStats(
        annotated_cases=len(cases),
        escalated_cases=len(escalated_cases),
        reason_rates=reason_rates,
        bug_type_counts=bug_type_counts,
        feedback_high=high,
        feedback_graded=len(graded),
        feedback_high_rate=_rate(high, len(graded)),
        post_incorrect_low=post_incorrect_low,
        post_incorrect_total=len(post_incorrect),
        post_incorrect_low_rate=_rate(post_incorrect_low, len(post_incorrect)),
    )


# -- the full report -----------------------------------------------------------


@dataclass(frozen=True)
class AnalyticsReport:
    usage: UsageStats
    waits: WaitStats
    activity: ActivityDuringWait
    annotations: AnnotationStats

    def to_dict(self) -> dict[str, Any]:
        return {
            "usage": {
                "per_type": {
                    t.value: asdict(usage)
                    for t, usage in self.usage.per_type.items()
                },
                "per_assignment_requests": self.usage.per_assignment_requests,
                "per_assignment_share": self.usage.per_assignment_share,
                "requested": self.usage.requested,
                "delivered": self.usage.delivered,
                "unhelpful": self.usage.unhelpful,
                "escalated": self.usage.escalated,
                "unhelpful_rate": self.usage.unhelpful_rate,
                "escalation_rate_of_unhelpful": self.usage.escalation_rate_of_unhelpful,
                "consented_students": self.usage.consented_students,
                "requesting_students": self.usage.requesting_students,
                "escalating_students": self.usage.escalating_students,
            },
            "waits": asdict(self.waits),
            "activity": {
                "timelines": [asdict(t) for t in self.activity.timelines],
                "measured": self.activity.measured,
                "coding_within_hour": self.activity.coding_within_hour,
                "video_during_wait": self.activity.video_during_wait,
                "further_hints_during_wait": self.activity.further_hints_during_wait,
                "solved_before_feedback": self.activity.solved_before_feedback,
            },
            "annotations": {
                "annotated_cases": self.annotations.annotated_cases,
                "escalated_cases": self.annotations.escalated_cases,
                "reason_rates": {
                    reason.value: asdict(rate)
                    for reason, rate in self.annotations.reason_rates.items()
                },
                "bug_type_counts": {
                    bug.value: counts
                    for bug, counts in self.annotations.bug_type_counts.items()
                },
                "feedback_high": self.annotations.feedback_high,
                "feedback_graded": self.annotations.feedback_graded,
                "feedback_high_rate": self.annotations.feedback_high_rate,
                "post_incorrect_low": self.annotations.post_incorrect_low,
                "post_incorrect_total": self.annotations.post_incorrect_total,
                "post_incorrect_low_rate": self.annotations.post_incorrect_low_rate,
            },
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "AnalyticsReport":
        u = raw["usage"]
        usage = UsageStats(
            per_type={
                HintType(key): TypeUsage(**value)
                for key, value in u["per_type"].items()
            },
            per_assignment_requests=dict(u["per_assignment_requests"]),
            per_assignment_share=dict(u["per_assignment_share"]),
            requested=u["requested"],
            delivered=u["delivered"],
            unhelpful=u["unhelpful"],
            escalated=u["escalated"],
            unhelpful_rate=u["unhelpful_rate"],
            escalation_rate_of_unhelpful=u["escalation_rate_of_unhelpful"],
            consented_students=u["consented_students"],
            requesting_students=u["requesting_students"],
            escalating_students=u["escalating_students"],
        )
        waits = WaitStats(**raw["waits"])
        a = raw["activity"]
        activity = ActivityDuringWait(
            timelines=tuple(EscalationTimeline(**t) for t in a["timelines"]),
            measured=a["measured"],
            coding_within_hour=a["coding_within_hour"],
            video_during_wait=a["video_during_wait"],
            further_hints_during_wait=a["further_hints_during_wait"],
            solved_before_feedback=a["solved_before_feedback"],
        )
        n = raw["annotations"]
        annotations = AnnotationStats(
            annotated_cases=n["annotated_cases"],
            escalated_cases=n["escalated_cases"],
            reason_rates={
                UnhelpfulReason(key): ReasonRate(**value)
                for key, value in n["reason_rates"].items()
            },
            bug_type_counts={
                BugType(key): dict(value)
                for key, value in n["bug_type_counts"].items()
            },
            feedback_high=n["feedback_high"],
            feedback_graded=n["feedback_graded"],
            feedback_high_rate=n["feedback_high_rate"],
            post_incorrect_low=n["post_incorrect_low"],
            post_incorrect_total=n["post_incorrect_total"],
            post_incorrect_low_rate=n["post_incorrect_low_rate"],
        )
        return cls(usage=usage, waits=waits, activity=activity, annotations=annotations)


def compute_report(source: ServiceState | str | Path) -> AnalyticsReport:
    state = _as_state(source)
    return AnalyticsReport(
        usage=compute_usage_stats(state),
        waits=compute_wait_stats(state),
        activity=compute_activity_during_wait(state),
        annotations=compute_annotation_stats(state),
    )


def _hours(seconds: float | None) -> str:
    return "n/a" if seconds is None else f"{seconds / 3600:.2f} h"


def _minutes(seconds: float | None) -> str:
    return "n/a" if seconds is None else f"{seconds / 60:.1f} min"


def _count_rate(numerator: int, denominator: int, rate: float | None) -> str:
    return f"{numerator}/{denominator} = {percent_text(rate)}"


def render_text(report: AnalyticsReport) -> str:
    usage, waits = report.usage, report.waits
    activity, notes = report.activity, report.annotations
    lines: list[str] = []
    lines.append("helploop analytics report")
    lines.append("")
    lines.append("usage")
    header = f"{'type':<14}{'requested':>10}{'delivered':>10}{'unhelpful':>10}{'unhelpful%':>12}{'escalated':>10}"
    lines.append("  " + header)
    for hint_type in HintType:
        t = usage.per_type[hint_type]
        share = percent_text(_rate(t.unhelpful, t.delivered))
        lines.append(
            "  "
            + f"{hint_type.value:<14}{t.requested:>10}{t.delivered:>10}"
            + f"{t.unhelpful:>10}{share:>12}{t.escalated:>10}"
        )
    lines.append(
        "  "
        + f"{'total':<14}{usage.requested:>10}{usage.delivered:>10}"
        + f"{usage.unhelpful:>10}{percent_text(usage.unhelpful_rate):>12}{usage.escalated:>10}"
    )
    lines.append("")
    lines.append("requests by assignment")
    for assignment, count in usage.per_assignment_requests.items():
        share = usage.per_assignment_share.get(assignment)
        lines.append(f"  {assignment:<14}{count:>10}{percent_text(share):>12}")
    lines.append("")
    lines.append(
        f"students: consented {usage.consented_students}, "
        f"requesting {usage.requesting_students}, "
        f"escalating {usage.escalating_students}"
    )
    lines.append(
        "unhelpful rate: "
        + _count_rate(usage.unhelpful, usage.delivered, usage.unhelpful_rate)
    )
    lines.append(
        "escalation rate among unhelpful: "
        + _count_rate(usage.escalated, usage.unhelpful, usage.escalation_rate_of_unhelpful)
    )
    lines.append("")
    lines.append("waits")
    lines.append(
        f"  resolved escalations: {waits.resolved_count} (open: {waits.open_count})"
    )
    lines.append(
        f"  mean wait: "
        + (
            "n/a"
            if waits.mean_wait_seconds is None
            else f"{waits.mean_wait_seconds:.1f} s ({_hours(waits.mean_wait_seconds)})"
        )
    )
    lines.append(
        f"  median wait: "
        + (
            "n/a"
            if waits.median_wait_seconds is None
            else f"{waits.median_wait_seconds:.1f} s ({_hours(waits.median_wait_seconds)})"
        )
    )
    lines.append(
        f"  mean post-view: "
        + (
            "n/a"
            if waits.mean_post_view_seconds is None
            else f"{waits.mean_post_view_seconds:.1f} s ({_minutes(waits.mean_post_view_seconds)})"
        )
    )
    lines.append(
        f"  mean AI latency: "
        + (
            "n/a"
            if waits.mean_ai_latency_seconds is None
            else f"{waits.mean_ai_latency_seconds:.1f} s"
        )
    )
    lines.append("")
    lines.append(f"activity while waiting (over {activity.measured} resolved)")
    lines.append(
        f"  coding within first hour: {percent_text(activity.coding_within_hour)}"
    )
    lines.append(
        f"  watched videos: {percent_text(activity.video_during_wait)}"
    )
    lines.append(
        f"  requested further AI hints: {percent_text(activity.further_hints_during_wait)}"
    )
    lines.append(
        f"  solved before feedback: {percent_text(activity.solved_before_feedback)}"
    )
    lines.append("")
    lines.append(
        f"annotations ({notes.annotated_cases} cases: "
        f"{notes.escalated_cases} escalated, "
        f"{notes.annotated_cases - notes.escalated_cases} non-escalated)"
    )
    lines.append("  escalation rate by reason:")
    for reason in UnhelpfulReason:
        rr = notes.reason_rates[reason]
        lines.append(
            f"    {reason.value:<15}" + _count_rate(rr.escalated, rr.total, rr.rate)
        )
    lines.append(
        "  feedback high quality: "
        + _count_rate(notes.feedback_high, notes.feedback_graded, notes.feedback_high_rate)
    )
    lines.append(
        "  low-quality feedback after incorrect hints: "
        + _count_rate(
            notes.post_incorrect_low,
            notes.post_incorrect_total,
            notes.post_incorrect_low_rate,
        )
    )
    lines.append("  bug types (escalated / non-escalated):")
    for bug in BugType:
        counts = notes.bug_type_counts[bug]
        lines.append(
            f"    {bug.value:<28}{counts['escalated']:>4} / {counts['non_escalated']:>4}"
        )
    lines.append("")
    return "\n".join(lines)


def emit_report(report: AnalyticsReport, format: str = "text") -> str:
    """Serialize deterministically; the JSON variant round-trips exactly."""
    if format == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if format == "text":
        return render_text(report)
    raise ValueError(f"unknown report format: {format!r}")


def write_report(report: AnalyticsReport, path: str | Path, format: str = "text") -> None:
    try:
        Path(path).write_text(emit_report(report, format), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc
