"""Annotation taxonomy for reviewed hint cases.

Instructors or analysts label escalated cases, and the matched set of
unhelpful-but-not-escalated cases, with the bug types present in the
student's code, the reasons the hint failed, and a quality grade for the
instructor feedback that followed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

__all__ = [
    "AnnotatedCase",
    "BugType",
    "FeedbackQuality",
    "QualityLabel",
    "UnhelpfulReason",
]


class BugType(str, Enum):
    """What was actually wrong in the student's submitted code.

    One code sample may carry several of these at once.
    """

    DATASET_MISUNDERSTANDING = "dataset_misunderstanding"
    TASK_MISUNDERSTANDING = "task_misunderstanding"
    MISSING_VALUE_MISHANDLING = "missing_value_mishandling"
    SEMANTIC_BUG = "semantic_bug"
    LANGUAGE_ENVIRONMENT_BUG = "language_environment_bug"
    SUBOPTIMAL_CODING = "suboptimal_coding"


class UnhelpfulReason(str, Enum):
    """Why a delivered hint failed the student."""

    INCORRECT = "incorrect"
    UNINFORMATIVE = "uninformative"
    MISFOCUSED = "misfocused"
    UNCLEAR = "unclear"


class QualityLabel(str, Enum):
    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class FeedbackQuality:
    """Grade for an instructor reply.

    High means every quality criterion was met, so reason tags exist exactly
    when the label is low.
    """

    label: QualityLabel
    low_reasons: frozenset[UnhelpfulReason] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.label is QualityLabel.HIGH and self.low_reasons:
            raise ValueError("high quality feedback cannot carry low-quality reasons")
        if self.label is QualityLabel.LOW and not self.low_reasons:
            raise ValueError("low quality feedback must name at least one reason")


@dataclass(frozen=True)
class AnnotatedCase:
    """One reviewed case: an escalation, or an unhelpful hint kept for contrast."""

    case_id: str
    hint_id: str
    escalation_id: str | None
    bug_types: frozenset[BugType]
    unhelpful_reasons: frozenset[UnhelpfulReason]
    feedback_quality: FeedbackQuality | None
    annotator: str
    annotated_at: datetime

    def __post_init__(self) -> None:
        if not self.unhelpful_reasons:
            raise ValueError("an annotated case needs at least one unhelpful reason")
        if self.escalation_id is None and self.feedback_quality is not None:
            raise ValueError("feedback quality only applies to escalated cases")
