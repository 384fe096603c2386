"""Prompt assembly from plain-text templates.

Each pipeline stage has a template file shipped with the package. The first
template line is a ``[stage: ...]`` marker so tests (and the deterministic
mock provider) can recognize which stage produced a prompt. Assembly is pure
string substitution: same bundle, same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from string import Template

from .errors import InconsistentBundle, MissingField

__all__ = ["PromptBundle", "PromptStage", "build_prompt"]


class PromptStage(str, Enum):
    FIX_GENERATION = "fix_generation"
    HINT_GENERATION = "hint_generation"
    PLAN_GENERATION = "plan_generation"
    OPTIMIZATION_GENERATION = "optimization_generation"


# Only the two debugging stages may carry execution output, and only the
# hint stage consumes a candidate fix.
_DEBUGGING_STAGES = frozenset(
    {PromptStage.FIX_GENERATION, PromptStage.HINT_GENERATION}
)


@dataclass(frozen=True)
class PromptBundle:
    """Everything a stage may see. Deliberately excludes student identity."""

    stage: PromptStage
    task_description: str | None
    student_code: str | None
    student_comment: str | None = None
    execution_output: str | None = None
    candidate_fix: str | None = None


@lru_cache(maxsize=None)
def _template(stage: PromptStage) -> Template:
    text = (
        resources.files("helploop")
        .joinpath(f"templates/{stage.value}.txt")
        .read_text(encoding="utf-8")
    )
    return Template(text)


def build_prompt(stage: PromptStage, bundle: PromptBundle) -> str:
    """Render the stage template; raises on fields that contradict the stage."""
    if bundle.stage is not stage:
        raise InconsistentBundle(
            f"bundle is for stage {bundle.stage.value}, not {stage.value}"
        )
    if bundle.execution_output is not None and stage not in _DEBUGGING_STAGES:
        raise InconsistentBundle(
            f"execution output does not belong in a {stage.value} prompt"
        )
    if bundle.candidate_fix is not None and stage is not PromptStage.HINT_GENERATION:
        raise InconsistentBundle(
            f"candidate fix does not belong in a {stage.value} prompt"
        )
    if bundle.task_description is None:
        raise MissingField(f"{stage.value} prompt needs a task description")
    if bundle.student_code is None:
        raise MissingField(f"{stage.value} prompt needs the student code")
    if stage is PromptStage.HINT_GENERATION and bundle.candidate_fix is None:
        raise MissingField("hint_generation prompt needs a candidate fix")
    return _template(stage).substitute(
        task_description=bundle.task_description,
        student_code=bundle.student_code,
        student_comment=bundle.student_comment or "(no comment provided)",
        execution_output=bundle.execution_output or "(execution output unavailable)",
        candidate_fix=bundle.candidate_fix or "",
    )
