"""Hint generation: stage routing, sandbox fallback, provider retries.

Debugging requests run the student's code first, then ask for a corrected
program, then ask for a hint about exactly one bug. Planning and optimization
requests are a single prompt each and never touch the sandbox. A broken
sandbox degrades the prompt (no execution output) instead of failing the
hint; a broken provider retries up to the configured count and then fails
the request, refunding the quota slot.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from .domain import HelpRequest, HintType
from .errors import ProviderError
from .prompts import PromptBundle, PromptStage, build_prompt
from .providers import CompletionProvider, ProviderConfig
from .sandbox import ExecutionResult, ExitStatus, SandboxLimits, execute_code

__all__ = ["HintDraft", "generate_hint", "render_execution"]

Sandbox = Callable[[str, SandboxLimits], ExecutionResult]


@dataclass(frozen=True)
class HintDraft:
    """Pipeline output: the hint text plus what happened along the way."""

    text: str
    generation_latency: float
    execution: ExecutionResult | None
    stages: tuple[PromptStage, ...]


def render_execution(result: ExecutionResult) -> str:
    return (
        f"exit status: {result.exit_status.value}\n"
        f"--- stdout ---\n{result.stdout}\n"
        f"--- stderr ---\n{result.stderr}"
    )


def _complete(
    provider: CompletionProvider, prompt: str, config: ProviderConfig
) -> str:
    attempts = config.max_retries + 1
    for attempt in range(attempts):
        try:
            return provider.complete(prompt)
        except ProviderError:
            if attempt + 1 == attempts:
                raise
    raise AssertionError("unreachable")


def generate_hint(
    request: HelpRequest,
    task_description: str,
    provider: CompletionProvider,
    sandbox: Sandbox = execute_code,
    config: ProviderConfig | None = None,
    limits: SandboxLimits | None = None,
) -> HintDraft:
    """Produce hint text for a request that is in the Generating state.

    Raises ProviderError/ProviderTimeout once retries are exhausted; the
    caller marks the request Failed. Sandbox trouble never raises: the
    debugging prompts are simply built without execution output.
    """
    config = config or ProviderConfig()
    limits = limits or SandboxLimits()
    started = time.monotonic()
    if request.hint_type is HintType.DEBUGGING:
        execution = sandbox(request.code_snapshot, limits)
        execution_output = (
            None
            if execution.exit_status is ExitStatus.SANDBOX_FAILURE
            else render_execution(execution)
        )
        fix_bundle = PromptBundle(
            stage=PromptStage.FIX_GENERATION,
            task_description=task_description,
            student_code=request.code_snapshot,
            student_comment=request.student_comment,
            execution_output=execution_output,
        )
        candidate_fix = _complete(
            provider, build_prompt(PromptStage.FIX_GENERATION, fix_bundle), config
        )
        hint_bundle = PromptBundle(
            stage=PromptStage.HINT_GENERATION,
            task_description=task_description,
            student_code=request.code_snapshot,
            student_comment=request.student_comment,
            execution_output=execution_output,
            candidate_fix=candidate_fix,
        )
        text = _complete(
            provider, build_prompt(PromptStage.HINT_GENERATION, hint_bundle), config
        )
        stages = (PromptStage.FIX_GENERATION, PromptStage.HINT_GENERATION)
    else:
        stage = (
            PromptStage.PLAN_GENERATION
            if request.hint_type is HintType.PLANNING
            else PromptStage.OPTIMIZATION_GENERATION
        )
        execution = None
        bundle = PromptBundle(
            stage=stage,
            task_description=task_description,
            student_code=request.code_snapshot,
            student_comment=request.student_comment,
        )
        text = _complete(provider, build_prompt(stage, bundle), config)
        stages = (stage,)
    return HintDraft(
        text=text,
        generation_latency=time.monotonic() - started,
        execution=execution,
        stages=stages,
    )
