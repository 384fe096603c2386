"""Generation pipeline: stage order, sandbox fallback, provider retries."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from helploop.domain import HelpRequest, HintType, RequestState
from helploop.errors import ProviderError
from helploop.pipeline import generate_hint, render_execution
from helploop.prompts import PromptStage
from helploop.providers import MockProvider, ProviderConfig
from helploop.sandbox import ExecutionResult, ExitStatus, SandboxLimits

T0 = datetime(2026, 3, 2, 9, 0, tzinfo=timezone.utc)


def request_of(hint_type: HintType) -> HelpRequest:
    return HelpRequest(
        request_id="req-1",
        student_id="s1",
        assignment_id="a1",
        question_id="a1-q1",
        hint_type=hint_type,
        student_comment="numbers look wrong",
        code_snapshot="print(df.sum())",
        created_at=T0,
        state=RequestState.GENERATING,
    )


def fake_sandbox(status=ExitStatus.OK, stdout="42\n", stderr=""):
    calls = []

    def run(code: str, limits: SandboxLimits) -> ExecutionResult:
        calls.append(code)
        return ExecutionResult(stdout, stderr, status, 0.01)

    run.calls = calls
    return run


def crashing_sandbox(code: str, limits: SandboxLimits) -> ExecutionResult:
    raise AssertionError("the sandbox must not run for this hint type")


class TestDebuggingPipeline:
    def test_runs_fix_then_hint_with_one_sandbox_execution(self):
        provider = MockProvider(seed=1)
        sandbox = fake_sandbox()
        draft = generate_hint(
            request_of(HintType.DEBUGGING), "Sum the rows.", provider, sandbox=sandbox
        )
        assert draft.stages == (PromptStage.FIX_GENERATION, PromptStage.HINT_GENERATION)
        assert sandbox.calls == ["print(df.sum())"]
        assert len(provider.calls) == 2
        assert provider.calls[0].startswith("[stage: fix_generation]")
        assert provider.calls[1].startswith("[stage: hint_generation]")
        assert draft.text.startswith("HINT: deterministic completion ")
        assert draft.generation_latency >= 0

    def test_candidate_fix_feeds_the_hint_prompt(self):
        provider = MockProvider(seed=1)
        draft = generate_hint(
            request_of(HintType.DEBUGGING), "Sum the rows.", provider,
            sandbox=fake_sandbox(),
        )
        fix_completion = provider.complete(provider.calls[0])  # same prompt, same bytes
        assert fix_completion in provider.calls[1]
        assert draft.execution is not None

    def test_execution_output_lands_in_both_prompts(self):
        provider = MockProvider(seed=1)
        generate_hint(
            request_of(HintType.DEBUGGING), "Sum the rows.", provider,
            sandbox=fake_sandbox(stderr="KeyError: 'missing'", status=ExitStatus.ERROR),
        )
        for prompt in provider.calls[:2]:
            assert "exit status: error" in prompt
            assert "KeyError: 'missing'" in prompt

    def test_sandbox_failure_degrades_to_no_execution_output(self):
        provider = MockProvider(seed=1)
        draft = generate_hint(
            request_of(HintType.DEBUGGING), "Sum the rows.", provider,
            sandbox=fake_sandbox(status=ExitStatus.SANDBOX_FAILURE, stdout="", stderr="broken"),
        )
        assert draft.text.startswith("HINT:")  # the hint still gets generated
        for prompt in provider.calls:
            assert "(execution output unavailable)" in prompt

    def test_deterministic_for_identical_inputs(self):
        run = lambda: generate_hint(
            request_of(HintType.DEBUGGING), "Sum the rows.", MockProvider(seed=9),
            sandbox=fake_sandbox(),
        ).text
        assert run() == run()


class TestSinglePromptPipelines:
    def test_planning_is_one_prompt_and_never_touches_the_sandbox(self):
        provider = MockProvider(seed=1)
        draft = generate_hint(
            request_of(HintType.PLANNING), "Sum the rows.", provider,
            sandbox=crashing_sandbox,
        )
        assert draft.stages == (PromptStage.PLAN_GENERATION,)
        assert draft.execution is None
        assert draft.text.startswith("PLAN:")
        assert len(provider.calls) == 1

    def test_optimization_is_one_prompt_and_never_touches_the_sandbox(self):
        provider = MockProvider(seed=1)
        draft = generate_hint(
            request_of(HintType.OPTIMIZATION), "Sum the rows.", provider,
            sandbox=crashing_sandbox,
        )
        assert draft.stages == (PromptStage.OPTIMIZATION_GENERATION,)
        assert draft.execution is None
        assert draft.text.startswith("OPT:")


class TestRetries:
    def test_one_retry_then_success(self):
        provider = MockProvider(seed=1, fail_first=1)
        draft = generate_hint(
            request_of(HintType.PLANNING), "Sum the rows.", provider,
            config=ProviderConfig(max_retries=1),
        )
        assert draft.text.startswith("PLAN:")
        assert len(provider.calls) == 2  # first failed, retry succeeded

    def test_retries_exhausted_raises_to_the_caller(self):
        provider = MockProvider(seed=1, fail_first=2)
        with pytest.raises(ProviderError):
            generate_hint(
                request_of(HintType.PLANNING), "Sum the rows.", provider,
                config=ProviderConfig(max_retries=1),
            )
        assert len(provider.calls) == 2  # initial call plus exactly one retry

    def test_zero_retries_fails_on_first_error(self):
        provider = MockProvider(seed=1, fail_first=1)
        with pytest.raises(ProviderError):
            generate_hint(
                request_of(HintType.PLANNING), "Sum the rows.", provider,
                config=ProviderConfig(max_retries=0),
            )
        assert len(provider.calls) == 1


class TestRenderExecution:
    def test_renders_status_and_both_streams(self):
        result = ExecutionResult("out\n", "err\n", ExitStatus.ERROR, 0.5)
        text = render_execution(result)
        assert text == "exit status: error\n--- stdout ---\nout\n\n--- stderr ---\nerr\n"
