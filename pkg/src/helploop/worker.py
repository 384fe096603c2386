"""Background hint generation, decoupled from the request path.

Clients get an immediate Created response and poll for status; a small
thread pool moves each request through Generating to Delivered or Failed.
"""

from __future__ import annotations

from concurrent.futures import Future, ThreadPoolExecutor

from .errors import HelpLoopError
from .events import EventKind, EventRecord
from .pipeline import Sandbox, generate_hint
from .providers import CompletionProvider, ProviderConfig
from .sandbox import SandboxLimits, execute_code
from .service import HelpService

__all__ = ["GenerationWorker"]


class GenerationWorker:
    def __init__(
        self,
        service: HelpService,
        provider: CompletionProvider,
        config: ProviderConfig | None = None,
        limits: SandboxLimits | None = None,
        sandbox: Sandbox = execute_code,
        max_workers: int = 2,
    ) -> None:
        self._service = service
        self._provider = provider
        self._config = config or ProviderConfig()
        self._limits = limits or SandboxLimits()
        self._sandbox = sandbox
        self._pool = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="helploop-gen"
        )

    def attach(self) -> None:
        """Generate for every future request created on the service."""
        self._service.subscribe(self._on_event)

    def _on_event(self, record: EventRecord) -> None:
        # Runs under the service lock: enqueue only, never call back in.
        if record.kind is EventKind.REQUEST_CREATED:
            self.submit(record.payload["request_id"])

    def submit(self, request_id: str) -> "Future[None]":
        return self._pool.submit(self.process, request_id)

    def process(self, request_id: str) -> None:
        """Run one request through the pipeline; errors mark it Failed."""
        request = self._service.begin_generation(request_id)
        try:
            draft = generate_hint(
                request,
                self._service.task_description(request.question_id),
                self._provider,
                sandbox=self._sandbox,
                config=self._config,
                limits=self._limits,
            )
        except HelpLoopError as exc:
            self._service.fail_generation(request_id, str(exc))
            return
        except Exception as exc:  # never leave a request stuck in Generating
            self._service.fail_generation(request_id, f"unexpected error: {exc}")
            return
        self._service.deliver_hint(request_id, draft.text, draft.generation_latency)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
