"""YAML service configuration.

Everything an operator tunes lives here: listen address, log location,
quota limits, provider and sandbox settings, role tokens, notifier wiring,
task descriptions, and the student-facing interface copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .domain import DEFAULT_LIMITS, HintType, QuotaPolicy
from .providers import ProviderConfig, ProviderKind
from .queue import DEFAULT_LEASE_MINUTES
from .sandbox import SandboxLimits

__all__ = ["ServiceConfig", "DEFAULT_UI_COPY", "load_config"]

# Shown verbatim by clients; editable without touching code.
DEFAULT_UI_COPY: dict[str, str] = {
    "generation_notice": "AI hints may take up to two minutes to generate.",
    "escalation_notice": (
        "Escalations are anonymous. An instructor will respond within 24 hours."
    ),
    "planning_description": (
        "Planning: get a strategy outline for approaching the question."
    ),
    "debugging_description": (
        "Debugging: get a pointer to one bug in your current code."
    ),
    "optimization_description": (
        "Optimization: get one suggestion to improve working code."
    ),
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    log_path: str = "var/events.ndjson"
    snapshot_path: str | None = None
    quota: QuotaPolicy = field(default_factory=QuotaPolicy)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    sandbox: SandboxLimits = field(default_factory=SandboxLimits)
    lease_minutes: int = DEFAULT_LEASE_MINUTES
    generation_workers: int = 2
    student_tokens: dict[str, str] = field(default_factory=dict)
    instructor_tokens: dict[str, str] = field(default_factory=dict)
    ingest_tokens: list[str] = field(default_factory=list)
    notifier_kind: str = "log"
    notification_retries: int = 2
    smtp_host: str = "localhost"
    smtp_port: int = 25
    smtp_sender: str = "helploop@localhost"
    instructor_addresses: list[str] = field(default_factory=list)
    student_addresses: dict[str, str] = field(default_factory=dict)
    # When true, feedback shown to students includes the instructor id.
    attribution: bool = False
    tasks: dict[str, str] = field(default_factory=dict)
    ui_copy: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_UI_COPY))


def _quota_from(raw: dict[str, Any] | None) -> QuotaPolicy:
    if not raw:
        return QuotaPolicy()
    limits = dict(DEFAULT_LIMITS)
    for key, value in raw.items():
        limits[HintType(key)] = int(value)
    return QuotaPolicy(per_question_limits=limits)


def _provider_from(raw: dict[str, Any] | None) -> ProviderConfig:
    if not raw:
        return ProviderConfig()
    return ProviderConfig(
        provider_kind=ProviderKind(raw.get("kind", "mock")),
        endpoint=raw.get("endpoint"),
        model_name=raw.get("model_name", "mock-model"),
        timeout=float(raw.get("timeout", 120.0)),
        max_retries=int(raw.get("max_retries", 1)),
        mock_seed=int(raw.get("mock_seed", 0)),
    )


def _sandbox_from(raw: dict[str, Any] | None) -> SandboxLimits:
    if not raw:
        return SandboxLimits()
    return SandboxLimits(
        wall_time_seconds=float(raw.get("wall_time_seconds", 5.0)),
        cpu_seconds=int(raw.get("cpu_seconds", 5)),
        memory_bytes=int(raw.get("memory_bytes", 256 * 1024 * 1024)),
        max_file_bytes=int(raw.get("max_file_bytes", 1024 * 1024)),
    )


def load_config(path: str | Path) -> ServiceConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    listen = raw.get("listen") or {}
    notifier = raw.get("notifier") or {}
    copy = dict(DEFAULT_UI_COPY)
    copy.update(raw.get("ui_copy") or {})
    return ServiceConfig(
        host=listen.get("host", "127.0.0.1"),
        port=int(listen.get("port", 8000)),
        log_path=raw.get("log_path", "var/events.ndjson"),
        snapshot_path=raw.get("snapshot_path"),
        quota=_quota_from(raw.get("quota")),
        provider=_provider_from(raw.get("provider")),
        sandbox=_sandbox_from(raw.get("sandbox")),
        lease_minutes=int(raw.get("lease_minutes", DEFAULT_LEASE_MINUTES)),
        generation_workers=int(raw.get("generation_workers", 2)),
        student_tokens=dict(raw.get("student_tokens") or {}),
        instructor_tokens=dict(raw.get("instructor_tokens") or {}),
        ingest_tokens=list(raw.get("ingest_tokens") or []),
        notifier_kind=notifier.get("kind", "log"),
        notification_retries=int(notifier.get("retries", 2)),
        smtp_host=notifier.get("smtp_host", "localhost"),
        smtp_port=int(notifier.get("smtp_port", 25)),
        smtp_sender=notifier.get("sender", "helploop@localhost"),
        instructor_addresses=list(notifier.get("instructor_addresses") or []),
        student_addresses=dict(notifier.get("student_addresses") or {}),
        attribution=bool(raw.get("attribution", False)),
        tasks=dict(raw.get("tasks") or {}),
        ui_copy=copy,
    )
