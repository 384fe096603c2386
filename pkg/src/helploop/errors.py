"""Exception hierarchy shared across the service.

Every error carries a stable machine-readable ``code`` so the HTTP layer
can surface distinct codes without string matching.
"""

from __future__ import annotations


class HelpLoopError(Exception):
    """Base class for all service errors."""

    code = "internal_error"


class DomainError(HelpLoopError):
    """A command was rejected by domain rules; state is unchanged."""


class ConsentMissing(DomainError):
    code = "consent_missing"


class QuotaExceeded(DomainError):
    code = "quota_exceeded"


class IllegalTransition(DomainError):
    code = "illegal_transition"


class AlreadyRated(DomainError):
    code = "already_rated"


class NotDelivered(DomainError):
    code = "not_delivered"


class DuplicateEscalation(DomainError):
    code = "duplicate_escalation"


class NotLeaseHolder(DomainError):
    code = "not_lease_holder"


class AlreadyResolved(DomainError):
    code = "already_resolved"


class EmptyFeedback(DomainError):
    code = "empty_feedback"


class UnknownStudent(DomainError):
    code = "unknown_student"


class UnknownRequest(DomainError):
    code = "unknown_request"


class UnknownHint(DomainError):
    code = "unknown_hint"


class UnknownEscalation(DomainError):
    code = "unknown_escalation"


class EmptyReasonSet(DomainError):
    code = "empty_reason_set"


class InvalidAnnotation(DomainError):
    code = "invalid_annotation"


class StorageFailure(HelpLoopError):
    """The event log could not be written; the triggering action was refused."""

    code = "storage_failure"


class CorruptLog(HelpLoopError):
    """The event log failed an integrity check during replay."""

    code = "corrupt_log"

    def __init__(self, message: str, sequence_number: int | None = None):
        super().__init__(message)
        self.sequence_number = sequence_number


class SnapshotMismatch(HelpLoopError):
    code = "snapshot_mismatch"


class PromptError(HelpLoopError):
    code = "invalid_prompt_bundle"


class MissingField(PromptError):
    code = "missing_prompt_field"


class InconsistentBundle(PromptError):
    code = "inconsistent_prompt_bundle"


class ProviderError(HelpLoopError):
    code = "provider_error"


class ProviderTimeout(ProviderError):
    code = "provider_timeout"


class IoFailure(HelpLoopError):
    code = "io_failure"
