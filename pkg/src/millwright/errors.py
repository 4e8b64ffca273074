"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class MillwrightError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(MillwrightError):
    """Invalid configuration value or file."""


class IntegrityError(MillwrightError):
    """A cross-reference that must resolve does not (dangling provenance,
    cache digest conflict, corrupted store)."""


class ToolError(MillwrightError):
    """A tool call failed: bad arguments, missing resource, or execution error."""

    def __init__(self, message: str, call_index: int | None = None):
        super().__init__(message)
        self.call_index = call_index


class ResourceMissing(ToolError):
    """A tool referenced a resource that is not loaded in the session."""


class BackendFailure(MillwrightError):
    """The language-model backend could not produce a response."""


class NoRuleMatch(BackendFailure):
    """Scripted backend had no rule for the prompt. Always a test/setup bug."""


class EscalationNeeded(MillwrightError):
    """Neither the backend nor the deterministic fallback could route."""
