"""Error types shared across the pipeline.

Every error carries a stable ``code`` (the class name) so the HTTP layer and
the CLI can map failures to ``{code, message}`` bodies and exit codes without
string matching.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# corpus

class EmptyBundle(PipelineError):
    """Bundle contained no readable text files."""


class DuplicateId(PipelineError):
    """paper_id already present in the corpus store."""


class MalformedMetadata(PipelineError):
    """Metadata sidecar is missing required fields or has bad values."""


# texmath

class UnbalancedEnvironment(PipelineError):
    """A \\begin without a matching \\end. Carries the offending span."""

    def __init__(self, env_name: str, start: int, end: int, message: str | None = None):
        super().__init__(message or f"unbalanced environment {env_name!r} at {start}..{end}")
        self.env_name = env_name
        self.start = start
        self.end = end


# agentflow

class ExhaustedRetries(PipelineError):
    """All provider attempts failed for one call."""

    def __init__(self, message: str, attempts: int = 0, last_error: str | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.last_error = last_error


class PayloadTooLarge(PipelineError):
    """Paper text exceeds the provider's payload budget; raised before any attempt."""


class SchemaViolation(PipelineError):
    """A parsed agent record violates its JSONL contract."""


class ParseFailed(PipelineError):
    """Agent response was not valid JSONL. Carries the first offending line."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class SelfContainmentFailed(PipelineError):
    """Refined sample still fails the self-containment check after all attempts."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}


class OverFiltered(PipelineError):
    """Answer filtering dropped content the sample still needs."""


class PaperNotAccepted(PipelineError):
    """run_pipeline was asked for a paper that did not pass the filter."""


# curation

class UnknownSample(PipelineError):
    """sample_id not present in the store."""


class QueueEmpty(PipelineError):
    """No review_pending sample available under the given filter."""


class VersionConflict(PipelineError):
    """Decision base_version does not match the sample's current version."""


class RubricViolation(PipelineError):
    """Accept action submitted with at least one rubric answer false."""


class InvalidDecision(PipelineError):
    """Decision payload is structurally invalid (e.g. edit without edited content)."""


class NothingAccepted(PipelineError):
    """Export requested but the store holds no accepted samples."""


# evalbench

class GradeOutOfRange(PipelineError):
    """Grader returned an axis value outside 0..2."""


class RangeError(PipelineError):
    """Human score outside 0 <= completed <= total, total >= 1."""


class NoScores(PipelineError):
    """Aggregation requested over an empty score set."""


# cli / config

class UsageError(PipelineError):
    """Command line did not parse. Exit code 2."""


class ConfigError(PipelineError):
    """Config file invalid. Carries all field errors at once. Exit code 3."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
