"""Exception hierarchy shared across the pipeline.

Every error that maps to a CLI exit code lives here so the command layer
can translate failures without importing half the package.
"""


class NegmixError(Exception):
    """Base class for all package errors."""


class ParameterError(NegmixError, ValueError):
    """A caller passed an argument outside the documented domain."""


class ParseError(NegmixError, ValueError):
    """Input bytes could not be parsed (data file line or model payload)."""


class IntegrityError(NegmixError, ValueError):
    """Dataset-level consistency violation: duplicate or dangling ids."""


class SchemaError(NegmixError, ValueError):
    """A parsed payload is missing required fields or carries bad values."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class GenerationError(NegmixError, RuntimeError):
    """Negative generation failed after exhausting retries."""


class MixError(NegmixError, ValueError):
    """Mixing could not honor its contract (e.g. a selected pair has no
    generation record)."""


class NumericError(NegmixError, RuntimeError):
    """Training produced a non-finite value; carries diagnostics."""

    def __init__(self, message: str, step: int | None = None,
                 instance_ids: list[str] | None = None):
        super().__init__(message)
        self.step = step
        self.instance_ids = instance_ids or []


class DomainError(NegmixError, ValueError):
    """A closed-form quantity was requested outside its domain of
    definition (e.g. worst-case MRR when the pool's best rank does not
    exceed the positive count)."""


class UsageError(NegmixError, ValueError):
    """Bad command line or config file."""
