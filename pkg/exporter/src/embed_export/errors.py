"""Error taxonomy mirrored from the evaluation toolkit's CLI convention.

SchemaError covers malformed inputs, flags and encoder contract violations
(exit code 2 at the CLI); ComputeError covers failures inside an otherwise
well-formed computation (exit code 1).
"""


class ExportError(Exception):
    """Base class for all exporter errors."""


class SchemaError(ExportError):
    """Input violates the documented schema or referenced files are missing."""


class ComputeError(ExportError):
    """A computation could not be completed (non-finite encoder output, ...)."""
