"""Error taxonomy shared by every module.

SchemaError covers malformed or inconsistent inputs (exit code 2 at the CLI),
ComputeError covers failures inside an otherwise well-formed computation
(exit code 1).
"""


class RadpipeError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(RadpipeError):
    """Input violates the documented schema or referenced files are missing."""


class ComputeError(RadpipeError):
    """A computation could not be completed (degenerate input, collision budget, ...)."""
