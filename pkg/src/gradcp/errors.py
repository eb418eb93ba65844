"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when input data cannot be parsed or violates a data contract.

    Messages identify the offending row/column where possible so the CLI can
    surface them (exit code 2).
    """
