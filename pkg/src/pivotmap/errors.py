"""Exception types shared by the library and the CLI.

Each error carries a stable ``kind`` string (used in the CLI error envelope)
and the process exit code the CLI maps it to.
"""


class PivotMapError(Exception):
    kind = "error"
    exit_code = 1


class ValidationError(PivotMapError):
    """Invalid input: a violated invariant or an out-of-contract argument."""

    kind = "invalid_input"
    exit_code = 2


class ParseError(ValidationError):
    """Malformed on-disk record. Carries the 1-based line number when known."""

    kind = "parse"

    def __init__(self, detail: str, line: int | None = None):
        self.line = line
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)


class CapacityError(PivotMapError):
    """A guard against combinatorial blow-up or budget overflow was exceeded."""

    kind = "capacity"
    exit_code = 3
