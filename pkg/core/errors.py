"""Error types shared by the calculators, the tag readers and the CLI."""

from typing import Optional


class QkdLabError(ValueError):
    """Base class for domain errors."""

    exit_code = 1


class ParameterError(QkdLabError):
    """Invalid or inconsistent parameter set."""

    exit_code = 2


class TagFormatError(QkdLabError):
    """Malformed time-tag file; carries the byte offset of the first bad field."""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, offset: Optional[int] = None):
        self.path = path
        self.offset = offset
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte {offset}")
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class InfeasibleError(QkdLabError):
    """A single-point query has no positive key rate."""

    exit_code = 4


class EstimationError(QkdLabError):
    """Too little or degenerate data for a g2 or lifetime estimate."""

    exit_code = 4
