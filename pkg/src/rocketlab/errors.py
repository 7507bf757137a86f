"""Exception hierarchy shared across the package."""


class RocketLabError(Exception):
    """Base class for all package errors."""


class ValidationError(RocketLabError, ValueError):
    """Invalid argument or configuration supplied by the caller."""


class ConfigError(ValidationError):
    """A transform configuration cannot produce any feasible kernel."""


class SpanError(ValidationError):
    """A kernel's effective span does not fit inside the series."""

    def __init__(self, k, dilation, n):
        self.k = k
        self.dilation = dilation
        self.n = n
        span = (k - 1) * dilation + 1
        super().__init__(
            f"kernel span {span} (K={k}, d={dilation}) exceeds series length N={n}"
        )


class DimensionError(ValidationError):
    """Array shapes do not agree."""


class UndefinedCoherenceError(ValidationError):
    """Fewer than two non-zero vectors are available."""


class DatasetParseError(RocketLabError):
    """Structured parse failure while reading a dataset file.

    ``row`` is the zero-based index among data rows (comments excluded),
    ``line`` the one-based physical line number and ``field`` the zero-based
    field index within the row (``None`` when the whole row is at fault).
    """

    def __init__(self, message, row=None, line=None, field=None):
        self.row = row
        self.line = line
        self.field = field
        where = []
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field {field}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
