"""Exception types shared across the toolkit."""


class GeoDepthError(Exception):
    """Base class for every error raised by geodepth."""


class GeometryDomainError(GeoDepthError, ValueError):
    """An input lies outside the domain where a geometric relation is defined."""


class ParseError(GeoDepthError, ValueError):
    """Malformed label or calibration text.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None, key=None):
        self.line = line
        self.column = column
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class InputError(GeoDepthError, ValueError):
    """Inconsistent or incomplete inputs to an evaluation routine."""


class ConfigurationError(GeoDepthError, ValueError):
    """Unusable configuration (infeasible generator spec, missing fixtures, ...)."""
