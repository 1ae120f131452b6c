"""Exception hierarchy shared across the package."""


class OcbnnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(OcbnnError):
    """Invalid configuration, constraint specification, or cross-field mismatch."""


class ConstraintSyntaxError(ConfigError):
    """Syntax error in the constraint expression language, with position info."""

    def __init__(self, message, line, column, expected=(), found=None):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        self.found = found
        detail = f"line {line}, column {column}: {message}"
        if self.expected:
            detail += f" (expected {' | '.join(self.expected)}"
            detail += f", found {found!r})" if found is not None else ")"
        super().__init__(detail)


class OracleError(OcbnnError):
    """A test oracle (e.g. finite differences) hit a non-finite value."""


class InferenceError(OcbnnError):
    """Numerical failure inside a sampler (non-finite target or gradient)."""
