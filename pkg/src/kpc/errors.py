"""Exception hierarchy shared by every kpc module."""


class KPCError(Exception):
    """Base class for all errors raised by kpc."""


class DegenerateModes(KPCError, ValueError):
    """Two spectral modes make an off-diagonal denominator vanish."""


class SingularDenominator(KPCError, ValueError):
    """A soliton pair has p_n + q_m = 0."""


class OnSingularSet(KPCError, ArithmeticError):
    """The evaluation point lies on (or numerically at) a zero of the determinant."""


class NonFinite(KPCError, ArithmeticError):
    """A linear solve or field evaluation produced a non-finite value."""


class StencilOnSingularSet(OnSingularSet):
    """A finite-difference stencil touches the singular set."""


class NumericalConditioning(KPCError, ArithmeticError):
    """A complex determinant fell below the conditioning threshold."""


class InsufficientWindow(KPCError, ValueError):
    """A time series is too short to estimate a background level."""


class FewerThanTwoTroughs(KPCError, ValueError):
    """Fewer than two qualifying local minima were found."""


class DegenerateDepth(KPCError, ValueError):
    """rho*g*h^2 == 3*S, so alpha^2 is undefined."""


class DegenerateRange(KPCError, ValueError):
    """An export value range has hi == lo."""


class ConfigError(KPCError, ValueError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed JSON; carries line and column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)


class ValidationError(ConfigError):
    """A config value violates a schema rule; ``path`` names the field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
