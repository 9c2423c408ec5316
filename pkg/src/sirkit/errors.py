"""Exception types raised across the toolkit."""


class SirkitError(Exception):
    """Base class for toolkit errors."""


class RangeError(SirkitError, ValueError):
    """A requested frequency range does not lie within the available data."""


class DomainError(SirkitError, ValueError):
    """An input lies outside the domain where a model or solver is defined."""


class LayoutError(SirkitError, ValueError):
    """A folded resonator layout violates its clearance rules."""


class SolverError(SirkitError, ArithmeticError):
    """A numerical solve failed (singular system, no bracket, ...)."""


class ParseError(SirkitError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        prefix = ""
        if source:
            prefix += f"{source}:"
        if line is not None:
            prefix += f"line {line}: "
        elif prefix:
            prefix += " "
        super().__init__(prefix + message)
        self.message = message
