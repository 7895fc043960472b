"""Exception hierarchy for rcs_hbeta.

Analysis failures (a condition not holding) are reported as verdicts, not
raised.  The classes below signal inputs or numerics the tools cannot work
with.
"""


class RcsError(Exception):
    """Base class for all errors raised by this package."""


# -- polynomial / LTI algebra ------------------------------------------------

class PoleOnAxis(RcsError, ZeroDivisionError):
    """A transfer function was evaluated on (or numerically at) an
    imaginary-axis pole."""


class DegenerateResult(RcsError, ValueError):
    """An algebraic operation produced a zero denominator."""


class EigenFailure(RcsError, ArithmeticError):
    """Root finding through the companion matrix did not converge."""


class ImproperTf(RcsError, ValueError):
    """A realization was requested for an improper transfer function."""


# -- FRF data ------------------------------------------------------------------

class ParseError(RcsError, ValueError):
    """Malformed row or header in an FRF CSV file."""


class NonMonotone(ParseError):
    """FRF frequencies are not strictly increasing."""


class TooShort(ParseError):
    """FRF file holds fewer than two samples."""


class OutOfRange(RcsError, ValueError):
    """A measured FRF was queried outside its sampled band."""


class BadRange(RcsError, ValueError):
    """Invalid frequency range for a grid."""


# -- loop model ------------------------------------------------------------------

class BadParams(RcsError, ValueError):
    """Controller, reset element or input parameters are out of range."""


class NotRealizable(RcsError, ValueError):
    """A state-space model was requested for a measured (FRF-only) plant."""


class ImproperComponent(RcsError, ValueError):
    """A loop component violates the properness requirements."""


# -- H-beta analysis -------------------------------------------------------------

class DividedByLoopZero(RcsError, ZeroDivisionError):
    """1 + L(R + C3) vanishes at the requested frequency."""


class SingularResolvent(RcsError, ArithmeticError):
    """jwI - A_bar is singular at the requested frequency."""


class OrderExceeded(RcsError, ValueError):
    """No Pade order up to the cap reaches the requested phase accuracy."""


# -- simulation / CLI --------------------------------------------------------------

class NonFiniteState(RcsError, ArithmeticError):
    """Simulation state blew up past the divergence threshold."""


class SchemaError(RcsError, ValueError):
    """System configuration file does not follow the documented grammar."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
