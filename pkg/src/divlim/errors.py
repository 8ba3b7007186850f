"""Exception hierarchy.

The CLI maps each family onto an exit code, so every error raised by the
library derives from one of the four bases below.
"""


class DivlimError(Exception):
    """Base class for all library errors."""


class ParseError(DivlimError):
    """Base for integrand-DSL errors."""


class EvaluationError(DivlimError):
    """Base for failures while evaluating or integrating an integrand."""


class PreconditionError(DivlimError):
    """A caller-side requirement of an operation is violated."""


class ConsistencyError(DivlimError):
    """Two routes that must agree did not."""


# -- expr ---------------------------------------------------------------

class ExpressionSyntaxError(ParseError, SyntaxError):
    def __init__(self, message, offset):
        self.msg = message
        self.offset = offset
        Exception.__init__(self, message, offset)

    def __str__(self):
        return f"{self.msg} at offset {self.offset}"


class NonIntegerExponent(ExpressionSyntaxError):
    pass


class UnboundSymbol(EvaluationError, KeyError):
    def __init__(self, name):
        self.name = name
        Exception.__init__(self, name)

    def __str__(self):
        return f"symbol {self.name!r} has no binding"


class DivisionByZero(EvaluationError, ZeroDivisionError):
    pass


class ZeroDenominator(EvaluationError):
    pass


# -- divergence ---------------------------------------------------------

class DegenerateScaling(EvaluationError):
    pass


# -- quad ---------------------------------------------------------------

class QuadratureError(EvaluationError):
    pass


class MaxSubdivisions(QuadratureError):
    pass


class PoleOnInterval(QuadratureError):
    pass


class NonConvergent(QuadratureError):
    pass


# -- regfin -------------------------------------------------------------

class SingularOnDomain(EvaluationError):
    def __init__(self, message, poles=()):
        self.poles = tuple(poles)
        super().__init__(message)


class SlowConvergence(EvaluationError):
    pass


class InvalidRegulator(PreconditionError):
    pass


class InsufficientOrder(PreconditionError):
    def __init__(self, omega, order):
        self.omega = omega
        self.order = order
        super().__init__(
            f"subtraction order {order} is below the superficial degree of "
            f"divergence omega={omega}; need order >= {omega}"
        )


class RegulatorDisagreement(ConsistencyError):
    def __init__(self, q, pair, discrepancy):
        self.q = q
        self.pair = pair
        self.discrepancy = discrepancy
        super().__init__(
            f"methods {pair[0]} and {pair[1]} differ by {discrepancy:.3e} at q={q}"
        )


# -- renorm -------------------------------------------------------------

class PerturbativityWarning(UserWarning):
    """A first-order running formula is used outside its small-coupling regime."""
