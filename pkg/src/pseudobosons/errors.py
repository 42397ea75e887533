"""Exception hierarchy shared by the algebra, model and reporting layers."""


class PseudoBosonError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(PseudoBosonError, ValueError):
    """Operands live on a different number of spatial variables."""


class IntegrabilityError(PseudoBosonError, ValueError):
    """A Gaussian exponent whose real part is not positive definite."""


class NumericalConsistencyError(PseudoBosonError, ArithmeticError):
    """A quantity that must be real/positive came out otherwise beyond tolerance."""


class ExpressionError(PseudoBosonError, ValueError):
    """Malformed operator expression."""


class DegreeGuardError(PseudoBosonError, OverflowError):
    """Operator degree exceeded the configured guard."""


class MomentCapError(PseudoBosonError, OverflowError):
    """Requested Gaussian moment order above the cap."""


class AssumptionViolation(PseudoBosonError):
    """No normalizable vacuum exists for the given lowering operators."""


class ParameterError(PseudoBosonError, ValueError):
    """Model parameters outside their admissible range."""


class SingularParameterError(ParameterError):
    """Parameters too close to a point where the model constants diverge."""
