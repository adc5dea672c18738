"""Exception hierarchy shared by all modules."""


class HeatNetError(Exception):
    pass


class ValidationError(HeatNetError, ValueError):
    """Invalid input; ``path`` names the offending config field when known."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ParseError(HeatNetError):
    pass


class GraphError(ValidationError):
    pass


class DisconnectedGraph(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class IndexOutOfRange(GraphError):
    pass


class EigensolverFailure(HeatNetError, ArithmeticError):
    pass


class NotZeroSum(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class NonFiniteField(HeatNetError, ArithmeticError):
    pass


class CflViolation(ValidationError):
    pass


class IncompatibleICs(ValidationError):
    pass


class NumericalBlowup(HeatNetError, ArithmeticError):
    """Raised when the state turns non-finite; ``record`` holds the data up to failure."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class UnboundedRate(HeatNetError):
    pass


class InadmissibleKappa(ValidationError):
    pass


class GainsNoncompliant(ValidationError):
    pass
