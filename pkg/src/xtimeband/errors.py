"""Exception hierarchy."""


class XTimebandError(Exception):
    """Base class for all library errors."""


class DomainError(XTimebandError, ValueError):
    """Parameter or argument outside its mathematical domain."""


class MissingDegree(DomainError):
    """Requested degree is one of the family's missing degrees."""


class PoleAtB(DomainError):
    """Evaluation point too close to the pole ``x = b`` of the Jacobi operator."""


class Unsupported(XTimebandError, NotImplementedError):
    """Operation not defined for the requested family."""


class SizeMismatch(XTimebandError, ValueError):
    pass


class NonSymmetricInput(XTimebandError, ValueError):
    pass


class SymmetrizationFailure(XTimebandError, ArithmeticError):
    """``D K D^-1`` is not symmetric: the recurrence entries are inconsistent."""


class QuadratureNonConvergence(XTimebandError, ArithmeticError):
    pass


class NumericalDiagnosticError(XTimebandError, ArithmeticError):
    """A numerical check failed (mapped to CLI exit code 3)."""


class NullspaceDimensionMismatch(NumericalDiagnosticError):
    def __init__(self, dim: int, singular_values=None, message: str | None = None):
        self.dim = dim
        self.singular_values = singular_values
        super().__init__(message or f"commutant nullspace has dimension {dim}, expected 2")


class NormalizationDegenerate(NumericalDiagnosticError):
    pass


class RankDeficientBasis(NumericalDiagnosticError):
    def __init__(self, rank: int, size: int):
        self.rank = rank
        self.size = size
        super().__init__(f"monomial basis of {size} words has numerical rank {rank}")
