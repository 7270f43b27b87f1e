"""Exception hierarchy shared by all shepplab modules."""


class ShepplabError(Exception):
    """Base class for every error raised by shepplab."""


class DomainError(ShepplabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """A formula was evaluated outside the Hurst-index regime where it holds."""


class ConfigurationError(ShepplabError, ValueError):
    """Missing or inconsistent experiment parameters."""


class NumericalError(ShepplabError, ArithmeticError):
    """A numerical procedure failed (embedding, factorization).

    ``module`` names the component that failed so the CLI can report it.
    """

    module = "shepplab"
    context = ""

    def __str__(self):
        base = super().__str__()
        return f"{base} ({self.context})" if self.context else base


class EmbeddingError(NumericalError):
    module = "fbm_sim"

    def __init__(self, min_eigenvalue, tolerance):
        self.min_eigenvalue = float(min_eigenvalue)
        self.tolerance = float(tolerance)
        super().__init__(
            f"circulant embedding failed: most negative eigenvalue "
            f"{self.min_eigenvalue:.6e} below -{self.tolerance:.3e}"
        )

    def __reduce__(self):
        return type(self), (self.min_eigenvalue, self.tolerance), self.__dict__


class FactorizationError(NumericalError):
    module = "fbm_sim"

    def __init__(self, pivot, residual):
        self.pivot = int(pivot)
        self.residual = float(residual)
        super().__init__(
            f"covariance factorization failed at pivot {self.pivot}: "
            f"residual diagonal {self.residual:.6e} is negative"
        )

    def __reduce__(self):
        return type(self), (self.pivot, self.residual), self.__dict__


class FitError(ShepplabError, ValueError):
    """A least-squares design is degenerate."""


class InsufficientExceedancesError(FitError):
    """Too few threshold exceedances to form tail ratios."""
