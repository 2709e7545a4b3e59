"""Exception types raised by fcgam."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature exhausted its subdivision budget.

    The best available ``value`` and its ``err_est`` are attached so callers
    may decide to accept a slightly-off result.
    """

    def __init__(self, message, value, err_est):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class BracketError(ArithmeticError):
    """Root bracketing failed (the CDF looked non-monotone)."""


class FitDivergenceError(ArithmeticError):
    """A linear predictor left the representable range during fitting."""


class ConvergenceError(RuntimeError):
    """Optimizer stopped without meeting its convergence criterion."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IndefiniteHessianError(ArithmeticError):
    """Observed information is not positive definite."""

    def __init__(self, message, eigenvalues=None, hessian=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.hessian = hessian
