"""Exception types raised by deblurkit."""


class DeblurError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(DeblurError, ValueError):
    pass


class IllConditionedFitError(DeblurError):
    """The inverse-response design matrix is numerically rank deficient."""

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class InsufficientBandError(DeblurError):
    pass


class FitFailedError(DeblurError):
    """Blur-scale fit did not converge; ``best`` holds the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleDesignError(DeblurError):
    def __init__(self, message, error):
        super().__init__(message)
        self.error = error
