"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateDistributionError(ArithmeticError):
    """A covariance (or block of one) is singular or not positive semidefinite."""


class DatasetValidationError(ValueError):
    """One or more problems found while building a dataset.

    All problems are collected before raising so that a malformed file is
    reported in a single pass.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class UnsupportedAttackError(ValueError):
    """Entanglement attacks are only defined for Gaussian representations."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not converge."""
