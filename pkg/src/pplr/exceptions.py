"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition."""


class SolverError(RuntimeError):
    """A fit could not be completed (divergence, separation, singularity)."""
