"""Exception types shared across the solver."""


class DomainError(ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class BasisRangeError(ArithmeticError):
    """Spline constants overflow for the given tension and spacing."""

    def __init__(self, product: float):
        self.product = product
        super().__init__(
            f"exponential spline constants overflow for rho*h_x = {product:g}"
        )


class SolverError(RuntimeError):
    """A linear solve or time step failed.

    ``index`` is the offending row (pivot failures) and ``step`` the time level,
    either of which may be ``None`` when not applicable.
    """

    def __init__(self, message: str, index: int | None = None, step: int | None = None):
        self.index = index
        self.step = step
        parts = [message]
        if step is not None:
            parts.append(f"step={step}")
        if index is not None:
            parts.append(f"row={index}")
        super().__init__(", ".join(parts))


class CompatibilityWarning(UserWarning):
    """Initial data and boundary data disagree at a corner of the domain."""
