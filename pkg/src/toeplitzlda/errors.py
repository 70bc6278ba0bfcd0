"""Exception types shared across the package."""


class ToeplitzLdaError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ToeplitzLdaError, ValueError):
    """An array's dimensions do not match the declared block structure."""


class LayoutError(ToeplitzLdaError, ValueError):
    """An operation received data in the wrong memory layout."""


class DataFormatError(ToeplitzLdaError, ValueError):
    """A dataset directory or model file is malformed or inconsistent."""


class GroupSizeError(ToeplitzLdaError, ValueError):
    """Epoch count is incompatible with the target/non-target group size."""


class SolveError(ToeplitzLdaError):
    """A linear solve failed (factorization breakdown or singular system)."""


class SolveBreakdownError(SolveError):
    """The block Levinson recursion hit a non-positive-definite leading minor.

    ``order`` is the number of leading block rows in the failing minor
    (1-based count, i.e. the recursion step at which the factorization of
    the Schur complement failed).
    """

    def __init__(self, order: int, message: str | None = None):
        self.order = order
        if message is None:
            message = (
                f"block Levinson recursion broke down at step {order}: the "
                f"leading {order}-block minor is not positive definite"
            )
        super().__init__(message)
