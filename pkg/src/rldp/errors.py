"""Exception hierarchy shared by every module."""


class RLDPError(Exception):
    """Base class for all errors raised by this package."""


class ZeroMarginal(RLDPError):
    """A conditional on S was requested for a value with zero marginal mass."""

    def __init__(self, s, hint=None):
        msg = f"marginal P_s is zero for s={s}"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)
        self.s = s


class DimensionMismatch(RLDPError, ValueError):
    pass


class ParseError(RLDPError, ValueError):
    pass


class InvariantViolation(RLDPError, ValueError):
    """Input data breaks a structural invariant (stochasticity, sign, shape)."""

    def __init__(self, msg, index=None):
        super().__init__(msg if index is None else f"{msg} (at index {index})")
        self.index = index


class DomainError(RLDPError, ValueError):
    pass


class EmptyData(RLDPError, ValueError):
    pass


class PreconditionError(RLDPError, ValueError):
    """A builder's mathematical precondition does not hold for the given input."""


class DimensionCapExceeded(PreconditionError):
    def __init__(self, dim, cap):
        super().__init__(
            f"polytope dimension {dim} exceeds the configured cap {cap}; vertex "
            "enumeration is computationally infeasible for large alphabets, use "
            "ir, grr-cr or ue-cr instead"
        )
        self.dim = dim
        self.cap = cap


class Infeasible(RLDPError):
    def __init__(self, msg, certificate=None):
        super().__init__(msg)
        self.certificate = certificate


class Unbounded(RLDPError):
    pass
