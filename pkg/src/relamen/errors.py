"""Exception hierarchy shared by all relamen modules."""


class RelamenError(Exception):
    """Base class for every error raised by this package."""


class UnknownGenerator(RelamenError):
    pass


class SpecMismatch(RelamenError):
    pass


class BudgetExceeded(RelamenError):
    pass


class TwistError(RelamenError):
    """A semidirect twist is not a well-defined action."""


class ParseError(RelamenError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(RelamenError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CarrierViolation(RelamenError):
    pass


class EmptyComplementWindow(RelamenError):
    pass


class NotInComplement(RelamenError):
    pass


class OrbitNotFinite(RelamenError):
    pass


class EmptySet(RelamenError):
    pass


class IdentityInPhi(RelamenError):
    pass


class IdentityLamp(RelamenError):
    pass


class EquivarianceViolation(RelamenError):
    def __init__(self, g, x, lhs, rhs):
        self.witness = (g, x, lhs, rhs)
        super().__init__(f"act(g, phi(x)) != phi(act(g, x)) for g={g}, x={x}: {lhs} != {rhs}")


class AsymmetricWeights(RelamenError):
    pass


class NotUnitVector(RelamenError):
    pass


class NonIsometric(RelamenError):
    def __init__(self, u, v, before, after):
        self.witness = (u, v)
        self.before, self.after = before, after
        super().__init__(
            f"one-particle map is not isometric: <u|v> = {before} but <Vu|Vv> = {after}"
        )


class LiftMismatch(RelamenError):
    """A lifted certificate's quotients differ from the base quotients (internal bug guard)."""
