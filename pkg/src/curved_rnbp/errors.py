"""Exception hierarchy shared by all modules."""


class CurvedRNBPError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CurvedRNBPError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(CurvedRNBPError, ArithmeticError):
    """Evaluation hit a singular point of a map or potential."""


class CollisionError(SingularityError):
    """The massless particle (or a body) collided with a primary."""


class AntipodalError(SingularityError):
    """Two bodies are diametrically opposite on the sphere."""


class ConvergenceError(CurvedRNBPError, RuntimeError):
    """An iterative solver failed to converge."""


class AmbiguityError(CurvedRNBPError, RuntimeError):
    """Branch selection could not decide between two preimages."""


class StepUnderflow(CurvedRNBPError, RuntimeError):
    """The adaptive integrator needed a step below its lower bound."""
