"""Exception types shared across the package."""


class CqtrajError(Exception):
    """Base class for all cqtraj errors."""


class ValidationError(CqtrajError):
    """A state or scenario description violates its constraints.

    Carries a list of human-readable violation messages in ``problems``.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ParseError(CqtrajError):
    """A config document or compact state string could not be parsed."""


class NodeProximity(CqtrajError):
    """Evaluation or integration came within the node guard of a zero of psi."""


class StationaryPoint(CqtrajError):
    """The velocity field vanishes at the requested seed point."""


class DegeneratePoint(CqtrajError):
    """psi = 0 or E = V at the requested point (alternative velocity form)."""


class StepFailure(CqtrajError):
    """The adaptive integrator could not meet its tolerance."""


class HorizonExceeded(CqtrajError):
    """An open trajectory produced no real-axis crossing within the horizon."""


class NodeOnGrid(CqtrajError):
    """A real-line grid point lies within the node guard of a zero of psi."""


class MaskViolation(CqtrajError):
    """A finite-difference stencil touches points outside the defined region."""


class UnsupportedState(CqtrajError):
    """No closed-form catalog entry exists for this state."""


class OverdeterminedBoundary(CqtrajError):
    """The real-axis crossings of the path give inconsistent boundary values."""


class UnreachedRegion(CqtrajError):
    """The path through the given point never reaches the real axis."""
