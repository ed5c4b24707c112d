"""Exception types and the explicit infinity sentinel shared by all modules."""

INF = float("inf")


class LDFlowsError(Exception):
    """Base class for package errors."""


class DomainExitError(LDFlowsError):
    """A point or trajectory left the declared space-time window."""


class WidenBoundError(LDFlowsError):
    """A numeric Legendre maximizer sits on the search boundary."""


class ConvergenceFailure(LDFlowsError):
    """An implicit solve or root-find did not converge."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class UnstableStartError(LDFlowsError):
    """Rate-independent evolution started outside the stable set."""


class RunawayJumpError(LDFlowsError):
    """A jump transient did not re-stabilize inside the domain."""


class LowStatisticsError(LDFlowsError):
    """Too few events for a meaningful estimate."""


class DegeneratePlateauError(LDFlowsError):
    """Reparametrized curve is at rest in both t and x on a set of positive length."""


class FloatRangeError(LDFlowsError):
    """A required time scale or rate lies outside the double-precision range."""


class ConfigError(LDFlowsError):
    """Invalid or inconsistent experiment configuration."""


def is_inf(value) -> bool:
    """Explicit comparison against the infinity sentinel."""
    return value == INF
