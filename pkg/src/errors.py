"""Exception types raised by the precoding code."""


class DegenerateChannelError(ValueError):
    """Channel geometry makes a closed form undefined (rank loss, vanishing projections)."""


class NullSpaceError(ValueError):
    """The users' channel has no null space to place artificial noise in."""


class InfeasibleProblemError(RuntimeError):
    """No branch of a precoding problem admits a feasible point."""
