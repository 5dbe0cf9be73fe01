"""Exception hierarchy shared by the library and the command-line front end."""


class SimulCSPError(Exception):
    exit_code = 1


class InputError(SimulCSPError, ValueError):
    """Malformed instance, out-of-range variable, bad parameter."""

    exit_code = 1


class ResourceError(SimulCSPError, RuntimeError):
    """An enumeration or tree budget was exceeded.

    ``partial`` carries whatever trace was accumulated before the abort.
    """

    exit_code = 2

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SolverError(SimulCSPError, RuntimeError):
    """The simplex routine failed for numerical reasons (not infeasibility)."""

    exit_code = 2


class InvariantViolation(SimulCSPError, AssertionError):
    """A lemma-level invariant that the algorithms rely on did not hold."""

    exit_code = 3
