"""Exception hierarchy shared by all solver modules."""


class GameSolverError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GameSolverError):
    """Invalid user input (dimension mismatch, infeasible point, bad value)."""


class CapabilityError(GameSolverError):
    """A required oracle or problem feature is unavailable."""


class ConfigError(GameSolverError):
    """Configuration file failed validation; carries every detected problem."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InnerSolveFailed(GameSolverError):
    """The affine-VI subproblem solve failed at outer iteration k."""

    def __init__(self, k, detail=""):
        self.k = k
        super().__init__(f"inner solve failed at outer iteration {k}: {detail}")


class Diverged(GameSolverError):
    """Residual grew beyond the divergence guard."""


class SingularJacobian(GameSolverError):
    """Newton linear system remained unsolvable after all fallbacks."""

    def __init__(self, k, agent=None):
        self.k = k
        self.agent = agent
        where = f" (agent {agent})" if agent is not None else ""
        super().__init__(f"singular Jacobian at iteration {k}{where}")


class OuterCycleDetected(GameSolverError):
    """Best-response outer loop revisited a previous iterate without converging."""


class TooFewPoints(GameSolverError):
    """Not enough usable data points for an estimation routine."""


class DegenerateFit(GameSolverError):
    """Fit is not identifiable (e.g. all recorded perturbations are zero)."""


class NotConverged(GameSolverError):
    """A reference solve did not reach its target residual."""


class NonIsolated(GameSolverError):
    """Randomized restarts found distinct solutions."""

    def __init__(self, witnesses):
        self.witnesses = witnesses
        super().__init__(
            f"solution not isolated: {len(witnesses)} distinct solutions found"
        )


class ConstraintsNotCommon(GameSolverError):
    """Agents' constraint functions disagree; reduction requires a shared one."""

    def __init__(self, max_deviation):
        self.max_deviation = max_deviation
        super().__init__(
            f"constraints differ across agents (max deviation {max_deviation:.3e})"
        )


class NoSolution(GameSolverError):
    """Active-set enumeration found no consistent pattern."""


class MultipleSolutions(GameSolverError):
    """Active-set enumeration found several distinct solutions."""

    def __init__(self, solutions):
        self.solutions = solutions
        super().__init__(f"{len(solutions)} distinct solutions found")
