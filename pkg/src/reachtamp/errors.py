"""Exception types shared across the planning stack."""


class ReachTampError(Exception):
    """Base class for all planner errors."""


class ModelMismatch(ReachTampError):
    """Configuration dimension does not match the robot model."""


class InvalidResolution(ReachTampError):
    """Interpolation step count must be a positive integer."""


class PreconditionRejected(ReachTampError):
    """Requested end-effector point is inside a static obstacle or out of bounds."""


class NoSolution(ReachTampError):
    """IK failed to find a feasible configuration after all restarts."""


class WorkspaceInfeasible(ReachTampError):
    """Graph sampling budget exhausted before reaching the node target."""


class UnreachableQuery(ReachTampError):
    """A query endpoint could not be validated."""


class DisconnectedQuery(ReachTampError):
    """A validated query endpoint could not be connected to the graph."""


class NoPath(ReachTampError):
    """No collision-free path exists between two connected endpoints."""


class EmptyFrontier(ReachTampError):
    """Best-first search frontier is empty."""


class NoPlan(ReachTampError):
    """Symbolic frontier exhausted without a feasible plan."""


class PlanTimeout(ReachTampError):
    """Per-instance planning budget exceeded."""


class Infeasible(ReachTampError):
    """Keyframe or path optimization failed for a candidate action sequence.

    ``switch_index`` identifies the first unsolvable kinematic switch when
    raised by keyframe optimization; it is None for full-path failures.
    """

    def __init__(self, message, switch_index=None):
        super().__init__(message)
        self.switch_index = switch_index


class GenerationFailure(ReachTampError):
    """Scenario generator exhausted its rejection-sampling budget."""


class IntegrityViolation(ReachTampError):
    """Stored plan metrics disagree with independent recomputation."""


class ScenarioFormatError(ReachTampError):
    """Scenario file failed schema validation."""
