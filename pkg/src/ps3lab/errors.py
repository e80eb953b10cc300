"""Exception types shared across the package."""


class PS3Error(Exception):
    """Base class; ``exit_code`` is what the CLI returns."""

    exit_code = 2


class DegenerateBranching(PS3Error):
    pass


class AtBranchPoint(PS3Error):
    pass


class Unclassifiable(PS3Error):
    pass


class OutOfRange(PS3Error):
    pass


class InconsistentColors(PS3Error):
    pass


class NoPreimageSegment(PS3Error):
    pass


class SingularParams(PS3Error):
    pass


class Indeterminate(PS3Error):
    pass


class CoincidentCoordinates(PS3Error):
    pass


class PreimageOnSlot(PS3Error):
    pass


class OnSlot(PS3Error):
    pass


class NoConvergence(PS3Error):
    exit_code = 3


class SolverFailure(PS3Error):
    exit_code = 3


class NoRoot(PS3Error):
    exit_code = 3


class ModuliMismatch(PS3Error):
    exit_code = 3


class MapDegenerate(PS3Error):
    exit_code = 3


class BranchFailure(PS3Error):
    exit_code = 3


class InvalidSpec(PS3Error):
    exit_code = 1

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)
