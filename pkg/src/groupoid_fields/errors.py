"""Exception hierarchy shared by all modules."""


class GroupoidFieldError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GroupoidFieldError, ValueError):
    pass


class MeshError(GroupoidFieldError, ValueError):
    pass


class DimensionTooSmall(MeshError):
    pass


class NotComposable(GroupoidFieldError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CycleDefect(GroupoidFieldError, ValueError):
    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect


class SingularElement(GroupoidFieldError, ValueError):
    pass


class OutsideInjectivityRadius(GroupoidFieldError, ValueError):
    pass


class BaseMismatch(GroupoidFieldError, ValueError):
    pass


class FieldError(GroupoidFieldError, ValueError):
    pass


class BoundaryVertexError(GroupoidFieldError, ValueError):
    pass


class NotInvariant(GroupoidFieldError, ValueError):
    def __init__(self, message, worst):
        super().__init__(message)
        self.worst = worst


class NotASolution(GroupoidFieldError, ValueError):
    pass


class SolverError(GroupoidFieldError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonConvergence(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class DegenerateLegendre(SolverError):
    pass
