"""Exception hierarchy.

Every error carries a stable kebab-case ``name`` so the command line layer can
print it on stderr and map it to an exit code.
"""


class DevelopableError(Exception):
    name = "error"

    def __init__(self, message="", witness=None):
        super().__init__(message)
        self.witness = witness


class InvalidInput(DevelopableError, ValueError):
    name = "invalid-input"


class PreconditionViolation(DevelopableError, ValueError):
    name = "precondition-violation"


class StepTooCoarse(DevelopableError, ValueError):
    name = "step-too-coarse"


class NotCovered(DevelopableError):
    name = "not-covered"


class InconsistentImmersion(DevelopableError):
    name = "inconsistent-immersion"


class DegenerateGeometry(DevelopableError):
    name = "degenerate-geometry"


class MarginViolation(DevelopableError):
    name = "margin-violation"


class WindowCollapsed(DevelopableError):
    name = "window-collapsed"


class StageFailure(DevelopableError):
    name = "stage-failure"

    def __init__(self, message="", witness=None, inequality=None):
        super().__init__(message, witness)
        self.inequality = inequality


class NotGlueable(DevelopableError):
    name = "not-glueable"


class InvalidTopology(DevelopableError):
    name = "invalid-topology"


class InsufficientResolution(DevelopableError):
    name = "insufficient-resolution"

    def __init__(self, message="", witness=None, min_h=None):
        super().__init__(message, witness)
        self.min_h = min_h


class ConfigError(DevelopableError, ValueError):
    name = "parse-error"
