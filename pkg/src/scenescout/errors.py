"""Exception types raised across the package."""


class ScenescoutError(Exception):
    """Base class for all package errors."""


class DegenerateFrame(ScenescoutError, ValueError):
    """A camera frame cannot be built (zero-length or parallel axes)."""


class MalformedMatrix(ScenescoutError, ValueError):
    """A camera-to-world matrix is not a rigid transform."""


class ParseError(ScenescoutError, ValueError):
    """A pose or scene file could not be parsed."""


class ScorerError(ScenescoutError, RuntimeError):
    """A scorer failed or produced a non-finite / non-positive value."""


class ConfigError(ScenescoutError, ValueError):
    """Invalid search or experiment configuration.

    ``field`` names the offending setting so front ends can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class EmptyPeaks(ScenescoutError, ValueError):
    pass


class EmptyTrainingSet(ScenescoutError, ValueError):
    pass


class NonPositiveScore(ScenescoutError, ValueError):
    pass


class BudgetInfeasible(ScenescoutError, ValueError):
    pass


class GridTooLarge(ScenescoutError, ValueError):
    pass
