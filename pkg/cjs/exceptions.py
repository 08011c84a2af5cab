class CJSError(Exception):
    """Base class for every error raised by cjs."""


class DatasetParseError(CJSError, ValueError):
    pass


class LabelLengthMismatch(CJSError, ValueError):
    pass


class LabelOutOfRange(CJSError, ValueError):
    pass


class DimensionMismatch(CJSError, ValueError):
    pass


class MixedLabeling(CJSError, ValueError):
    pass


class ZeroMatrix(CJSError, ValueError):
    pass


class SingularSystem(CJSError, ArithmeticError):
    pass


class TooManyClusters(CJSError, ValueError):
    pass


class NoAnchors(CJSError):
    pass


class EmptyClass(CJSError, ValueError):
    pass


class SolverFailure(CJSError, RuntimeError):
    pass


class LengthMismatch(CJSError, ValueError):
    pass


class BadDimensions(CJSError, ValueError):
    pass


class ConfigError(CJSError, ValueError):
    pass


class UnlabeledTargetNoScore(CJSError):
    """Target labels are missing, so a run can predict but not score."""


class ModelFormatError(CJSError, ValueError):
    pass


class NonConvergenceWarning(UserWarning):
    """An iterative stage stopped before meeting its tolerance."""
