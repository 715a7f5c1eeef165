"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its valid domain."""


class NumericalError(RuntimeError):
    """A numerical operation failed (e.g. a Cholesky factorization on a
    matrix that is not positive definite).

    Attributes
    ----------
    minor : int or None
        1-based index of the offending leading minor, when known.
    iteration : int or None
        Sweep index at which a sampler failed, when applicable.
    group : int or None
        Group index at which a sampler failed, when applicable.
    """

    def __init__(self, message, minor=None, iteration=None, group=None):
        super().__init__(message)
        self.minor = minor
        self.iteration = iteration
        self.group = group


class IngestionError(ValueError):
    """Input data could not be parsed or validated.

    Carries the offending file (and line, when known) so CLI users can
    locate the problem.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc)
        self.path = path
        self.line = line


class UnsupportedOperationError(RuntimeError):
    """The requested quantity is undefined for this kind of run."""
