"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`NepvError`,
so callers (and the CLI) can separate numerical failures from bugs.
"""


class NepvError(Exception):
    """Base class for all library errors."""


class InputError(NepvError, ValueError):
    """Malformed or inadmissible input."""


class ZeroVectorError(InputError):
    pass


class ZeroAlphaError(InputError):
    pass


class InvalidDimensionError(InputError):
    pass


class InvalidSamplesError(InputError):
    pass


class ProblemFormatError(InputError):
    pass


class MissingGradientError(NepvError):
    pass


class NotAnEigenvalueError(NepvError):
    pass


class NotAnEigenpairError(NepvError):
    pass


class NonSimpleError(NepvError):
    """The eigenpair is not simple: J_F is (numerically) singular."""


class ZeroEigenvalueError(NepvError):
    """Relative quantities are undefined for a zero eigenvalue."""


class DegenerateWeightsError(NepvError):
    """sum_i |f_i(v)| w_i vanishes, so no admissible perturbation explains the residual."""


class NotApplicableError(NepvError):
    pass


class ConvergenceError(NepvError):
    """Numerical failure of an iterative solver."""


class MaxIterExceeded(ConvergenceError):
    pass


class SingularJacobianError(ConvergenceError):
    pass
