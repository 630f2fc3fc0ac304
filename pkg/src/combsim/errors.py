"""Exception hierarchy shared by all combsim modules."""


class CombsimError(Exception):
    """Base class for every error raised by combsim."""


# dispersion ------------------------------------------------------------------

class DispersionError(CombsimError, ValueError):
    pass


class MalformedInput(DispersionError):
    pass


class TooFewRows(DispersionError):
    pass


class WindowOutsideData(DispersionError):
    pass


class PumpNotBracketed(DispersionError):
    pass


# solvers ---------------------------------------------------------------------

class InconsistentWindows(CombsimError, ValueError):
    pass


class StepCollapse(CombsimError, RuntimeError):
    """Adaptive sub-stepping hit ``maxiter`` halvings without meeting ``tol``.

    The partial :class:`~combsim.lle.EvolutionRecord` gathered up to the
    failure is attached as ``record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class NoConvergence(CombsimError, RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class SingularJacobian(CombsimError, RuntimeError):
    pass


class IndexOutOfRange(CombsimError, IndexError):
    pass


# configuration and bundles ---------------------------------------------------

class ConfigError(CombsimError, ValueError):
    pass


class UnknownKey(ConfigError):
    pass


class ConflictingAlias(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass


class BundleError(CombsimError):
    pass


class CorruptBundle(BundleError):
    pass


class VersionMismatch(BundleError):
    pass


class IoFailure(CombsimError, OSError):
    pass
