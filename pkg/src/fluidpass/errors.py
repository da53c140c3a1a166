"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line runner can map
error families to distinct process exit statuses.
"""


class FluidPassError(Exception):
    exit_code = 1


class ModelError(FluidPassError, ValueError):
    exit_code = 2


class NonGenerator(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class NonPositiveBuffer(ModelError):
    pass


class Reducible(ModelError):
    pass


class NoDrainingState(ModelError):
    pass


class ZeroRate(ModelError):
    pass


class GridError(FluidPassError, ValueError):
    exit_code = 3


class DegenerateGrid(GridError):
    pass


class WrongGridKind(GridError):
    pass


class AllRatesZero(GridError):
    pass


class IntegrationError(FluidPassError, ArithmeticError):
    exit_code = 4


class NonFinite(IntegrationError):
    pass


class SingularSystem(IntegrationError):
    pass


class TooLarge(IntegrationError):
    pass


class TransformError(FluidPassError, ArithmeticError):
    exit_code = 5


class EigFailure(TransformError):
    pass


class IllConditioned(TransformError):
    pass


class NonPositiveTime(TransformError, ValueError):
    pass


class SimulationError(FluidPassError, ValueError):
    exit_code = 6


class EmptySample(SimulationError):
    pass


class TooCensored(SimulationError):
    pass


class ConfigError(FluidPassError, ValueError):
    exit_code = 7


class UnknownSuite(ConfigError):
    pass


class DefectiveWarning(RuntimeWarning):
    """Eigenvector matrix is close to singular (nearly defective pencil)."""
