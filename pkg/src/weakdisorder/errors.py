"""Exception hierarchy.

Each error carries an ``exit_code`` used by the command line front end:
2 for configuration problems, 3 for failed assumptions, 4 for numerical
failures.
"""


class WeakDisorderError(Exception):
    exit_code = 4


class ConfigError(WeakDisorderError):
    exit_code = 2


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class OddGridSize(ConfigError):
    pass


class GridTooSmall(ConfigError):
    pass


class DiscretizationMismatch(WeakDisorderError):
    pass


class EpsOutOfRange(ConfigError):
    pass


class SupercellTooLarge(ConfigError):
    pass


class CombinatorialBlowup(ConfigError):
    pass


class AssumptionFailed(WeakDisorderError):
    exit_code = 3


class EllipticityViolated(AssumptionFailed):
    pass


class DegenerateEdge(AssumptionFailed):
    pass


class A1Violated(AssumptionFailed):
    pass


class UnsupportedOrder(AssumptionFailed):
    pass


class PreconditionNotMet(AssumptionFailed):
    pass


class NonSymmetricPerturbation(WeakDisorderError):
    pass


class IllConditionedSolve(WeakDisorderError):
    pass


class NonRealCoefficient(WeakDisorderError):
    pass


class InsufficientData(WeakDisorderError):
    pass
