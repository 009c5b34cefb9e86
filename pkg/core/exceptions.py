"""Error hierarchy shared by every app."""


class ExcursionError(Exception):
    """Base class for errors raised by the excursion-set toolkit."""


# domain

class DomainError(ExcursionError, ValueError):
    pass


class InvalidExtent(DomainError):
    pass


class TooFewPoints(DomainError):
    pass


class GridMismatch(DomainError):
    pass


class InvalidInterval(DomainError):
    pass


# piecewise

class PiecewiseError(ExcursionError):
    pass


class EmptyPiece(PiecewiseError, ValueError):
    pass


class InvalidSchedule(PiecewiseError, ValueError):
    pass


class ScheduleTooCoarse(PiecewiseError, ValueError):
    pass


class UnknownFixture(PiecewiseError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else 'unknown fixture'


# randfield

class RandomFieldError(ExcursionError):
    pass


class InvalidModel(RandomFieldError, ValueError):
    pass


class CovarianceNotPSD(RandomFieldError):
    pass


class EmptyAllMasks(RandomFieldError):
    pass


class BadLevel(RandomFieldError, ValueError):
    pass


class UnequalN(RandomFieldError, ValueError):
    pass


# regions

class RegionError(ExcursionError):
    pass


class NegativeQ(RegionError, ValueError):
    pass


class InvalidRate(RegionError, ValueError):
    pass


class ConfinementViolation(RegionError):
    pass


# experiments

class ExperimentError(ExcursionError):
    pass


class BadR(ExperimentError, ValueError):
    pass


class UnknownScenario(ExperimentError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else 'unknown scenario'
