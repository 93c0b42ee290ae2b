"""Exception hierarchy.

Errors derived from :class:`DataError` signal a problem with user data (bad
values, mismatched schemas, infeasible requests). :class:`ConfigError`
covers invalid configuration and parameters. Everything else is a contract
violation between components (capabilities, model files).
"""


class TabSynthError(Exception):
    """Base class for every error raised by the package."""


class DataError(TabSynthError, ValueError):
    pass


class ConfigError(TabSynthError, ValueError):
    pass


# -- data loading and validation
class ParseError(DataError):
    pass


class DomainError(DataError):
    pass


class MissingValueError(DataError):
    """Raised for empty cells. Impute externally before loading."""


class SeriesOrderError(DataError):
    pass


class SchemaError(DataError):
    pass


class SizeError(DataError):
    pass


class UnseenCategoryError(DataError):
    pass


class LinkageError(DataError):
    pass


class SchemaMismatchError(DataError):
    pass


class UnknownFeatureError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# -- numerics
class EmptySampleError(DataError):
    pass


class BinMismatchError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class DegenerateSampleError(DataError):
    pass


class LengthMismatchError(DataError):
    pass


class NoEventsError(DataError):
    pass


class SingularError(DataError):
    pass


class ParameterError(ConfigError):
    pass


# -- generators
class UnsupportedModalityError(TabSynthError):
    pass


class CapabilityError(TabSynthError):
    pass


class FingerprintError(TabSynthError):
    pass


class ConditionError(DataError):
    """Interval evidence could not be met within the rejection budget."""


class VersionError(TabSynthError):
    pass


class CorruptionError(TabSynthError):
    pass


class ShortSeriesError(DataError):
    pass


class NonPositiveGapError(SeriesOrderError):
    pass


class InfeasibleError(DataError):
    pass


class UnknownDomainError(DataError):
    pass


# -- evaluation
class TaskMismatchError(DataError):
    pass


class UnknownMetricError(TabSynthError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
