"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for configuration problems, 3 for bad data, 4 for numeric failures.
"""


class HetNewsError(Exception):
    exit_code = 1


class ConfigError(HetNewsError):
    exit_code = 2


class GuardError(ConfigError):
    pass


class BadRate(ConfigError):
    pass


class KindMismatch(ConfigError):
    pass


class DataError(HetNewsError):
    exit_code = 3


class UnknownType(DataError):
    pass


class UnknownNode(DataError):
    pass


class SchemaViolation(DataError):
    pass


class MalformedRow(DataError):
    pass


class BadDate(DataError):
    pass


class EmptyGraph(DataError):
    pass


class AlreadyAugmented(DataError):
    pass


class InfeasibleCounts(DataError):
    pass


class RelationTooSmall(DataError):
    pass


class EmptyTestSet(DataError):
    pass


class TypeExhausted(DataError):
    pass


class NumericError(HetNewsError):
    exit_code = 4


class ShapeMismatch(NumericError):
    pass


class HeadWidthError(ShapeMismatch):
    pass


class OddDim(NumericError):
    pass


class NonFiniteGradient(NumericError):
    pass


class DivergedLoss(NumericError):
    pass
