"""Exception hierarchy.

Every error raised on purpose by the package derives from ``Plot2ApiError``
so the CLI can map it to an exit code and print the class name.
"""


class Plot2ApiError(Exception):
    exit_code = 1


class MissingFile(Plot2ApiError, FileNotFoundError):
    pass


class MalformedRow(Plot2ApiError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class UnknownApi(Plot2ApiError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown API {self.name!r}"


class EmptyLabelSet(Plot2ApiError, ValueError):
    pass


class InvalidVocabulary(Plot2ApiError, ValueError):
    pass


class InsufficientSamplesForApi(Plot2ApiError, ValueError):
    def __init__(self, name: str, count: int):
        super().__init__(f"API {name!r} has {count} sample(s); at least 2 are needed")
        self.name = name
        self.count = count


class InvalidSpec(Plot2ApiError, ValueError):
    pass


class UnwritableOutput(Plot2ApiError, OSError):
    pass


class EmptyTable(MissingFile):
    pass


class InconsistentDimension(Plot2ApiError, ValueError):
    def __init__(self, line: int, expected: int, got: int):
        super().__init__(f"line {line}: expected {expected} values, got {got}")
        self.line = line


class InvalidSize(Plot2ApiError, ValueError):
    pass


class InvalidImage(Plot2ApiError, ValueError):
    pass


class ShapeMismatch(Plot2ApiError, ValueError):
    pass


class WrongInputSize(ShapeMismatch):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class NonFiniteInput(Plot2ApiError, ValueError):
    pass


class NegativeAlpha(Plot2ApiError, ValueError):
    pass


class NoPositives(Plot2ApiError, ValueError):
    pass


class NonFiniteLoss(Plot2ApiError, FloatingPointError):
    exit_code = 3

    def __init__(self, step: int, components: dict):
        parts = ", ".join(f"{k}={v}" for k, v in components.items())
        super().__init__(f"non-finite loss at step {step} ({parts})")
        self.step = step
        self.components = components


class VocabularyMismatch(Plot2ApiError, ValueError):
    pass


class UnmappableApi(Plot2ApiError, KeyError):
    def __str__(self):
        return f"cannot map API {self.args[0]!r}"


class UnreadableImage(Plot2ApiError, ValueError):
    pass


class BadK(Plot2ApiError, ValueError):
    pass


class InvalidConfig(Plot2ApiError, ValueError):
    pass


class UsageError(Plot2ApiError):
    exit_code = 2
