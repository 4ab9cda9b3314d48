"""Exception types shared across the package."""


class SomnusError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SomnusError):
    pass


class MissingColumn(SomnusError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"required column missing: {name!r}")


class DuplicateKey(SomnusError):
    def __init__(self, pid, date):
        self.pid = pid
        self.date = date
        super().__init__(f"duplicate (pid, date): ({pid!r}, {date})")


class UnparseableNumber(SomnusError):
    def __init__(self, row, col, token):
        self.row = row
        self.col = col
        self.token = token
        super().__init__(f"row {row}, column {col!r}: cannot parse {token!r} as a number")


class EmptyColumn(SomnusError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"column {name!r} has no non-missing values")


class EmptyMatrix(SomnusError):
    pass


class EmptyTable(SomnusError):
    pass


class WrongKind(SomnusError):
    pass


class MissingFeature(SomnusError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"feature value missing: {name!r}")


class UnknownFeature(SomnusError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown feature: {name!r}")


class OutOfRange(SomnusError):
    def __init__(self, name, value):
        self.name = name
        self.value = value
        super().__init__(f"value {value} out of accepted range for {name!r}")


class LengthMismatch(SomnusError):
    pass


class DegenerateTarget(SomnusError):
    pass


class MalformedPrompt(SomnusError):
    pass


class GeneratorUnavailable(SomnusError):
    pass


class CorruptArtifact(SomnusError):
    pass
