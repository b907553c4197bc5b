"""Error hierarchy shared by every workbench module

Each error carries the process exit code the CLI reports when it escapes a command:
0 success, 2 configuration error, 3 data error, 4 divergence.
"""


class DerenderError(Exception):
    """Base class for all workbench errors"""
    exit_code = 1


class ConfigError(DerenderError):
    """Invalid configuration, flags or task selection"""
    exit_code = 2


class DataError(DerenderError, ValueError):
    """Input data that violates a documented contract"""
    exit_code = 3


class DivergenceDetected(DerenderError):
    """Training produced a non-finite loss or parameter"""
    exit_code = 4

    def __init__(self, message: str, step: int = -1, last_finite_step: int = -1):
        super().__init__(message)
        self.step = step
        self.last_finite_step = last_finite_step


# scene-core
class UnknownAttribute(DataError):
    pass


class UnknownShape(DataError):
    pass


# dsl-codec
class ProgramSyntaxError(DataError):
    """A program line does not match the `add(key=value, ...)` grammar"""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ArityError(ProgramSyntaxError):
    pass


class DuplicateKey(ProgramSyntaxError):
    pass


class NonFinite(DataError):
    pass


class UnserializableRotation(ConfigError):
    pass


# rotkit
class NonUnitAxis(DataError):
    pass


class DegenerateSixD(DataError):
    pass


# datagen
class OutOfBounds(DataError):
    pass


class EmptyRegion(ConfigError):
    pass


# numstream
class UnencodableText(DataError):
    pass


class SlotMismatch(DataError):
    pass


# toynet
class ContextOverflow(DataError):
    pass


class MalformedGeneration(DataError):
    pass


# evalkit
class LengthMismatch(DataError):
    pass


class EmptyScene(DataError):
    pass


class EmptyInput(DataError):
    pass


# cli / plotting
class MissingColumn(DataError):
    pass
