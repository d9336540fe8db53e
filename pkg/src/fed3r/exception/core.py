from typing import Any


class Fed3RException(Exception):
    """
    Parent exception for the fed3r package. Every subclass carries a snake_case
    `detail` (safe to expose to clients) and the process exit code the CLI
    returns when the exception escapes a subcommand.
    """

    exit_code: int = 3

    def __init__(self, detail: Any = "fed3r_failure"):
        super().__init__(detail)
        self.detail = detail


# base exception to group and catch all invalid input related exceptions
class InvalidInputException(Fed3RException):
    exit_code = 1

    def __init__(self, detail: Any = "invalid_input"):
        super().__init__(detail=detail)


class InvalidParams(InvalidInputException):
    def __init__(self, detail: Any = "invalid_params"):
        super().__init__(detail=detail)


class InvalidBandwidth(InvalidInputException):
    def __init__(self, detail: Any = "invalid_bandwidth"):
        super().__init__(detail=detail)


class LabelOutOfRange(InvalidInputException):
    def __init__(self, detail: Any = "label_out_of_range"):
        super().__init__(detail=detail)


class TooManyClients(InvalidInputException):
    def __init__(self, detail: Any = "too_many_clients"):
        super().__init__(detail=detail)


class EmptyClass(InvalidInputException):
    def __init__(self, detail: Any = "empty_class"):
        super().__init__(detail=detail)


class EmptyGrid(InvalidInputException):
    def __init__(self, detail: Any = "empty_grid"):
        super().__init__(detail=detail)


class EmptyDataset(InvalidInputException):
    def __init__(self, detail: Any = "empty_dataset"):
        super().__init__(detail=detail)


class UnknownAlgorithm(InvalidInputException):
    def __init__(self, detail: Any = "unknown_algorithm"):
        super().__init__(detail=detail)


# base exception to group and catch all file/manifest related exceptions
class DataIoException(Fed3RException):
    exit_code = 2

    def __init__(self, detail: Any = "data_io_failure"):
        super().__init__(detail=detail)


class IoFailure(DataIoException):
    def __init__(self, detail: Any = "io_failure"):
        super().__init__(detail=detail)


class BadMagic(DataIoException):
    def __init__(self, detail: Any = "bad_magic"):
        super().__init__(detail=detail)


class VersionUnsupported(DataIoException):
    def __init__(self, detail: Any = "version_unsupported"):
        super().__init__(detail=detail)


class TruncatedFile(DataIoException):
    def __init__(self, detail: Any = "truncated_file"):
        super().__init__(detail=detail)


class CorruptFile(DataIoException):
    def __init__(self, detail: Any = "corrupt_file"):
        super().__init__(detail=detail)


class InvalidManifest(DataIoException):
    def __init__(self, detail: Any = "invalid_manifest"):
        super().__init__(detail=detail)


# base exception to group and catch all solver/runtime state related exceptions
class NumericalException(Fed3RException):
    exit_code = 3

    def __init__(self, detail: Any = "numerical_failure"):
        super().__init__(detail=detail)


class DimensionMismatch(NumericalException):
    def __init__(self, detail: Any = "dimension_mismatch"):
        super().__init__(detail=detail)


class NotPositiveDefinite(NumericalException):
    def __init__(self, detail: Any = "not_positive_definite"):
        super().__init__(detail=detail)


class PoolExhausted(NumericalException):
    def __init__(self, detail: Any = "client_pool_exhausted"):
        super().__init__(detail=detail)
