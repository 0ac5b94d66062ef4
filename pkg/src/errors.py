"""Wyjątki i kody wyjścia CLI"""

from typing import Optional


class SqdToolError(Exception):
    """Wspólna baza wszystkich błędów zgłaszanych przez pakiet."""

    exit_code = 1


class InputError(SqdToolError, ValueError):
    """Błędne dane wejściowe (plik, argument, parametr)."""

    exit_code = 2


class _LineError(InputError):
    # Błąd przypięty do numeru linii pliku wejściowego
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"linia {line_number}: {message}"
        super().__init__(message)


class ParseError(_LineError):
    pass


class RangeError(_LineError):
    pass


class InconsistencyError(_LineError):
    pass


class ConflictError(_LineError):
    pass


class ArgumentError(InputError):
    pass


class LengthError(InputError):
    pass


class NormalizationError(InputError):
    pass


class EmptyInputError(InputError):
    pass


class CapacityError(InputError):
    pass


class FormatError(InputError):
    pass


class NamingError(InputError):
    pass


class ConfigError(InputError):
    pass


class ConvergenceError(SqdToolError, RuntimeError):
    """Solver nie osiągnął zadanej tolerancji residuum."""

    exit_code = 3

    def __init__(self, message: str, best_residual: float = float("nan")):
        self.best_residual = best_residual
        super().__init__(f"{message} (najlepsze residuum {best_residual:.3e})")


class PlanError(SqdToolError, ValueError):
    """Niepoprawny plan podziału kubitów."""

    exit_code = 4


class PlacementError(PlanError):
    pass


def exit_code_for(exc: BaseException) -> int:
    return exc.exit_code if isinstance(exc, SqdToolError) else 1
