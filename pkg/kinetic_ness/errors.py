"""Custom errors and exceptions."""


class KineticNessError(Exception):
    """Custom Exception for all errors."""

    error_code = 0
    # reason: machine-readable token written into the run summary
    reason = "unknown"
    # exit_code: process exit status used by the command line interface
    exit_code = 1

    def __init_subclass__(cls, *args, **kwargs) -> None:  # type: ignore[no-untyped-def]
        """Register a subclass."""
        super().__init_subclass__(*args, **kwargs)
        ERROR_MAP[cls.error_code] = cls


# mapping from error_code to Exception class
ERROR_MAP: dict[int, type] = {0: KineticNessError, 999: KineticNessError}


class ValidationError(KineticNessError):
    """Error raised when model parameters violate their invariants."""

    error_code = 1
    reason = "invalid_parameters"
    exit_code = 2

    def __init__(self, errors: list[str]) -> None:
        """Initialize."""
        super().__init__("; ".join(errors))
        self.errors = errors


class ConfigError(KineticNessError):
    """Error raised when a configuration document cannot be parsed."""

    error_code = 2
    reason = "invalid_config"
    exit_code = 2

    def __init__(self, *args: object, path: str | None = None, line: int | None = None) -> None:
        """Initialize."""
        super().__init__(*args)
        self.path = path
        self.line = line


class CFLViolationError(KineticNessError):
    """Error raised when the time step exceeds the transport stability bound."""

    error_code = 3
    reason = "cfl_violation"
    exit_code = 2


class BoundaryDataError(KineticNessError):
    """Error raised when a wall face needs a temperature that is not defined."""

    error_code = 4
    reason = "undefined_wall_temperature"
    exit_code = 2


class PerturbationError(KineticNessError):
    """Error raised when a perturbed initial state cannot be made admissible."""

    error_code = 5
    reason = "invalid_perturbation"
    exit_code = 2


class InstabilityError(KineticNessError):
    """Error raised when the evolved field stops being finite."""

    error_code = 6
    reason = "instability"
    exit_code = 3

    def __init__(self, *args: object, step_index: int = 0) -> None:
        """Initialize."""
        super().__init__(*args)
        self.step_index = step_index


class ConvergenceError(KineticNessError):
    """Error raised when a steady state is not reached within the step budget."""

    error_code = 7
    reason = "no_convergence"
    exit_code = 3

    def __init__(self, *args: object, residual: float = float("nan")) -> None:
        """Initialize."""
        super().__init__(*args)
        self.residual = residual


class FixedPointError(KineticNessError):
    """Error raised when the energy fixed-point iteration fails."""

    error_code = 8
    reason = "fixed_point_failure"
    exit_code = 3


class OracleError(KineticNessError):
    """Error raised when a reference quadrature does not converge."""

    error_code = 9
    reason = "quadrature_failure"
    exit_code = 3


class OutputError(KineticNessError):
    """Error raised when result files cannot be written or read."""

    error_code = 10
    reason = "io_failure"
    exit_code = 1

    def __init__(self, *args: object, path: str | None = None) -> None:
        """Initialize."""
        super().__init__(*args)
        self.path = path


class InvalidFieldError(KineticNessError):
    """Error raised when a distribution field breaks its invariants."""

    error_code = 11
    reason = "invalid_field"
    exit_code = 3
