"""Exception hierarchy shared across the package."""


class FilmControlError(Exception):
    """Base class for all errors raised by filmctrl."""


class ConfigError(FilmControlError):
    """Invalid configuration text or value; carries the offending key/line."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix = f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


class NonStabilisableError(FilmControlError):
    """The Riccati Hamiltonian has eigenvalues on the imaginary axis beyond
    tolerance, so no stabilising solution exists for the given (J, Psi)."""


class IllConditionedError(FilmControlError):
    """A solver-specific basis became near-singular; retry with the
    alternative Riccati method."""


class InsufficientActuatorsError(FilmControlError):
    """Fewer actuators than unstable modes: the restricted actuator matrix
    loses row rank and the reduced synthesis cannot proceed."""


class BlowUpError(FilmControlError):
    """Finite-time blow-up detected during time integration."""

    def __init__(self, time, detail=""):
        self.time = time
        super().__init__(f"blow-up detected at t = {time:.6g}" + (f" ({detail})" if detail else ""))


class NewtonError(FilmControlError):
    """Newton iteration diverged or exhausted its iteration budget."""

    def __init__(self, message, iterations=0, residual=float("nan"), diverged=False):
        self.iterations = iterations
        self.residual = residual
        self.diverged = diverged
        super().__init__(message)


class InsufficientDataError(FilmControlError):
    """Not enough usable samples for a statistical fit."""
