"""utils/initialization."""

import contextlib
import platform


def emojis(str=""):
    """Returns an emoji-safe version of a string, stripped of emojis on Windows platforms."""
    return str.encode().decode("ascii", "ignore") if platform.system() == "Windows" else str


class CarmaError(Exception):
    """Base class for every error raised by stablecarma."""

    exit_code = 1


class ConfigError(CarmaError, ValueError):
    """Invalid parameters, configs or violated preconditions."""

    exit_code = 2


class NumericalError(CarmaError, ArithmeticError):
    """A numerical routine failed: non-convergence, singular systems or non-finite states."""

    exit_code = 3


class EstimationFailure(NumericalError):
    """A stage of the indirect ARMA-based estimator failed; `stage` names it."""

    def __init__(self, stage, msg=""):
        """Initializes the failure with the pipeline `stage` (arma_mle, log_root or ma_match) and a message."""
        super().__init__(f"{stage}: {msg}" if msg else stage)
        self.stage = stage


class TryExcept(contextlib.ContextDecorator):
    """Context manager and decorator that logs a CarmaError with an optional message and swallows it."""

    def __init__(self, msg=""):
        """Initializes TryExcept with an optional message prefix."""
        self.msg = msg
        self.error = None

    def __enter__(self):
        """Enter the runtime context."""
        return self

    def __exit__(self, exc_type, value, traceback):
        """Logs and suppresses CarmaError instances, lets every other exception propagate."""
        if isinstance(value, CarmaError):
            from utils.general import LOGGER

            self.error = value
            LOGGER.warning(f"WARNING ⚠️ {self.msg}{': ' if self.msg else ''}{value}")
            return True
        return False
