"""Exception hierarchy shared by every module."""

from __future__ import annotations


class MacError(Exception):
    """Base class for all errors raised by maccollab."""


class InvalidConfig(MacError, ValueError):
    pass


class InvalidInput(MacError, ValueError):
    pass


class TooFewRows(MacError, ValueError):
    pass


class UninformativeTarget(MacError, ValueError):
    pass


class TrainingDiverged(MacError, ArithmeticError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class TuningFailed(MacError):
    def __init__(self, errors: list[tuple[dict, Exception]]):
        lines = "; ".join(f"{hp}: {err}" for hp, err in errors)
        super().__init__(f"every grid point failed to fit: {lines}")
        self.errors = errors


class MachineFitError(MacError):
    """A base machine failed inside an ensemble loop."""

    def __init__(self, machine_index: int, iteration: int, cause: Exception):
        super().__init__(
            f"machine {machine_index} failed at iteration {iteration}: {cause}"
        )
        self.machine_index = machine_index
        self.iteration = iteration
        self.cause = cause


class FactorizationFailed(MacError, ValueError):
    pass


class CalibrationFailed(MacError, ValueError):
    pass


class FetchFailed(MacError, OSError):
    def __init__(self, name: str, reason: str = ""):
        msg = f"could not fetch dataset {name!r}"
        super().__init__(f"{msg}: {reason}" if reason else msg)
        self.name = name


class CorruptCache(MacError, OSError):
    pass


class BadFormat(MacError, ValueError):
    pass


class DegenerateStatistic(MacError, ValueError):
    pass
