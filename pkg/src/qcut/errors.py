"""Exception types raised by qcut."""


class QcutError(Exception):
    pass


class InvalidArgumentError(QcutError, ValueError):
    pass


class CutSetError(QcutError, ValueError):
    """The requested cuts do not split the circuit into separate fragments."""


class CircuitParseError(QcutError, ValueError):
    pass


class ResourceError(QcutError):
    """A simulation would exceed the configured statevector size."""


class IncompleteDataError(QcutError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class FitError(QcutError):
    pass


class TopologyError(QcutError, ValueError):
    pass


class DegenerateReconstructionError(QcutError, ValueError):
    pass


class InvalidDistributionError(QcutError, ValueError):
    pass


class InsufficientBudgetError(QcutError, ValueError):
    pass


class ReportParseError(QcutError, ValueError):
    pass
