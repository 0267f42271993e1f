"""Exception types shared across the library."""


class TempolinkError(Exception):
    """Base class for all library-specific failures."""


class ShapeError(TempolinkError, ValueError):
    """Operands have incompatible shapes; the message names both."""


class NonFiniteError(TempolinkError, ValueError):
    """A tensor contains NaN or Inf (raised only with debug checks on)."""


class EmptySupportError(TempolinkError, ValueError):
    """Masked softmax was asked to normalize over an empty support."""


class ParseError(TempolinkError, ValueError):
    """An edge-list line could not be parsed; carries the line number."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class SliceError(TempolinkError, ValueError):
    """No edge fell inside the configured snapshot span."""


class DegenerateInputError(TempolinkError, ValueError):
    """Input is structurally empty (e.g. zero nodes)."""


class MetricUndefinedError(TempolinkError, ValueError):
    """A rank metric has an empty positive or negative set; names which."""


class ProtocolError(TempolinkError, ValueError):
    """The sliding-window training protocol was invoked out of range."""


class ResourceLimitError(TempolinkError, ValueError):
    """Configuration exceeds the dense desk-scale budget (N > 1200)."""


class DivergenceError(TempolinkError, RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
