"""Exception hierarchy shared by all modules."""


class WignerCtxError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(WignerCtxError, ValueError):
    """Shapes or mode counts do not match."""


class PhysicalityError(WignerCtxError, ValueError):
    """A state violates symmetry, positivity, normalization or uncertainty."""


class TruncationError(WignerCtxError):
    """A Fock-space operation leaked more weight than the truncation budget allows."""

    def __init__(self, message, trace_loss=None):
        super().__init__(message)
        self.trace_loss = trace_loss


class CoverageError(WignerCtxError):
    """A grid or set of bins does not cover the support of the state."""

    def __init__(self, message, captured_mass=None):
        super().__init__(message)
        self.captured_mass = captured_mass


class UnsupportedError(WignerCtxError):
    """The requested (state, operation) combination is not implemented."""


class ConvergenceError(WignerCtxError):
    """A numerical integral failed its own convergence diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NegativeWignerError(WignerCtxError):
    """No hidden-variable model exists: the Wigner function takes negative values.

    The offending :class:`~wignerctx.wigner.NegativityReport` is kept on
    ``report`` so callers can inspect the witness.
    """

    def __init__(self, report):
        super().__init__(
            f"Wigner function is negative (min {report.min_value:.6g}, "
            f"negativity volume {report.negativity_volume:.6g})"
        )
        self.report = report


class ParseError(WignerCtxError, ValueError):
    """Syntax error in a quadrature expression, with the offending position."""

    def __init__(self, message, text, position):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position
