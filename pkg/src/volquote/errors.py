"""Exception hierarchy shared by every volquote module."""


class VolquoteError(Exception):
    """Base class for all library errors."""


class ParameterError(VolquoteError, ValueError):
    """Invalid model, claim or run parameters (user-correctable)."""


class ClaimError(ParameterError):
    """A claim specification that cannot be priced."""


class NumericalError(VolquoteError, RuntimeError):
    """A numerical routine failed an internal consistency check."""


class GridError(NumericalError):
    """The Fourier lattice cannot satisfy its tail or coverage requirements."""


class BranchTrackingError(NumericalError):
    """The complex logarithm phase jumped by more than pi between lattice points."""
