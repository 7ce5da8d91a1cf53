"""Exception hierarchy shared by every ofusion module."""


class OFusionError(Exception):
    """Base class for all errors raised by ofusion."""


class DimensionMismatch(OFusionError, ValueError):
    """Inputs live in different ambient spaces or have incompatible shapes."""


class DecompositionError(OFusionError):
    """The ambient space is not the direct sum V + W^perp.

    ``min_singular`` is the smallest singular value of the cross-Gram matrix
    between the two bases (0 when the dimensions differ).
    """

    def __init__(self, message, min_singular=0.0):
        super().__init__(message)
        self.min_singular = min_singular


class MembershipError(OFusionError, ValueError):
    """A vector does not lie in the subspace it is attached to."""


class StructureError(OFusionError):
    """An operator lacks a structure the operation requires (e.g. block-diagonal)."""


class SideConditionError(OFusionError):
    """A range/kernel hypothesis of a construction fails.

    ``diagnostics`` maps the quantity checked to its observed value.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DualityError(OFusionError):
    """A pair that was required to be dual fails verification."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NoAdmissibleBlockError(OFusionError):
    """No block index satisfies the hypotheses of the non-canonical construction."""
