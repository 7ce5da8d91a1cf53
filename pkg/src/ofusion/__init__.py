"""Oblique dual fusion frames on F^n: construction, verification and reconstruction."""

from .errors import (
    DecompositionError,
    DimensionMismatch,
    DualityError,
    MembershipError,
    NoAdmissibleBlockError,
    OFusionError,
    SideConditionError,
    StructureError,
)
from .frames import VectorFrame
from .fusion import BlockMask, FusionFrame, KElement
from .linalg import DEFAULT_TOL, Field, Subspace, Tolerance
from .oblique import ObliqueLeftInverse, QOperator, Structure
from .systems import FrameSystem

__version__ = "0.1.0"

__all__ = [
    "BlockMask",
    "DEFAULT_TOL",
    "DecompositionError",
    "DimensionMismatch",
    "DualityError",
    "Field",
    "FrameSystem",
    "FusionFrame",
    "KElement",
    "MembershipError",
    "NoAdmissibleBlockError",
    "OFusionError",
    "ObliqueLeftInverse",
    "QOperator",
    "SideConditionError",
    "Structure",
    "StructureError",
    "Subspace",
    "Tolerance",
    "VectorFrame",
]
