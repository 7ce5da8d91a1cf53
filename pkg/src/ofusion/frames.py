"""Finite vector frames and oblique dual frames between two subspaces."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, OFusionError
from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerance,
    adjoint,
    frobenius_norm,
    oblique_projector,
    orthonormalize,
    pseudo_inverse,
    same_subspace,
)

__all__ = [
    "VectorFrame",
    "synthesis",
    "analysis",
    "frame_operator",
    "frame_bounds",
    "canonical_oblique_dual_frame",
    "canonical_dual_frame",
    "verify_oblique_dual_frames",
    "oblique_dual_residual",
    "is_dual_frame",
    "oblique_left_inverse",
]


class VectorFrame:
    """An ordered family of ambient vectors, stored as the columns of an ``n x k`` array.

    Zero columns are allowed; they do not contribute to the span.
    """

    def __init__(self, vectors, ambient_dim: int | None = None):
        if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
            cols = vectors
        else:
            vecs = [np.asarray(v) for v in vectors]
            if not vecs:
                if ambient_dim is None:
                    raise DimensionMismatch("empty frame needs an explicit ambient dimension")
                cols = np.zeros((ambient_dim, 0))
            else:
                if len({v.shape for v in vecs}) != 1 or vecs[0].ndim != 1:
                    raise DimensionMismatch("frame vectors must share one length")
                cols = np.column_stack(vecs)
        if ambient_dim is not None and cols.shape[0] != ambient_dim:
            raise DimensionMismatch(f"expected vectors of length {ambient_dim}, got {cols.shape[0]}")
        cols = np.array(cols, dtype=np.result_type(cols, np.float64))
        if not np.all(np.isfinite(cols)):
            raise ValueError("frame vectors must be finite")
        cols.setflags(write=False)
        self._matrix = cols

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def ambient_dim(self) -> int:
        return self._matrix.shape[0]

    def __len__(self) -> int:
        return self._matrix.shape[1]

    @property
    def vectors(self) -> list:
        return [self._matrix[:, k] for k in range(len(self))]

    @cached_property
    def span(self) -> Subspace:
        return orthonormalize(self._matrix, ambient_dim=self.ambient_dim)

    def scaled(self, c) -> "VectorFrame":
        return VectorFrame(self._matrix * c)

    def padded(self, count: int) -> "VectorFrame":
        """The same frame with ``count`` zero vectors appended."""
        z = np.zeros((self.ambient_dim, count), dtype=self._matrix.dtype)
        return VectorFrame(np.hstack([self._matrix, z]))

    def __repr__(self):
        return f"VectorFrame(n={self.ambient_dim}, size={len(self)})"


def synthesis(F: VectorFrame) -> np.ndarray:
    return np.array(F.matrix)


def analysis(F: VectorFrame) -> np.ndarray:
    return adjoint(F.matrix)


def frame_operator(F: VectorFrame) -> np.ndarray:
    return F.matrix @ adjoint(F.matrix)


def frame_bounds(F: VectorFrame, W: Subspace) -> tuple[float, float]:
    """Extreme eigenvalues of the frame operator compressed to W."""
    if F.ambient_dim != W.ambient_dim:
        raise DimensionMismatch("frame and subspace live in different ambient spaces")
    if W.dim == 0:
        return 0.0, 0.0
    compressed = adjoint(W.basis) @ frame_operator(F) @ W.basis
    ev = np.linalg.eigvalsh((compressed + adjoint(compressed)) / 2)
    return max(float(ev[0]), 0.0), float(ev[-1])


def _require_frame_for(F: VectorFrame, W: Subspace, tol: Tolerance):
    if not same_subspace(F.span, W, tol):
        raise OFusionError(
            f"family is not a frame for the given subspace (span dim {F.span.dim}, target dim {W.dim})")


def canonical_oblique_dual_frame(F: VectorFrame, V: Subspace, W: Subspace | None = None,
                                 tol: Tolerance = DEFAULT_TOL) -> VectorFrame:
    """g_i = P S_F^+ f_i with P the oblique projector onto V along W^perp."""
    W = F.span if W is None else W
    _require_frame_for(F, W, tol)
    P = oblique_projector(V, W, tol)
    return VectorFrame(P @ pseudo_inverse(frame_operator(F), tol) @ F.matrix)


def canonical_dual_frame(F: VectorFrame, tol: Tolerance = DEFAULT_TOL) -> VectorFrame:
    """S_F^+ f_i: the canonical dual inside span(F)."""
    return VectorFrame(pseudo_inverse(frame_operator(F), tol) @ F.matrix)


def oblique_dual_residual(F: VectorFrame, G: VectorFrame, V: Subspace, W: Subspace | None = None,
                          tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """``(||T_G T_F^H - P||_F, ||P||_F)`` for the oblique projector P onto V along W^perp."""
    if len(F) != len(G):
        raise DimensionMismatch(f"frames have different cardinalities ({len(F)} vs {len(G)})")
    W = F.span if W is None else W
    P = oblique_projector(V, W, tol)
    return frobenius_norm(G.matrix @ adjoint(F.matrix) - P), frobenius_norm(P)


def verify_oblique_dual_frames(F: VectorFrame, G: VectorFrame, V: Subspace, W: Subspace | None = None,
                               tol: Tolerance = DEFAULT_TOL) -> bool:
    residual, pnorm = oblique_dual_residual(F, G, V, W, tol)
    return residual <= tol.eq_abs_tol * (1 + pnorm)


def is_dual_frame(F: VectorFrame, G: VectorFrame, W: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``T_G T_F^H`` is the orthogonal projector onto W."""
    if len(F) != len(G):
        return False
    return frobenius_norm(G.matrix @ adjoint(F.matrix) - W.projector) <= tol.eq_abs_tol * (1 + np.sqrt(W.dim))


def oblique_left_inverse(F: VectorFrame, V: Subspace, W: Subspace | None = None, B=None,
                         tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``P S_F^+ T_F + B (I - T_F^H S_F^+ T_F)``: a map with ``A T_F^H = P`` and range V.

    ``B`` must map into V; ``None`` gives the canonical choice.
    """
    W = F.span if W is None else W
    P = oblique_projector(V, W, tol)
    t = F.matrix
    Sp = pseudo_inverse(frame_operator(F), tol)
    a = P @ Sp @ t
    if B is not None:
        B = np.asarray(B)
        if B.shape != t.shape:
            raise DimensionMismatch(f"B must have shape {t.shape}, got {B.shape}")
        if frobenius_norm(B - V.project(B)) > tol.eq_abs_tol * (1 + frobenius_norm(B)):
            raise OFusionError("B does not map into V")
        a = a + B @ (np.eye(len(F)) - adjoint(t) @ Sp @ t)
    return a
