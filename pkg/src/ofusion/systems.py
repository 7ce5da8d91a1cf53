"""Fusion frame systems: a fusion frame plus a local vector frame in each block."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, OFusionError, SideConditionError, StructureError
from .frames import (
    VectorFrame,
    canonical_dual_frame,
    frame_bounds,
    is_dual_frame,
    verify_oblique_dual_frames,
)
from .fusion import FusionFrame
from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerance,
    adjoint,
    direct_sum_complement_check,
    frobenius_norm,
    image,
    numerical_rank,
    oblique_projector,
    pseudo_inverse,
    same_subspace,
    spectral_norm,
)
from .oblique import (
    DualityReport,
    ObliqueLeftInverse,
    QOperator,
    dual_from_left_inverse,
    verify_oblique_dual,
)

__all__ = [
    "FrameSystem",
    "CouplingOperator",
    "SystemDualReport",
    "coupling",
    "associated_frame",
    "system_dual_check",
    "factor_q",
    "construct_system_dual_local",
    "construct_system_dual_standard_basis",
    "local_dual_bound_envelope",
    "project_system",
]


class FrameSystem:
    """A fusion frame whose i-th block carries a vector frame ``locals[i]`` spanning W_i."""

    def __init__(self, fusion: FusionFrame, locals: Sequence[VectorFrame], tol: Tolerance = DEFAULT_TOL):
        locals = tuple(locals)
        if len(locals) != len(fusion):
            raise DimensionMismatch(f"{len(fusion)} blocks but {len(locals)} local frames")
        for i, (s, F) in enumerate(zip(fusion.subspaces, locals)):
            if F.ambient_dim != fusion.ambient_dim:
                raise DimensionMismatch(f"local frame {i} lives in the wrong ambient space")
            if not same_subspace(F.span, s, tol):
                raise OFusionError(f"local frame {i} does not span its block")
        self.fusion = fusion
        self.locals = locals

    @classmethod
    def from_locals(cls, locals: Sequence[VectorFrame], weights, tol: Tolerance = DEFAULT_TOL) -> "FrameSystem":
        """Build the system whose blocks are the spans of the given local frames."""
        locals = tuple(locals)
        return cls(FusionFrame([F.span for F in locals], weights), locals, tol)

    @property
    def sizes(self) -> tuple:
        return tuple(len(F) for F in self.locals)

    @cached_property
    def local_bounds(self) -> list:
        return [frame_bounds(F, s) for F, s in zip(self.locals, self.fusion.subspaces)]

    @property
    def local_extremes(self) -> tuple[float, float]:
        """``(min alpha_i, max beta_i)`` over the blocks."""
        b = self.local_bounds
        return min(a for a, _ in b), max(c for _, c in b)

    def __repr__(self):
        return f"FrameSystem({self.fusion!r}, sizes={list(self.sizes)})"


@dataclass(frozen=True)
class CouplingOperator:
    """Block-diagonal map from local coefficient space into K_W."""

    matrix: np.ndarray
    row_blocks: tuple
    col_blocks: tuple

    def adjoint(self) -> np.ndarray:
        return adjoint(self.matrix)


def coupling(fs: FrameSystem) -> CouplingOperator:
    blocks = [adjoint(s.basis) @ F.matrix for s, F in zip(fs.fusion.subspaces, fs.locals)]
    m = scipy.linalg.block_diag(*blocks) if blocks else np.zeros((0, 0))
    m = m.reshape(sum(fs.fusion.block_dims), sum(fs.sizes))
    return CouplingOperator(m, fs.fusion.block_dims, fs.sizes)


def associated_frame(fs: FrameSystem) -> VectorFrame:
    """The flattened family ``{w_i f_{i,l}}``."""
    cols = [w * F.matrix for w, F in zip(fs.fusion.weights, fs.locals)]
    return VectorFrame(np.hstack(cols), ambient_dim=fs.fusion.ambient_dim)


@dataclass(frozen=True)
class SystemDualReport:
    q: QOperator
    system: DualityReport
    frame_level: bool
    frame_residual: float

    @property
    def passed(self) -> bool:
        return self.system.passed

    @property
    def agree(self) -> bool:
        return self.system.passed == self.frame_level

    def as_dict(self) -> dict:
        return {"system": self.system.as_dict(),
                "frame_level": {"pass": self.frame_level, "residual": self.frame_residual},
                "agree": self.agree}


def system_dual_check(ws: FrameSystem, vs: FrameSystem, tol: Tolerance = DEFAULT_TOL) -> SystemDualReport:
    """System-level duality with ``Q = C_G C_F^H`` next to the frame-level verdict for ``wF`` and ``vG``."""
    if len(ws.fusion) != len(vs.fusion):
        raise DimensionMismatch("systems have different numbers of blocks")
    if ws.sizes != vs.sizes:
        raise DimensionMismatch(f"local frame sizes differ: {list(ws.sizes)} vs {list(vs.sizes)}")
    cf, cg = coupling(ws), coupling(vs)
    q = QOperator(cg.matrix @ cf.adjoint(), vs.fusion.block_dims, ws.fusion.block_dims, tol)
    report = verify_oblique_dual(ws.fusion, vs.fusion, q, tol)
    wF, vG = associated_frame(ws), associated_frame(vs)
    W, V = ws.fusion.span, vs.fusion.span
    P = oblique_projector(V, W, tol)
    frame_residual = frobenius_norm(vG.matrix @ adjoint(wF.matrix) - P)
    frame_ok = verify_oblique_dual_frames(wF, vG, V, W, tol)
    return SystemDualReport(q, report, frame_ok, frame_residual)


def factor_q(q: QOperator, wff: FusionFrame, vff: FusionFrame,
             tol: Tolerance = DEFAULT_TOL) -> tuple[FrameSystem, FrameSystem]:
    """Local frames F (orthonormal bases of W_i) and G with ``C_G C_F^H = Q``.

    Where ``Q_ii`` is not onto, G_i is completed by a basis of the rest of
    V_i and F_i receives the same number of zero vectors.
    """
    if not q.is_block_diagonal:
        raise StructureError("factorization needs a block-diagonal Q")
    if q.row_blocks != vff.block_dims or q.col_blocks != wff.block_dims:
        raise DimensionMismatch("Q does not conform to the fusion frames")
    F, G = [], []
    for i, (sw, sv) in enumerate(zip(wff.subspaces, vff.subspaces)):
        qi = q.block(i, i)
        g = sv.basis @ qi
        f = sw.basis
        rest = image(np.eye(sv.dim) - qi @ pseudo_inverse(qi, tol), tol=tol, ref=1.0) \
            if sv.dim else None
        if rest is not None and rest.dim:
            g = np.hstack([g, sv.basis @ rest.basis])
            f = np.hstack([f, np.zeros((wff.ambient_dim, rest.dim), dtype=f.dtype)])
        F.append(VectorFrame(f, ambient_dim=wff.ambient_dim))
        G.append(VectorFrame(g, ambient_dim=vff.ambient_dim))
    return FrameSystem(wff, F, tol), FrameSystem(vff, G, tol)


def _check_local_duals(ws: FrameSystem, local_duals, tol):
    for i, (s, F, Fd) in enumerate(zip(ws.fusion.subspaces, ws.locals, local_duals)):
        if len(Fd) != len(F) or not is_dual_frame(F, Fd, s, tol):
            raise SideConditionError(f"local frame {i} and its proposed dual are not dual in W_{i}",
                                     {"block": i})


def construct_system_dual_local(ws: FrameSystem, A: ObliqueLeftInverse, v=None, local_duals=None,
                                tol: Tolerance = DEFAULT_TOL) -> FrameSystem:
    """``g_{i,l} = (1/v_i) A (f~_{i,l} placed in block i)`` for local duals ``f~``.

    The local duals default to the canonical dual of each local frame.
    """
    fus = ws.fusion
    v = fus.weights if v is None else np.asarray(v, dtype=float)
    if v.shape != (len(fus),) or np.any(v <= 0):
        raise ValueError("need one strictly positive weight per block")
    if local_duals is None:
        local_duals = [canonical_dual_frame(F, tol) for F in ws.locals]
    local_duals = list(local_duals)
    if len(local_duals) != len(fus):
        raise DimensionMismatch("need one local dual per block")
    _check_local_duals(ws, local_duals, tol)
    vff, _ = dual_from_left_inverse(fus, A, v, tol)
    G = []
    for i, (s, Fd) in enumerate(zip(fus.subspaces, local_duals)):
        ai = A.matrix[:, fus.block_slice(i)]
        G.append(VectorFrame(ai @ (adjoint(s.basis) @ Fd.matrix) / v[i], ambient_dim=fus.ambient_dim))
    return FrameSystem(vff, G, tol)


def construct_system_dual_standard_basis(ws: FrameSystem, A, v=None, V: Subspace | None = None,
                                         tol: Tolerance = DEFAULT_TOL) -> FrameSystem:
    """``g_{i,l} = (1/v_i) A e_{i,l}`` for a vector-level oblique left inverse A of ``T_{wF}^H``.

    ``A`` is ``n x sum(|F_i|)``; V defaults to its range.
    """
    fus = ws.fusion
    A = np.asarray(A)
    wF = associated_frame(ws)
    if A.shape != (fus.ambient_dim, len(wF)):
        raise DimensionMismatch(f"A must be {fus.ambient_dim} x {len(wF)}, got {A.shape}")
    v = fus.weights if v is None else np.asarray(v, dtype=float)
    if v.shape != (len(fus),) or np.any(v <= 0):
        raise ValueError("need one strictly positive weight per block")
    V = image(A, tol=tol) if V is None else V
    W = fus.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise SideConditionError("range of A is not a complement of W^perp",
                                 {"dim_range": V.dim, "dim_W": W.dim, "min_singular": smin})
    P = oblique_projector(V, W, tol)
    residual = frobenius_norm(A @ adjoint(wF.matrix) - P)
    outside = frobenius_norm(A - V.project(A))
    if residual > tol.eq_abs_tol * (1 + frobenius_norm(P)) or outside > tol.eq_abs_tol * (1 + frobenius_norm(A)) \
            or numerical_rank(A, tol) != V.dim:
        raise SideConditionError("A is not an oblique left inverse of the associated analysis operator",
                                 {"left_inverse_residual": residual, "range_residual": outside})
    ref = max(spectral_norm(A), 1.0)
    offs = np.concatenate([[0], np.cumsum(ws.sizes)]).astype(int)
    G, subs = [], []
    for i in range(len(fus)):
        gi = A[:, offs[i]:offs[i + 1]] / v[i]
        subs.append(image(gi, tol=tol, ref=ref / v[i]) if gi.size else Subspace.zero(fus.ambient_dim))
        G.append(VectorFrame(gi, ambient_dim=fus.ambient_dim))
    return FrameSystem(FusionFrame(subs, v), G, tol)


def local_dual_bound_envelope(ws: FrameSystem, vs: FrameSystem, A, v, local_duals=None,
                              tol: Tolerance = DEFAULT_TOL) -> list:
    """Frame bounds of each G_i next to two envelopes.

    ``literal`` is ``[a_i / (||A^+||^2 v_i^2), ||A||^2 b_i / v_i^2]`` with
    ``(a_i, b_i)`` the bounds of the local duals.  ``restricted`` replaces
    ``1/||A^+||`` by the smallest nonzero singular value of A on block i,
    which is what actually bounds G_i from below.  With ``local_duals=None``
    the vector-level construction is assumed (local duals = standard basis).
    """
    A = np.asarray(A.matrix if isinstance(A, ObliqueLeftInverse) else A)
    v = np.asarray(v, dtype=float)
    s_all = np.linalg.svd(A, compute_uv=False)
    r = numerical_rank(A, tol)
    inv_pinv_sq = float(s_all[r - 1] ** 2) if r else 0.0
    norm_sq = float(s_all[0] ** 2) if s_all.size else 0.0
    fus = ws.fusion
    if local_duals is None and A.shape[1] != fus.total_dim:
        offs = np.concatenate([[0], np.cumsum(ws.sizes)]).astype(int)
        pieces = [(A[:, offs[i]:offs[i + 1]], (1.0, 1.0)) for i in range(len(fus))]
    else:
        if local_duals is None:
            local_duals = [canonical_dual_frame(F, tol) for F in ws.locals]
        pieces = []
        for i, (s, Fd) in enumerate(zip(fus.subspaces, local_duals)):
            pieces.append((A[:, fus.block_slice(i)] @ adjoint(s.basis), frame_bounds(Fd, s)))
    out = []
    for i, ((ai, (a_loc, b_loc)), G, Vi) in enumerate(zip(pieces, vs.locals, vs.fusion.subspaces)):
        alpha, beta = frame_bounds(G, Vi)
        s_i = np.linalg.svd(ai, compute_uv=False) if ai.size else np.zeros(0)
        r_i = numerical_rank(ai, tol, ref=max(spectral_norm(A), 1.0))
        smin_i = float(s_i[r_i - 1] ** 2) if r_i else 0.0
        literal = (inv_pinv_sq * a_loc / v[i] ** 2, norm_sq * b_loc / v[i] ** 2)
        restricted = (smin_i * a_loc / v[i] ** 2, norm_sq * b_loc / v[i] ** 2)
        slack = tol.eq_abs_tol * (1 + norm_sq * b_loc / v[i] ** 2)
        out.append({
            "block": i,
            "bounds": (alpha, beta),
            "literal": literal,
            "restricted": restricted,
            "literal_holds": literal[0] - slack <= alpha and beta <= literal[1] + slack,
            "restricted_holds": restricted[0] - slack <= alpha and beta <= restricted[1] + slack,
        })
    return out


def project_system(fs: FrameSystem, onto: Subspace, along: Subspace | None = None,
                   tol: Tolerance = DEFAULT_TOL) -> FrameSystem:
    """Apply a projector onto ``onto`` blockwise to subspaces and local frames.

    Without ``along`` the projector is orthogonal; otherwise it is the oblique
    projector onto ``onto`` whose kernel is ``along`` ^perp.
    """
    P = onto.projector if along is None else oblique_projector(onto, along, tol)
    locals = [VectorFrame(P @ F.matrix, ambient_dim=F.ambient_dim) for F in fs.locals]
    subs = [image(P, domain=s, tol=tol) if s.dim else s for s in fs.fusion.subspaces]
    return FrameSystem(FusionFrame(subs, fs.fusion.weights), locals, tol)
