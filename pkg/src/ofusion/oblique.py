"""Q-oblique duality between fusion frames.

A pair ``(W, w)`` / ``(V, v)`` with an operator ``Q : K_W -> K_V`` is dual on V
when ``T_V Q T_W^H`` equals the oblique projector onto V along W^perp.  All
operators act on block coordinates (see :mod:`ofusion.fusion`), so ``Q`` is a
``sum(dim V_i) x sum(dim W_j)`` matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DecompositionError,
    DimensionMismatch,
    DualityError,
    NoAdmissibleBlockError,
    SideConditionError,
    StructureError,
)
from .fusion import FusionFrame, KElement
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
    subspace_distance,
    subspace_intersection,
    subspace_sum,
    subspace_within_complement,
)

__all__ = [
    "Structure",
    "QOperator",
    "ObliqueLeftInverse",
    "DualityReport",
    "EquivalenceReport",
    "Reconstruction",
    "NonCanonicalResult",
    "ConversionResult",
    "q_from_ambient",
    "q_to_ambient",
    "verify_oblique_dual",
    "equivalences_report",
    "reconstruct",
    "consistency_check",
    "canonical_oblique_dual",
    "canonical_left_inverse",
    "oblique_coefficients",
    "left_inverse_family",
    "dual_from_left_inverse",
    "trivial_dual_q",
    "non_canonical_dual",
    "project_dual_conversions",
    "characterize_duals_via_H",
    "to_oblique_left_inverse",
    "to_left_inverse",
]


class Structure(enum.Enum):
    GENERAL = "general"
    BLOCK_DIAGONAL = "block_diagonal"
    COMPONENT_PRESERVING = "component_preserving"


def _offsets(dims) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(dims)]).astype(int)


class QOperator:
    """A map K_W -> K_V in block coordinates.

    ``row_blocks`` are the dimensions of the V_i, ``col_blocks`` those of the W_j.
    """

    def __init__(self, matrix, row_blocks: Sequence[int], col_blocks: Sequence[int],
                 tol: Tolerance = DEFAULT_TOL):
        m = np.array(matrix, dtype=np.result_type(matrix, np.float64))
        self.row_blocks = tuple(int(d) for d in row_blocks)
        self.col_blocks = tuple(int(d) for d in col_blocks)
        if m.ndim != 2 or m.shape != (sum(self.row_blocks), sum(self.col_blocks)):
            raise DimensionMismatch(
                f"Q has shape {m.shape}, blocks require ({sum(self.row_blocks)}, {sum(self.col_blocks)})")
        if not np.all(np.isfinite(m)):
            raise ValueError("Q has non-finite entries")
        m.setflags(write=False)
        self._matrix = m
        self.tol = tol

    @classmethod
    def block_diagonal(cls, blocks: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> "QOperator":
        blocks = [np.atleast_2d(np.asarray(b)) if np.asarray(b).size else np.asarray(b).reshape(np.shape(b))
                  for b in blocks]
        rows = [b.shape[0] for b in blocks]
        cols = [b.shape[1] for b in blocks]
        dtype = np.result_type(*blocks, np.float64)
        m = np.zeros((sum(rows), sum(cols)), dtype=dtype)
        ro, co = _offsets(rows), _offsets(cols)
        for i, b in enumerate(blocks):
            m[ro[i]:ro[i + 1], co[i]:co[i + 1]] = b
        return cls(m, rows, cols, tol)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def shape(self):
        return self._matrix.shape

    def block(self, i: int, j: int) -> np.ndarray:
        ro, co = _offsets(self.row_blocks), _offsets(self.col_blocks)
        return self._matrix[ro[i]:ro[i + 1], co[j]:co[j + 1]]

    def diagonal_blocks(self) -> list:
        return [self.block(i, i) for i in range(len(self.row_blocks))]

    def adjoint(self) -> "QOperator":
        return QOperator(adjoint(self._matrix), self.col_blocks, self.row_blocks, self.tol)

    def scaled_blocks(self, factors) -> "QOperator":
        """Multiply block row i by ``factors[i]``."""
        d = np.repeat(np.asarray(factors, dtype=float), self.row_blocks)
        return QOperator(d[:, None] * self._matrix, self.row_blocks, self.col_blocks, self.tol)

    @cached_property
    def off_diagonal_norm(self) -> float:
        if len(self.row_blocks) != len(self.col_blocks):
            return float("inf")
        total = frobenius_norm(self._matrix) ** 2
        diag = sum(frobenius_norm(b) ** 2 for b in self.diagonal_blocks())
        return float(np.sqrt(max(total - diag, 0.0)))

    @cached_property
    def structure(self) -> Structure:
        if len(self.row_blocks) != len(self.col_blocks):
            return Structure.GENERAL
        m = len(self.row_blocks)
        for i in range(m):
            for j in range(m):
                if i != j and frobenius_norm(self.block(i, j)) > self.tol.eq_abs_tol:
                    return Structure.GENERAL
        for b, d in zip(self.diagonal_blocks(), self.row_blocks):
            ref = max(frobenius_norm(b), 1.0)
            if numerical_rank(b, self.tol, ref=ref) != d:
                return Structure.BLOCK_DIAGONAL
        return Structure.COMPONENT_PRESERVING

    @property
    def is_block_diagonal(self) -> bool:
        return self.structure is not Structure.GENERAL

    @property
    def is_component_preserving(self) -> bool:
        return self.structure is Structure.COMPONENT_PRESERVING

    def __repr__(self):
        return f"QOperator(shape={self.shape}, structure={self.structure.value})"


def _block_basis(ff: FusionFrame) -> np.ndarray:
    """The ``(m n) x D`` block-diagonal matrix of local bases."""
    return scipy.linalg.block_diag(*[s.basis for s in ff.subspaces])


def q_to_ambient(q: QOperator, wff: FusionFrame, vff: FusionFrame) -> np.ndarray:
    """Q as an ``(m n) x (m n)`` matrix with block (i, j) = B_{V_i} Q_ij B_{W_j}^H."""
    _check_q_shape(q, wff, vff)
    return _block_basis(vff) @ q.matrix @ adjoint(_block_basis(wff))


def q_from_ambient(m, wff: FusionFrame, vff: FusionFrame, tol: Tolerance = DEFAULT_TOL) -> QOperator:
    m = np.asarray(m)
    bv, bw = _block_basis(vff), _block_basis(wff)
    if m.shape != (bv.shape[0], bw.shape[0]):
        raise DimensionMismatch(f"ambient Q has shape {m.shape}, expected {(bv.shape[0], bw.shape[0])}")
    return QOperator(adjoint(bv) @ m @ bw, vff.block_dims, wff.block_dims, tol)


def _check_q_shape(q: QOperator, wff: FusionFrame, vff: FusionFrame):
    if q.col_blocks != wff.block_dims or q.row_blocks != vff.block_dims:
        raise DimensionMismatch(
            f"Q blocks {q.row_blocks} x {q.col_blocks} do not match frames "
            f"{vff.block_dims} x {wff.block_dims}")
    if wff.ambient_dim != vff.ambient_dim:
        raise DimensionMismatch("the two fusion frames live in different ambient spaces")


def _projector(V: Subspace, W: Subspace, tol: Tolerance) -> np.ndarray:
    return oblique_projector(V, W, tol)


def _threshold(tol: Tolerance, ref: float) -> float:
    return tol.eq_abs_tol * (1.0 + ref)


def _bracket(m, tol: Tolerance, ref: float = 0.0) -> dict:
    """Singular values on either side of the rank cut."""
    m = np.asarray(m)
    if m.size == 0:
        return {"rank": 0, "last_kept": None, "first_dropped": None}
    s = np.linalg.svd(m, compute_uv=False)
    r = numerical_rank(m, tol, ref)
    return {
        "rank": r,
        "last_kept": float(s[r - 1]) if r > 0 else None,
        "first_dropped": float(s[r]) if r < s.size else None,
    }


# ---------------------------------------------------------------- verification


@dataclass(frozen=True)
class DualityReport:
    residual: float
    threshold: float
    passed: bool
    structure: Structure
    adjoint_residual: float
    adjoint_passed: bool
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "residual": self.residual,
            "threshold": self.threshold,
            "structure": self.structure.value,
            "adjoint": {"pass": self.adjoint_passed, "residual": self.adjoint_residual},
            "diagnostics": self.diagnostics,
        }


def verify_oblique_dual(wff: FusionFrame, vff: FusionFrame, q: QOperator,
                        tol: Tolerance = DEFAULT_TOL) -> DualityReport:
    """Residual of ``T_V Q T_W^H = P`` and of its adjoint form ``T_W Q^H T_V^H = P^H``."""
    _check_q_shape(q, wff, vff)
    W, V = wff.span, vff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError(
            f"ambient space is not V + W^perp (dim V={V.dim}, dim W={W.dim}, min singular={smin:.3e})", smin)
    tw, tv = wff.synthesis_matrix, vff.synthesis_matrix
    P = _projector(V, W, tol)
    Pa = _projector(W, V, tol)
    residual = frobenius_norm(tv @ q.matrix @ adjoint(tw) - P)
    adj_residual = frobenius_norm(tw @ adjoint(q.matrix) @ adjoint(tv) - Pa)
    thr = _threshold(tol, frobenius_norm(P))
    return DualityReport(
        residual=residual,
        threshold=thr,
        passed=residual <= thr,
        structure=q.structure,
        adjoint_residual=adj_residual,
        adjoint_passed=adj_residual <= _threshold(tol, frobenius_norm(Pa)),
        diagnostics={
            "min_singular": smin,
            "dim_W": W.dim,
            "dim_V": V.dim,
            "projector_norm": frobenius_norm(P),
            "TvQ_rank": _bracket(tv @ q.matrix, tol, ref=1.0),
            "bessel_hypotheses": "automatic (finite dimension)",
        },
    )


@dataclass(frozen=True)
class EquivalenceReport:
    statements: tuple
    residuals: tuple

    def as_dict(self) -> dict:
        return {f"({k + 1})": {"pass": b, "residual": r}
                for k, (b, r) in enumerate(zip(self.statements, self.residuals))}

    @property
    def unanimous(self) -> bool:
        return all(self.statements) or not any(self.statements)


def _triple(t_in, t_out, q, target: Subspace, tol) -> tuple[bool, float]:
    """Injective analysis on ``target``, surjective ``t_out q`` and idempotent ``t_in^H t_out q``."""
    if target.dim:
        s = np.linalg.svd(adjoint(t_in) @ target.basis, compute_uv=False)
        smin = float(s[-1]) if s.size == target.dim else 0.0
    else:
        smin = float("inf")
    injective = smin > tol.eq_abs_tol
    tq = t_out @ q
    surjective = numerical_rank(tq, tol, ref=1.0) == target.dim
    x = adjoint(t_in) @ tq
    idem = frobenius_norm(x @ x - x)
    idempotent = idem <= _threshold(tol, frobenius_norm(x))
    return injective and surjective and idempotent, idem


def equivalences_report(wff: FusionFrame, vff: FusionFrame, q: QOperator,
                        tol: Tolerance = DEFAULT_TOL) -> EquivalenceReport:
    """Evaluate each of the eight equivalent duality statements on its own.

    (1)/(2) restriction to V / W, (3)/(4) the projector identity and its
    adjoint, (5)/(6) the bilinear forms on standard probes, (7)/(8) the
    injective / surjective / idempotent triple.
    """
    _check_q_shape(q, wff, vff)
    W, V = wff.span, vff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError("ambient space is not V + W^perp", smin)
    tw, tv, qm = wff.synthesis_matrix, vff.synthesis_matrix, q.matrix
    qa = adjoint(qm)
    P = _projector(V, W, tol)
    Pa = _projector(W, V, tol)
    n = wff.ambient_dim
    probes = np.eye(n)

    s1 = (True, 0.0)
    if V.dim:
        r1 = frobenius_norm(tv @ (qm @ (adjoint(tw) @ V.basis)) - V.basis)
        s1 = (r1 <= _threshold(tol, np.sqrt(V.dim)), r1)
    if W.dim:
        r2 = frobenius_norm(tw @ (qa @ (adjoint(tv) @ W.basis)) - W.basis)
        s2 = (r2 <= _threshold(tol, np.sqrt(W.dim)), r2)
    else:
        s2 = (True, 0.0)

    r3 = frobenius_norm(tv @ qm @ adjoint(tw) - P)
    r4 = frobenius_norm(tw @ qa @ adjoint(tv) - Pa)
    s3 = (r3 <= _threshold(tol, frobenius_norm(P)), r3)
    s4 = (r4 <= _threshold(tol, frobenius_norm(Pa)), r4)

    # <pi f, g> against <Q T^H f, T'^H g> on all pairs of standard probes
    lhs6 = np.array([[np.vdot(probes[k], P @ probes[l]) for l in range(n)] for k in range(n)])
    a6, b6 = qm @ (adjoint(tw) @ probes), adjoint(tv) @ probes
    rhs6 = np.array([[np.vdot(b6[:, k], a6[:, l]) for l in range(n)] for k in range(n)])
    lhs5 = np.array([[np.vdot(probes[k], Pa @ probes[l]) for l in range(n)] for k in range(n)])
    a5, b5 = qa @ (adjoint(tv) @ probes), adjoint(tw) @ probes
    rhs5 = np.array([[np.vdot(b5[:, k], a5[:, l]) for l in range(n)] for k in range(n)])
    r5, r6 = frobenius_norm(lhs5 - rhs5), frobenius_norm(lhs6 - rhs6)
    s5 = (r5 <= _threshold(tol, frobenius_norm(Pa)), r5)
    s6 = (r6 <= _threshold(tol, frobenius_norm(P)), r6)

    s7 = _triple(tw, tv, qm, V, tol)
    s8 = _triple(tv, tw, qa, W, tol)
    items = (s1, s2, s3, s4, s5, s6, s7, s8)
    return EquivalenceReport(tuple(bool(b) for b, _ in items), tuple(float(r) for _, r in items))


# ---------------------------------------------------------------- reconstruction


@dataclass(frozen=True)
class Reconstruction:
    f_hat: np.ndarray
    terms: list
    projector_error: float
    consistent: bool


def _require_dual(wff, vff, q, tol) -> DualityReport:
    report = verify_oblique_dual(wff, vff, q, tol)
    if not report.passed:
        raise DualityError(f"pair is not an oblique dual (residual {report.residual:.3e})", report.residual)
    return report


def reconstruct(wff: FusionFrame, vff: FusionFrame, q: QOperator, f,
                tol: Tolerance = DEFAULT_TOL) -> Reconstruction:
    """Blockwise reconstruction ``f_hat = sum_j v_j w_j Q_j f``."""
    if not q.is_block_diagonal:
        raise StructureError("reconstruction formula needs a block-diagonal Q")
    _require_dual(wff, vff, q, tol)
    f = np.asarray(f)
    terms = []
    for j, (sw, sv) in enumerate(zip(wff.subspaces, vff.subspaces)):
        c = vff.weights[j] * wff.weights[j]
        terms.append(c * (sv.basis @ (q.block(j, j) @ (adjoint(sw.basis) @ f))))
    f_hat = np.sum(terms, axis=0) if terms else np.zeros_like(f)
    P = _projector(vff.span, wff.span, tol)
    err = float(np.linalg.norm(f_hat - P @ f))
    return Reconstruction(f_hat, terms, err, consistency_check(wff, f, f_hat, tol=tol))


def consistency_check(wff: FusionFrame, f, f_hat, V: Subspace | None = None,
                      tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``T_W^H f_hat = T_W^H f``.

    With ``V`` supplied the reconstruction must also lie in V; it is then
    cross-checked against ``f_hat = P f``.
    """
    f, f_hat = np.asarray(f), np.asarray(f_hat)
    t = wff.synthesis_matrix
    gap = float(np.linalg.norm(adjoint(t) @ (f_hat - f)))
    ok = gap <= _threshold(tol, float(np.linalg.norm(f)))
    if V is None:
        return ok
    in_v = np.linalg.norm(f_hat - V.project(f_hat)) <= _threshold(tol, float(np.linalg.norm(f_hat)))
    P = _projector(V, wff.span, tol)
    matches = np.linalg.norm(f_hat - P @ f) <= _threshold(tol, float(np.linalg.norm(f))) * max(1.0, frobenius_norm(P))
    return bool(in_v and ok and matches)


# ---------------------------------------------------------------- left inverses


class ObliqueLeftInverse:
    """An operator A : K_W -> F^n with ``A T_W^H = P`` and range V."""

    def __init__(self, matrix, target_V: Subspace, source: FusionFrame, tol: Tolerance = DEFAULT_TOL):
        a = np.array(matrix, dtype=np.result_type(matrix, np.float64))
        if a.shape != (source.ambient_dim, source.total_dim):
            raise DimensionMismatch(f"A has shape {a.shape}, expected {(source.ambient_dim, source.total_dim)}")
        diag = membership_diagnostics(a, target_V, source, tol)
        if not diag["member"]:
            raise SideConditionError("operator is not an oblique left inverse onto V", diag)
        a.setflags(write=False)
        self.matrix = a
        self.target_V = target_V
        self.source = source
        self.diagnostics = diag


def membership_diagnostics(a, V: Subspace, source: FusionFrame, tol: Tolerance = DEFAULT_TOL) -> dict:
    W = source.span
    P = _projector(V, W, tol)
    residual = frobenius_norm(a @ adjoint(source.synthesis_matrix) - P)
    outside = frobenius_norm(a - V.project(a))
    rank = numerical_rank(a, tol, ref=1.0)
    member = (residual <= _threshold(tol, frobenius_norm(P))
              and outside <= _threshold(tol, frobenius_norm(a))
              and rank == V.dim)
    return {"member": bool(member), "left_inverse_residual": residual,
            "range_residual": outside, "rank": rank, "dim_V": V.dim}


def canonical_left_inverse(wff: FusionFrame, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> ObliqueLeftInverse:
    """``P S^+ T_W``."""
    P = _projector(V, wff.span, tol)
    t = wff.synthesis_matrix
    S = t @ adjoint(t)
    return ObliqueLeftInverse(P @ pseudo_inverse(S, tol) @ t, V, wff, tol)


def left_inverse_family(wff: FusionFrame, V: Subspace, B=None, form: str = "affine",
                        tol: Tolerance = DEFAULT_TOL) -> ObliqueLeftInverse:
    """Members of the set of oblique left inverses of ``T_W^H`` with range V.

    ``form="affine"``: ``P S^+ T + B (I - T^H S^+ T)`` with ``B`` an ``n x D``
    map into V (``None`` means zero).
    ``form="range"``: ``B (T^H B)^+`` with ``Im B = V``.
    ``form="kernel"``: ``P (B T^H)^+ B`` with ``B : K_W -> F^k`` such that
    ``K_W = Ker B + Im T^H`` is direct.
    """
    W = wff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError("ambient space is not V + W^perp", smin)
    t = wff.synthesis_matrix
    n, D = t.shape
    P = _projector(V, W, tol)
    S = t @ adjoint(t)
    Sp = pseudo_inverse(S, tol)
    if form == "affine":
        B = np.zeros((n, D)) if B is None else np.asarray(B)
        if B.shape != (n, D):
            raise DimensionMismatch(f"B must be {n} x {D} for the affine form, got {B.shape}")
        outside = frobenius_norm(B - V.project(B))
        if outside > _threshold(tol, frobenius_norm(B)):
            raise SideConditionError("B does not map into V", {"range_residual": outside})
        a = P @ Sp @ t + B @ (np.eye(D) - adjoint(t) @ Sp @ t)
    elif form == "range":
        if B is None:
            raise SideConditionError("range form needs an explicit B", {})
        B = np.asarray(B)
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows for the range form, got {B.shape}")
        im = image(B, tol=tol)
        if not same_subspace(im, V, tol):
            raise SideConditionError("range form requires Im B = V", {
                "rank_B": im.dim, "dim_V": V.dim, "projector_distance": subspace_distance(im, V)})
        a = B @ pseudo_inverse(adjoint(t) @ B, tol)
    elif form == "kernel":
        if B is None:
            raise SideConditionError("kernel form needs an explicit B", {})
        B = np.asarray(B)
        if B.ndim != 2 or B.shape[1] != D:
            raise DimensionMismatch(f"B must have {D} columns for the kernel form, got {B.shape}")
        a = P @ _kernel_form_core(B, t, W, tol)
    else:
        raise ValueError(f"unknown parameterization {form!r}")
    return ObliqueLeftInverse(a, V, wff, tol)


def _kernel_form_core(B, t, W: Subspace, tol: Tolerance) -> np.ndarray:
    """``(B T^H)^+ B`` after checking that Ker B and Im T^H are complementary in K_W."""
    bt = B @ adjoint(t)
    ref = spectral_norm_safe(B) * spectral_norm_safe(t)
    rank_b = numerical_rank(B, tol, ref=1.0)
    rank_bt = numerical_rank(bt, tol, ref=max(ref, 1.0))
    if rank_b != W.dim or rank_bt != W.dim:
        raise SideConditionError(
            "K_W is not the direct sum of Ker(B) and Im(T^H)",
            {"rank_B": rank_b, "rank_BT": rank_bt, "dim_W": W.dim,
             "rank_deficit": W.dim - rank_bt, "excess_rank": rank_b - W.dim,
             "BT_singulars": _bracket(bt, tol, max(ref, 1.0))})
    return pseudo_inverse(bt, tol) @ B


def spectral_norm_safe(m) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def dual_from_left_inverse(wff: FusionFrame, A: ObliqueLeftInverse, v=None,
                           tol: Tolerance = DEFAULT_TOL) -> tuple[FusionFrame, QOperator]:
    """``V_i = A M_i K_W`` with ``Q_{A,v}`` mapping block i by ``(1/v_i) A M_i``."""
    if A.source is not wff and A.matrix.shape[1] != wff.total_dim:
        raise DimensionMismatch("left inverse belongs to a different fusion frame")
    v = wff.weights if v is None else np.asarray(v, dtype=float)
    if v.shape != (len(wff),):
        raise DimensionMismatch(f"{len(wff)} blocks but {v.size} weights")
    if np.any(v <= 0):
        raise ValueError("weights must be strictly positive")
    a = A.matrix
    ref = max(spectral_norm_safe(a), 1.0)
    subs, blocks = [], []
    for i in range(len(wff)):
        ai = a[:, wff.block_slice(i)]
        Vi = image(ai, tol=tol, ref=ref) if ai.size else Subspace.zero(wff.ambient_dim)
        subs.append(Vi)
        blocks.append(adjoint(Vi.basis) @ ai / v[i])
    return FusionFrame(subs, v), QOperator.block_diagonal(blocks, tol)


def canonical_oblique_dual(wff: FusionFrame, V: Subspace, v=None,
                           tol: Tolerance = DEFAULT_TOL) -> tuple[FusionFrame, QOperator]:
    """V_i = P S^+ W_i with diagonal blocks ``(w_i/v_i) P S^+`` in local coordinates."""
    W = wff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError("ambient space is not V + W^perp", smin)
    v = wff.weights if v is None else np.asarray(v, dtype=float)
    if v.shape != (len(wff),):
        raise DimensionMismatch(f"{len(wff)} blocks but {np.size(v)} weights")
    if np.any(v <= 0):
        raise ValueError("weights must be strictly positive")
    t = wff.synthesis_matrix
    P = _projector(V, W, tol)
    PS = P @ pseudo_inverse(t @ adjoint(t), tol)
    subs, blocks = [], []
    for i, (s, w) in enumerate(zip(wff.subspaces, wff.weights)):
        m = PS @ s.basis
        Vi = image(PS, domain=s, tol=tol) if s.dim else Subspace.zero(wff.ambient_dim)
        subs.append(Vi)
        blocks.append((w / v[i]) * (adjoint(Vi.basis) @ m))
    return FusionFrame(subs, v), QOperator.block_diagonal(blocks, tol)


def oblique_coefficients(wff: FusionFrame, V: Subspace, f, v=None, tol: Tolerance = DEFAULT_TOL) -> KElement:
    """``(w_i pi_{W_i} S^+ pi_{W,V^perp} f)_i``; ``v`` does not enter the formula."""
    W = wff.span
    t = wff.synthesis_matrix
    Pa = _projector(W, V, tol)
    g = pseudo_inverse(t @ adjoint(t), tol) @ (Pa @ np.asarray(f))
    return KElement([w * s.project(g) for s, w in zip(wff.subspaces, wff.weights)])


def trivial_dual_q(wff: FusionFrame, vff: FusionFrame, tol: Tolerance = DEFAULT_TOL) -> QOperator:
    """``(T_W^H T_V)^+`` in block coordinates."""
    W, V = wff.span, vff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError("ambient space is not V + W^perp", smin)
    g = adjoint(wff.synthesis_matrix) @ vff.synthesis_matrix
    return QOperator(pseudo_inverse(g, tol), vff.block_dims, wff.block_dims, tol)


# ---------------------------------------------------------------- non-canonical duals


@dataclass(frozen=True)
class NonCanonicalResult:
    i0: int
    modified: FusionFrame
    dual: FusionFrame
    q: QOperator
    report: DualityReport
    canonical: FusionFrame
    certificate: dict


def non_canonical_dual(wff: FusionFrame, V: Subspace, i0: int | None = None,
                       allow_zero_blocks: bool = False, tol: Tolerance = DEFAULT_TOL) -> NonCanonicalResult:
    """A component-preserving dual with weights ``w`` that differs from the canonical one.

    Block ``i0`` is replaced by its part orthogonal to the overlap with the
    other blocks.  Without an explicit ``i0`` the blocks are scanned in
    ascending order and the first admissible one is used; blocks whose
    reduced subspace would be zero are skipped unless ``allow_zero_blocks``.
    """
    W = wff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError("ambient space is not V + W^perp", smin)
    if any(d == 0 for d in wff.block_dims):
        raise StructureError("every block must be a nonzero subspace")
    m = len(wff)
    candidates = range(m) if i0 is None else [i0]
    if i0 is not None and not 0 <= i0 < m:
        raise IndexError(f"block index {i0} out of range for {m} blocks")

    chosen, reduced, zero_seen = None, None, False
    for k in candidates:
        others = Subspace.zero(wff.ambient_dim, wff.field)
        for j, s in enumerate(wff.subspaces):
            if j != k:
                others = subspace_sum(others, s, tol)
        overlap = subspace_intersection(wff.subspaces[k], others, tol)
        if overlap.dim == 0:
            continue
        wt = subspace_within_complement(wff.subspaces[k], overlap, tol)
        if wt.dim == 0 and not allow_zero_blocks:
            zero_seen = True
            continue
        chosen, reduced = k, wt
        break
    if chosen is None:
        if zero_seen:
            raise NoAdmissibleBlockError(
                "no admissible i0: every admissible block reduces to {0} (set allow_zero_blocks)")
        raise NoAdmissibleBlockError("no admissible i0: the blocks form a Riesz fusion basis")

    subs = list(wff.subspaces)
    subs[chosen] = reduced
    modified = FusionFrame(subs, wff.weights)
    if not same_subspace(modified.span, W, tol):
        raise StructureError("modified family no longer spans W")

    tm = modified.synthesis_matrix
    P = _projector(V, W, tol)
    PS = P @ pseudo_inverse(tm @ adjoint(tm), tol)
    dual_subs, blocks = [], []
    for s_orig, s_red in zip(wff.subspaces, modified.subspaces):
        Vi = image(PS, domain=s_red, tol=tol) if s_red.dim else Subspace.zero(wff.ambient_dim)
        dual_subs.append(Vi)
        blocks.append(adjoint(Vi.basis) @ PS @ s_red.projector @ s_orig.basis)
    dual = FusionFrame(dual_subs, wff.weights)
    q = QOperator.block_diagonal(blocks, tol)
    report = verify_oblique_dual(wff, dual, q, tol)
    if not report.passed:
        raise DualityError("non-canonical construction failed verification", report.residual)

    canonical, _ = canonical_oblique_dual(wff, V, wff.weights, tol)
    distances = [subspace_distance(a, b) for a, b in zip(dual.subspaces, canonical.subspaces)]
    certificate = {
        "i0": chosen,
        "reduced_dim": reduced.dim,
        "distance_i0": distances[chosen],
        "max_distance": max(distances),
        "distances": distances,
        "differs": distances[chosen] > tol.eq_abs_tol,
    }
    return NonCanonicalResult(chosen, modified, dual, q, report, canonical, certificate)


# ---------------------------------------------------------------- conversions


@dataclass(frozen=True)
class ConversionResult:
    analysis: FusionFrame
    synthesis: FusionFrame
    q: QOperator
    report: DualityReport


def _project_family(ff: FusionFrame, op, q_blocks, tol) -> tuple[FusionFrame, list]:
    subs, blocks = [], []
    for s, qb in zip(ff.subspaces, q_blocks):
        ps = op @ s.basis
        Si = image(op, domain=s, tol=tol) if s.dim else Subspace.zero(ff.ambient_dim)
        subs.append(Si)
        blocks.append(adjoint(Si.basis) @ ps @ qb)
    return FusionFrame(subs, ff.weights), blocks


def project_dual_conversions(wff: FusionFrame, vff: FusionFrame, q: QOperator, direction: str,
                             V: Subspace | None = None, tol: Tolerance = DEFAULT_TOL) -> ConversionResult:
    """Turn oblique duals into duals and back by projecting the subspaces blockwise.

    ``oblique_to_dual``: V_i -> pi_W V_i; the output is a dual of (W, w) on W.
    ``oblique_to_dual_adjoint``: W_i -> pi_V W_i with ``Q^H``; the output
    ``(analysis=V-frame, synthesis=projected W)`` is a dual of (V, v) on V.
    ``dual_to_oblique``: input ``vff`` is a dual of ``wff`` on W; its blocks are
    mapped by the oblique projector onto ``V`` along W^perp.
    """
    if not q.is_block_diagonal:
        raise StructureError("conversion needs a block-diagonal Q")
    W = wff.span
    if direction in ("oblique_to_dual", "oblique_to_dual_adjoint"):
        _require_dual(wff, vff, q, tol)
        if direction == "oblique_to_dual":
            out, blocks = _project_family(vff, W.projector, q.diagonal_blocks(), tol)
            a_ff = wff
        else:
            Vs = vff.span
            out, blocks = _project_family(wff, Vs.projector, [adjoint(b) for b in q.diagonal_blocks()], tol)
            a_ff = vff
    elif direction == "dual_to_oblique":
        if V is None:
            raise ValueError("dual_to_oblique needs the target subspace V")
        if not same_subspace(vff.span, W, tol):
            raise DualityError("input synthesis family does not span W")
        _require_dual(wff, vff, q, tol)
        P = _projector(V, W, tol)
        out, blocks = _project_family(vff, P, q.diagonal_blocks(), tol)
        a_ff = wff
    else:
        raise ValueError(f"unknown direction {direction!r}")
    q_out = QOperator.block_diagonal(blocks, tol)
    return ConversionResult(a_ff, out, q_out, verify_oblique_dual(a_ff, out, q_out, tol))


# ---------------------------------------------------------------- H characterization


def characterize_duals_via_H(wff: FusionFrame, V: Subspace, H_op, v=None,
                             tol: Tolerance = DEFAULT_TOL) -> tuple[FusionFrame, QOperator]:
    """Dual subspaces ``P (H T^H)^+ Z_i`` with ``Z_i = H M_i K_W``.

    ``H_op`` maps K_W (block coordinates) into F^k and must satisfy
    ``K_W = Ker H + Im T^H`` as a direct sum.
    """
    W = wff.span
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise DecompositionError("ambient space is not V + W^perp", smin)
    H_op = np.asarray(H_op)
    t = wff.synthesis_matrix
    if H_op.ndim != 2 or H_op.shape[1] != t.shape[1]:
        raise DimensionMismatch(f"H must have {t.shape[1]} columns, got shape {H_op.shape}")
    v = wff.weights if v is None else np.asarray(v, dtype=float)
    if v.shape != (len(wff),) or np.any(v <= 0):
        raise ValueError("need one strictly positive weight per block")
    core = _kernel_form_core(H_op, t, W, tol)
    P = _projector(V, W, tol)
    a = P @ core
    ht_pinv = pseudo_inverse(H_op @ adjoint(t), tol)
    subs, blocks = [], []
    for i in range(len(wff)):
        hi = H_op[:, wff.block_slice(i)]
        Z = image(hi, tol=tol) if hi.size else Subspace.zero(H_op.shape[0])
        Vi = image(P @ ht_pinv, domain=Z, tol=tol) if Z.dim else Subspace.zero(wff.ambient_dim)
        subs.append(Vi)
        blocks.append(adjoint(Vi.basis) @ a[:, wff.block_slice(i)] / v[i])
    return FusionFrame(subs, v), QOperator.block_diagonal(blocks, tol)


def to_oblique_left_inverse(wff: FusionFrame, V: Subspace, U, tol: Tolerance = DEFAULT_TOL) -> ObliqueLeftInverse:
    """Map a left inverse U of ``T^H`` (``U T^H = pi_W``, range W) to ``P U``."""
    U = np.asarray(U)
    W = wff.span
    if frobenius_norm(U @ adjoint(wff.synthesis_matrix) - W.projector) > _threshold(tol, np.sqrt(W.dim)):
        raise SideConditionError("U is not a left inverse of the analysis operator on W", {})
    return ObliqueLeftInverse(_projector(V, W, tol) @ U, V, wff, tol)


def to_left_inverse(A: ObliqueLeftInverse) -> np.ndarray:
    """Inverse of :func:`to_oblique_left_inverse`: ``A -> pi_W A``."""
    return A.source.span.projector @ A.matrix
