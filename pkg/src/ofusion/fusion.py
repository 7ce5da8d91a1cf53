"""Weighted subspace families (fusion frames) and their operators.

The block space K_W = W_1 ⊕ ... ⊕ W_m is represented two ways: a
:class:`KElement` holds one ambient vector per block, and the coordinate view
concatenates ``B_{W_i}^H f_i`` into a vector of length ``sum(dim W_i)``.  In
coordinates the synthesis operator is the ``n x D`` matrix
``[w_1 B_{W_1}, ..., w_m B_{W_m}]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, MembershipError
from .linalg import (
    DEFAULT_TOL,
    Field,
    Subspace,
    Tolerance,
    adjoint,
    contains,
    frobenius_norm,
    numerical_rank,
    orthonormalize,
    same_subspace,
)

__all__ = [
    "FusionFrame",
    "KElement",
    "BlockMask",
    "Classification",
    "synthesis",
    "analysis",
    "fusion_frame_operator",
    "fusion_bounds",
    "classify",
    "mask",
    "mask_matrix",
    "fusion_frame_criterion_on_kernel_complement",
    "analysis_injective_on",
]


class FusionFrame:
    """An ordered family of weighted subspaces of one ambient space F^n."""

    def __init__(self, subspaces: Sequence[Subspace], weights: Iterable[float]):
        subspaces = tuple(subspaces)
        w = np.asarray(list(weights), dtype=float)
        if not subspaces:
            raise ValueError("a fusion frame needs at least one block")
        if w.shape != (len(subspaces),):
            raise DimensionMismatch(f"{len(subspaces)} subspaces but {w.size} weights")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        n = {s.ambient_dim for s in subspaces}
        if len(n) != 1:
            raise DimensionMismatch(f"blocks live in different ambient spaces: {sorted(n)}")
        w.setflags(write=False)
        self._subspaces = subspaces
        self._weights = w

    @classmethod
    def from_vectors(cls, blocks, weights=None, ambient_dim=None, tol: Tolerance = DEFAULT_TOL) -> "FusionFrame":
        subs = [orthonormalize(b, tol, ambient_dim=ambient_dim) for b in blocks]
        return cls(subs, np.ones(len(subs)) if weights is None else weights)

    @property
    def subspaces(self) -> tuple:
        return self._subspaces

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def ambient_dim(self) -> int:
        return self._subspaces[0].ambient_dim

    @property
    def field(self) -> Field:
        return Field.COMPLEX if any(s.field is Field.COMPLEX for s in self._subspaces) else Field.REAL

    def __len__(self) -> int:
        return len(self._subspaces)

    @cached_property
    def block_dims(self) -> tuple:
        return tuple(s.dim for s in self._subspaces)

    @cached_property
    def offsets(self) -> tuple:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.block_dims)]))

    @property
    def total_dim(self) -> int:
        return self.offsets[-1]

    def block_slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i + 1])

    @cached_property
    def synthesis_matrix(self) -> np.ndarray:
        n = self.ambient_dim
        dtype = np.result_type(*(s.basis for s in self._subspaces), np.float64)
        t = np.zeros((n, self.total_dim), dtype=dtype)
        for i, (s, w) in enumerate(zip(self._subspaces, self._weights)):
            t[:, self.block_slice(i)] = w * s.basis
        t.setflags(write=False)
        return t

    @cached_property
    def span(self) -> Subspace:
        """span of the union of the blocks."""
        return orthonormalize(np.hstack([s.basis for s in self._subspaces]),
                              ambient_dim=self.ambient_dim, ref=1.0)

    def with_weights(self, weights) -> "FusionFrame":
        return FusionFrame(self._subspaces, weights)

    def to_coords(self, x: "KElement") -> np.ndarray:
        self._check(x)
        parts = [adjoint(s.basis) @ f for s, f in zip(self._subspaces, x.blocks)]
        return np.concatenate(parts) if parts else np.zeros(0)

    def from_coords(self, c) -> "KElement":
        c = np.asarray(c)
        if c.shape != (self.total_dim,):
            raise DimensionMismatch(f"expected {self.total_dim} block coordinates, got {c.shape}")
        return KElement([s.basis @ c[self.block_slice(i)] for i, s in enumerate(self._subspaces)])

    def zero_element(self) -> "KElement":
        return KElement([np.zeros(self.ambient_dim) for _ in self._subspaces])

    def _check(self, x: "KElement", tol: Tolerance = DEFAULT_TOL):
        if len(x.blocks) != len(self):
            raise DimensionMismatch(f"element has {len(x.blocks)} blocks, frame has {len(self)}")
        for i, (s, f) in enumerate(zip(self._subspaces, x.blocks)):
            if f.shape != (self.ambient_dim,):
                raise DimensionMismatch(f"block {i} has shape {f.shape}")
            gap = np.linalg.norm(f - s.project(f))
            if gap > tol.eq_abs_tol * (1 + np.linalg.norm(f)):
                raise MembershipError(f"block {i} is not in its subspace (distance {gap:.3e})")

    def __repr__(self):
        return f"FusionFrame(n={self.ambient_dim}, dims={list(self.block_dims)}, weights={self._weights.tolist()})"


@dataclass(frozen=True)
class KElement:
    """One ambient vector per block."""

    blocks: tuple

    def __init__(self, blocks):
        object.__setattr__(self, "blocks", tuple(np.asarray(b) for b in blocks))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.vdot(b, b).real for b in self.blocks)))

    def __add__(self, other: "KElement") -> "KElement":
        return KElement([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "KElement") -> "KElement":
        return KElement([a - b for a, b in zip(self.blocks, other.blocks)])


@dataclass(frozen=True)
class BlockMask:
    """A set J of selected block indices (0-based)."""

    selected: frozenset

    def __init__(self, selected):
        object.__setattr__(self, "selected", frozenset(int(j) for j in selected))

    def check(self, m: int):
        bad = [j for j in self.selected if not 0 <= j < m]
        if bad:
            raise IndexError(f"block indices {sorted(bad)} out of range for {m} blocks")


def synthesis(ff: FusionFrame, x: KElement, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    ff._check(x, tol)
    return sum((w * f for w, f in zip(ff.weights, x.blocks)), np.zeros(ff.ambient_dim))


def analysis(ff: FusionFrame, f) -> KElement:
    f = np.asarray(f)
    if f.shape != (ff.ambient_dim,):
        raise DimensionMismatch(f"signal has shape {f.shape}, expected ({ff.ambient_dim},)")
    return KElement([w * s.project(f) for s, w in zip(ff.subspaces, ff.weights)])


def fusion_frame_operator(ff: FusionFrame) -> np.ndarray:
    t = ff.synthesis_matrix
    return t @ adjoint(t)


def _check_contained(ff: FusionFrame, W: Subspace, tol: Tolerance):
    for i, s in enumerate(ff.subspaces):
        if not contains(W, s, tol):
            raise MembershipError(f"block {i} is not contained in the target subspace")


def fusion_bounds(ff: FusionFrame, W: Subspace, tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Extreme eigenvalues of the fusion frame operator compressed to W."""
    if W.ambient_dim != ff.ambient_dim:
        raise DimensionMismatch("fusion frame and subspace live in different ambient spaces")
    _check_contained(ff, W, tol)
    if W.dim == 0:
        return 0.0, 0.0
    c = adjoint(W.basis) @ fusion_frame_operator(ff) @ W.basis
    ev = np.linalg.eigvalsh((c + adjoint(c)) / 2)
    return max(float(ev[0]), 0.0), float(ev[-1])


@dataclass(frozen=True)
class Classification:
    bessel: bool
    frame: bool
    tight: bool
    parseval: bool
    riesz_fusion_basis: bool
    orthonormal_fusion_basis: bool
    overcomplete: bool
    complete: bool
    bounds: tuple
    tight_constant: float | None

    def labels(self) -> list:
        names = ["bessel", "frame", "tight", "parseval", "riesz_fusion_basis",
                 "orthonormal_fusion_basis", "overcomplete", "complete"]
        return [k for k in names if getattr(self, k)]

    def as_dict(self) -> dict:
        return {
            "bessel": self.bessel, "frame": self.frame, "tight": self.tight,
            "parseval": self.parseval, "riesz_fusion_basis": self.riesz_fusion_basis,
            "orthonormal_fusion_basis": self.orthonormal_fusion_basis,
            "overcomplete": self.overcomplete, "complete": self.complete,
            "bounds": list(self.bounds), "tight_constant": self.tight_constant,
        }


def classify(ff: FusionFrame, W: Subspace | None = None, tol: Tolerance = DEFAULT_TOL) -> Classification:
    W = ff.span if W is None else W
    alpha, beta = fusion_bounds(ff, W, tol)
    span = ff.span
    complete = same_subspace(span, W, tol)
    frame = alpha > tol.eq_abs_tol
    tight = frame and abs(beta - alpha) <= tol.eq_abs_tol * (1 + beta)
    parseval = tight and abs(alpha - 1) <= tol.eq_abs_tol and abs(beta - 1) <= tol.eq_abs_tol
    rank = numerical_rank(ff.synthesis_matrix, tol, ref=float(np.max(ff.weights)))
    riesz = frame and rank == ff.total_dim
    orthonormal = (
        riesz
        and all(d > 0 for d in ff.block_dims)
        and bool(np.all(np.abs(ff.weights - 1) <= tol.eq_abs_tol))
        and all(
            frobenius_norm(adjoint(a.basis) @ b.basis) <= tol.eq_abs_tol
            for k, a in enumerate(ff.subspaces) for b in ff.subspaces[k + 1:]
        )
    )
    return Classification(
        bessel=True,
        frame=frame,
        tight=tight,
        parseval=parseval,
        riesz_fusion_basis=riesz,
        orthonormal_fusion_basis=orthonormal,
        overcomplete=frame and not riesz,
        complete=complete,
        bounds=(alpha, beta),
        tight_constant=(alpha + beta) / 2 if tight else None,
    )


def mask(ff: FusionFrame, x: KElement, J: BlockMask) -> KElement:
    J.check(len(ff))
    ff._check(x)
    return KElement([f if i in J.selected else np.zeros_like(f) for i, f in enumerate(x.blocks)])


def mask_matrix(ff: FusionFrame, J: BlockMask) -> np.ndarray:
    """M_J in block coordinates: a 0/1 diagonal matrix."""
    J.check(len(ff))
    d = np.zeros(ff.total_dim)
    for i in J.selected:
        d[ff.block_slice(i)] = 1.0
    return np.diag(d)


def fusion_frame_criterion_on_kernel_complement(ff: FusionFrame, tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Squared extreme nonzero singular values of the synthesis matrix.

    These are the best constants for the synthesis energy on the orthogonal
    complement of its kernel.
    """
    t = ff.synthesis_matrix
    if t.size == 0:
        return 0.0, 0.0
    s = np.linalg.svd(t, compute_uv=False)
    r = numerical_rank(t, tol, ref=float(np.max(ff.weights)))
    if r == 0:
        return 0.0, 0.0
    return float(s[r - 1] ** 2), float(s[0] ** 2)


def analysis_injective_on(ff: FusionFrame, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether the analysis operator is injective on V, with the smallest singular value of T^H B_V."""
    if V.dim == 0:
        return True, float("inf")
    s = np.linalg.svd(adjoint(ff.synthesis_matrix) @ V.basis, compute_uv=False)
    smin = float(s[-1]) if s.size == V.dim else 0.0
    return smin > tol.eq_abs_tol, smin
