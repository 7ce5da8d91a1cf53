"""Ambient-space linear algebra on F^n.

Subspaces are stored through an orthonormal basis (columns of an ``n x d``
array).  Operators are plain 2-D numpy arrays; adjoints are conjugate
transposes, which coincide with transposes for real data.

Every rank decision follows one policy: a singular value counts when it is
strictly larger than ``rank_rel_tol * max(sigma_max, ref)``, where ``ref`` is
an optional reference scale (the norm of the operator a block was cut from).
Equalities are checked with ``eq_abs_tol``.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DecompositionError, DimensionMismatch

__all__ = [
    "Field",
    "Tolerance",
    "DEFAULT_TOL",
    "Subspace",
    "adjoint",
    "frobenius_norm",
    "spectral_norm",
    "numerical_rank",
    "orthonormalize",
    "image",
    "orthogonal_projector",
    "direct_sum_complement_check",
    "oblique_projector",
    "pseudo_inverse",
    "subspace_sum",
    "subspace_intersection",
    "subspace_within_complement",
    "orthogonal_complement",
    "subspace_distance",
    "contains",
    "same_subspace",
]


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is Field.REAL else np.complex128

    @classmethod
    def of(cls, *arrays) -> "Field":
        for a in arrays:
            if np.iscomplexobj(a):
                return cls.COMPLEX
        return cls.REAL


@dataclass(frozen=True)
class Tolerance:
    """Rank cut-off (relative) and equality threshold (absolute)."""

    rank_rel_tol: float = 1e-10
    eq_abs_tol: float = 1e-8

    def __post_init__(self):
        if not (self.rank_rel_tol > 0 and self.eq_abs_tol > 0):
            raise ValueError("tolerances must be strictly positive")

    @classmethod
    def from_env(cls, rank_rel_tol=None, eq_abs_tol=None) -> "Tolerance":
        """Build a tolerance, letting ``OFUSION_EQ_TOL`` override the default equality threshold."""
        if eq_abs_tol is None:
            env = os.environ.get("OFUSION_EQ_TOL")
            eq_abs_tol = float(env) if env else cls.eq_abs_tol
        if rank_rel_tol is None:
            rank_rel_tol = cls.rank_rel_tol
        return cls(rank_rel_tol=rank_rel_tol, eq_abs_tol=eq_abs_tol)


DEFAULT_TOL = Tolerance()


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T if np.iscomplexobj(m) else m.T


def frobenius_norm(m) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m)) if m.size else 0.0


def spectral_norm(m) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def _svd(m):
    m = np.asarray(m)
    if m.size == 0:
        k = min(m.shape)
        return (np.zeros((m.shape[0], k), dtype=m.dtype), np.zeros(k),
                np.zeros((k, m.shape[1]), dtype=m.dtype))
    return np.linalg.svd(m, full_matrices=False)


def _cut(s, tol: Tolerance, ref: float = 0.0) -> int:
    if s.size == 0:
        return 0
    scale = max(float(s[0]), ref)
    if scale == 0.0:
        return 0
    return int(np.sum(s > tol.rank_rel_tol * scale))


def numerical_rank(m, tol: Tolerance = DEFAULT_TOL, ref: float = 0.0) -> int:
    return _cut(_svd(m)[1], tol, ref)


def _as_columns(vectors, ambient_dim=None) -> np.ndarray:
    """Stack ``vectors`` as columns. 2-D arrays are taken as already column-stacked."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        if ambient_dim is not None and vectors.shape[0] != ambient_dim:
            raise DimensionMismatch(
                f"expected vectors of length {ambient_dim}, got {vectors.shape[0]}")
        return vectors
    vecs = [np.asarray(v) for v in vectors]
    if not vecs:
        if ambient_dim is None:
            raise DimensionMismatch("cannot infer the ambient dimension of an empty family")
        return np.zeros((ambient_dim, 0))
    lengths = {v.shape for v in vecs}
    if len(lengths) != 1 or vecs[0].ndim != 1:
        raise DimensionMismatch(f"vectors have inconsistent shapes {sorted(lengths)}")
    n = vecs[0].shape[0]
    if ambient_dim is not None and n != ambient_dim:
        raise DimensionMismatch(f"expected vectors of length {ambient_dim}, got {n}")
    return np.column_stack(vecs)


class Subspace:
    """A subspace of F^n held by an orthonormal basis.

    Build instances with :func:`orthonormalize` or the class helpers; the
    constructor checks orthonormality but does not re-factor the basis.
    """

    __slots__ = ("_basis", "__dict__")

    def __init__(self, basis, tol: Tolerance = DEFAULT_TOL):
        b = np.array(basis, dtype=np.result_type(basis, np.float64))
        if b.ndim != 2:
            raise DimensionMismatch("a subspace basis must be a 2-D array")
        d = b.shape[1]
        if d > b.shape[0]:
            raise DimensionMismatch("more basis vectors than the ambient dimension")
        if d and frobenius_norm(adjoint(b) @ b - np.eye(d)) > tol.eq_abs_tol:
            raise ValueError("basis columns are not orthonormal")
        b.setflags(write=False)
        self._basis = b

    @classmethod
    def full(cls, n: int, field: Field = Field.REAL) -> "Subspace":
        return cls(np.eye(n, dtype=field.dtype))

    @classmethod
    def zero(cls, n: int, field: Field = Field.REAL) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=field.dtype))

    @classmethod
    def span(cls, vectors, ambient_dim=None, tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        return orthonormalize(vectors, tol, ambient_dim=ambient_dim)

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def ambient_dim(self) -> int:
        return self._basis.shape[0]

    @property
    def dim(self) -> int:
        return self._basis.shape[1]

    @property
    def field(self) -> Field:
        return Field.of(self._basis)

    @cached_property
    def projector(self) -> np.ndarray:
        p = self._basis @ adjoint(self._basis)
        p.setflags(write=False)
        return p

    def project(self, x):
        return self._basis @ (adjoint(self._basis) @ x)

    def coords(self, x):
        """Coordinates of ``x`` in the stored basis (the orthogonal projection's coordinates)."""
        return adjoint(self._basis) @ x

    def __contains__(self, x) -> bool:
        x = np.asarray(x)
        return np.linalg.norm(x - self.project(x)) <= DEFAULT_TOL.eq_abs_tol * (1 + np.linalg.norm(x))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim}, field={self.field.value})"


def orthonormalize(vectors, tol: Tolerance = DEFAULT_TOL, ambient_dim=None, ref: float = 0.0) -> Subspace:
    """Orthonormal basis of the span of ``vectors`` via a thin SVD.

    ``vectors`` is a sequence of 1-D arrays or an ``n x k`` array whose columns
    are the vectors.  ``ref`` raises the rank cut-off for families that are the
    image of an operator of norm ``ref`` (so numerically zero images vanish).
    """
    m = _as_columns(vectors, ambient_dim)
    m = np.asarray(m, dtype=np.result_type(m, np.float64))
    u, s, _ = _svd(m)
    r = _cut(s, tol, ref)
    return Subspace(np.ascontiguousarray(u[:, :r]), tol)


def image(op, domain: Subspace | None = None, tol: Tolerance = DEFAULT_TOL, ref: float | None = None) -> Subspace:
    """Range of ``op`` (restricted to ``domain`` when given).

    The rank cut is relative to ``ref``, which defaults to the norm of ``op``.
    """
    op = np.asarray(op)
    ref = spectral_norm(op) if ref is None else ref
    cols = op if domain is None else op @ domain.basis
    return orthonormalize(cols, tol, ambient_dim=op.shape[0], ref=ref)


def orthogonal_projector(s: Subspace) -> np.ndarray:
    return np.array(s.projector)


def _check_ambient(*spaces: Subspace):
    dims = {s.ambient_dim for s in spaces}
    if len(dims) != 1:
        raise DimensionMismatch(f"subspaces live in different ambient spaces: {sorted(dims)}")


def direct_sum_complement_check(v: Subspace, w: Subspace, tol: Tolerance = DEFAULT_TOL):
    """Whether F^n = V + W^perp as a direct sum.

    Returns ``(ok, min_singular)``.  ``min_singular`` is the smallest singular
    value of ``B_W^H B_V`` (the cosine of the largest principal angle), 1.0 for
    two zero subspaces and 0.0 when the dimensions differ.
    """
    _check_ambient(v, w)
    if v.dim != w.dim:
        return False, 0.0
    if v.dim == 0:
        return True, 1.0
    s = np.linalg.svd(adjoint(w.basis) @ v.basis, compute_uv=False)
    smin = float(s[-1])
    return smin > tol.eq_abs_tol, smin


def oblique_projector(v: Subspace, w: Subspace, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """The idempotent with range V and kernel W^perp: ``B_V (B_W^H B_V)^{-1} B_W^H``."""
    ok, smin = direct_sum_complement_check(v, w, tol)
    if not ok:
        raise DecompositionError(
            f"ambient space is not V + W^perp (dim V={v.dim}, dim W={w.dim}, "
            f"min singular={smin:.3e})", smin)
    n = v.ambient_dim
    if v.dim == 0:
        return np.zeros((n, n), dtype=np.result_type(v.basis, w.basis))
    cross = adjoint(w.basis) @ v.basis
    return v.basis @ np.linalg.solve(cross, adjoint(w.basis))


def pseudo_inverse(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    m = np.asarray(m)
    if m.size == 0:
        return np.zeros(m.shape[::-1], dtype=np.result_type(m, np.float64))
    return np.linalg.pinv(m, rcond=tol.rank_rel_tol)


def subspace_sum(a: Subspace, b: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    _check_ambient(a, b)
    return orthonormalize(np.hstack([a.basis, b.basis]), tol, ambient_dim=a.ambient_dim, ref=1.0)


def _null_directions(m, tol: Tolerance) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``m`` (scale reference 1)."""
    k = m.shape[1]
    if k == 0:
        return np.zeros((0, 0), dtype=m.dtype)
    if m.shape[0] == 0:
        return np.eye(k, dtype=m.dtype)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    r = _cut(s, tol, ref=1.0)
    return adjoint(vh[r:])


def subspace_intersection(a: Subspace, b: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """A ∩ B: the directions of A annihilated by the projector onto B^perp."""
    _check_ambient(a, b)
    residual = a.basis - b.project(a.basis)
    null = _null_directions(residual, tol)
    return orthonormalize(a.basis @ null, tol, ambient_dim=a.ambient_dim, ref=1.0)


def subspace_within_complement(a: Subspace, b: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """A ∩ B^perp, computed inside A."""
    _check_ambient(a, b)
    null = _null_directions(adjoint(b.basis) @ a.basis, tol)
    return orthonormalize(a.basis @ null, tol, ambient_dim=a.ambient_dim, ref=1.0)


def orthogonal_complement(a: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    full = Subspace.full(a.ambient_dim, a.field)
    return subspace_within_complement(full, a, tol)


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Frobenius distance between the orthogonal projectors."""
    _check_ambient(a, b)
    return frobenius_norm(a.projector - b.projector)


def same_subspace(a: Subspace, b: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    return subspace_distance(a, b) <= tol.eq_abs_tol


def contains(outer: Subspace, inner: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``inner`` ⊆ ``outer``."""
    _check_ambient(outer, inner)
    return frobenius_norm(inner.basis - outer.project(inner.basis)) <= tol.eq_abs_tol

