"""Seeded random instances.

All randomness comes from ``numpy.random.default_rng(seed)`` (PCG64).  Draws
are standard normal; complex draws are ``(x + i y) / sqrt(2)``.  The order in
which a generator consumes the stream is part of its contract, so the same
seed reproduces the same instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import VectorFrame
from .fusion import FusionFrame
from .linalg import (
    DEFAULT_TOL,
    Field,
    Subspace,
    Tolerance,
    direct_sum_complement_check,
    orthonormalize,
)
from .systems import FrameSystem

__all__ = [
    "KINDS",
    "InfeasibleKind",
    "Instance",
    "gaussian",
    "random_subspace",
    "random_subspace_of",
    "random_weights",
    "random_fusion_frame",
    "random_fusion_frame_on",
    "random_partner_subspace",
    "random_local_frames",
    "random_kernel_operator",
    "random_range_map",
    "random_instance",
]

KINDS = ("riesz", "overcomplete", "tight", "parseval", "random")


class InfeasibleKind(ValueError):
    """The requested kind cannot be realised with the given sizes."""


def gaussian(rng: np.random.Generator, shape, field: Field = Field.REAL) -> np.ndarray:
    if field is Field.REAL:
        return rng.standard_normal(shape)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_subspace(rng, n: int, d: int, field: Field = Field.REAL) -> Subspace:
    return orthonormalize(gaussian(rng, (n, d), field), ambient_dim=n)


def random_subspace_of(rng, W: Subspace, d: int) -> Subspace:
    return orthonormalize(W.basis @ gaussian(rng, (W.dim, d), W.field), ambient_dim=W.ambient_dim)


def random_weights(rng, m: int, low: float = 0.5, high: float = 2.0) -> np.ndarray:
    return rng.uniform(low, high, size=m)


def _split(rng, total: int, parts: int) -> list:
    """Random composition of ``total`` into ``parts`` positive integers."""
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
    bounds = [0, *map(int, cuts), total]
    return [bounds[k + 1] - bounds[k] for k in range(parts)]


def _blocks_from_columns(cols: np.ndarray, sizes) -> list:
    out, start = [], 0
    for d in sizes:
        out.append(orthonormalize(cols[:, start:start + d], ambient_dim=cols.shape[0]))
        start += d
    return out


def random_fusion_frame(rng, n: int, m: int, kind: str = "random", field: Field = Field.REAL,
                        dim_W: int | None = None) -> FusionFrame:
    """A fusion frame of ``m`` blocks in F^n of the requested kind.

    riesz: a random (non-orthogonal) basis of a subspace W split into blocks.
    overcomplete: blocks whose sum is not direct; block 0 overlaps the span
    of the others in exactly one direction and keeps a direction of its own.
    parseval / tight: unions of orthogonal decompositions of W with equal weights.
    random: subspaces of random dimension and random weights.
    """
    if n < 1 or m < 1:
        raise InfeasibleKind("dimension and block count must be positive")
    if kind not in KINDS:
        raise InfeasibleKind(f"unknown kind {kind!r}")
    if kind == "riesz":
        if m > n:
            raise InfeasibleKind(f"a Riesz fusion basis of {m} nonzero blocks needs dim >= {m}")
        k = dim_W or int(rng.integers(m, n + 1))
        cols = gaussian(rng, (n, n), field)[:, :k]
        return FusionFrame(_blocks_from_columns(cols, _split(rng, k, m)), random_weights(rng, m))
    if kind == "overcomplete":
        lo = max(2, m)
        if m < 2 or n < lo:
            raise InfeasibleKind(f"an overcomplete family of {m} nonzero blocks needs blocks >= 2 and dim >= {lo}")
        hi = max(lo, n - 1)
        k = dim_W or int(rng.integers(lo, hi + 1))
        cols = gaussian(rng, (n, k), field)
        u_cols, x = cols[:, :k - 1], cols[:, k - 1]
        shared = u_cols @ gaussian(rng, (k - 1,), field)
        head = orthonormalize(np.column_stack([shared, x]), ambient_dim=n)
        rest = _blocks_from_columns(u_cols, _split(rng, k - 1, m - 1))
        order = rng.permutation(m)
        blocks = [head, *rest]
        return FusionFrame([blocks[j] for j in order], random_weights(rng, m))
    if kind in ("parseval", "tight"):
        k = dim_W or int(rng.integers(1, n + 1))
        groups = int(np.ceil(m / k))
        per_group = _split(rng, m, groups) if groups > 1 else [m]
        while any(p > k for p in per_group):
            per_group = _split(rng, m, groups)
        W = random_subspace(rng, n, k, field)
        subs = []
        for p in per_group:
            rot = orthonormalize(gaussian(rng, (k, k), field), ambient_dim=k).basis
            subs.extend(_blocks_from_columns(W.basis @ rot, _split(rng, k, p)))
        scale = 1.0 if kind == "parseval" else float(np.sqrt(rng.uniform(0.5, 3.0)))
        return FusionFrame(subs, np.full(m, scale / np.sqrt(groups)))
    dims = rng.integers(1, n + 1, size=m)
    return FusionFrame([random_subspace(rng, n, int(d), field) for d in dims], random_weights(rng, m))


def random_fusion_frame_on(rng, W: Subspace, m: int, extra: int = 1) -> FusionFrame:
    """Random blocks inside W whose union spans W."""
    k = W.dim
    coeffs = gaussian(rng, (k, k), W.field)
    owners = rng.integers(0, m, size=k)
    subs = []
    for i in range(m):
        own = coeffs[:, owners == i]
        more = gaussian(rng, (k, int(rng.integers(0, extra + 1))), W.field)
        cols = np.hstack([own, more])
        if cols.shape[1] == 0:
            cols = gaussian(rng, (k, 1), W.field)
        subs.append(orthonormalize(W.basis @ cols, ambient_dim=W.ambient_dim))
    return FusionFrame(subs, random_weights(rng, m))


def random_partner_subspace(rng, W: Subspace, max_tilt: float = 1.0,
                            tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """A subspace V with ``F^n = V + W^perp``: the graph of a random map W -> W^perp."""
    n = W.ambient_dim
    g = gaussian(rng, (n, W.dim), W.field)
    out = g - W.project(g)
    norm = np.linalg.norm(out, 2) if out.size else 0.0
    tilt = rng.uniform(0.0, max_tilt)
    if norm > 0:
        out = out * (tilt / norm)
    V = orthonormalize(W.basis + out, ambient_dim=n)
    ok, smin = direct_sum_complement_check(V, W, tol)
    if not ok:
        raise RuntimeError(f"partner subspace is degenerate (min singular {smin:.3e})")
    return V


def random_local_frames(rng, ff: FusionFrame, extra: int = 2, zero_prob: float = 0.2) -> list:
    """A spanning vector family in each block, sometimes with a trailing zero vector."""
    out = []
    for s in ff.subspaces:
        size = s.dim + int(rng.integers(0, extra + 1))
        cols = s.basis @ gaussian(rng, (s.dim, size), s.field)
        if rng.uniform() < zero_prob:
            cols = np.hstack([cols, np.zeros((s.ambient_dim, 1), dtype=cols.dtype)])
        out.append(VectorFrame(cols, ambient_dim=s.ambient_dim))
    return out


def random_range_map(rng, V: Subspace, cols: int) -> np.ndarray:
    """An ``n x cols`` matrix with columns in V (a random map into V)."""
    return V.basis @ gaussian(rng, (V.dim, cols), V.field)


def random_kernel_operator(rng, ff: FusionFrame, rows: int | None = None) -> np.ndarray:
    """A map H on block coordinates with ``K_W = Ker H + Im T^H`` direct.

    The kernel is a random complement of ``Im T^H``: the graph of a random map
    from ``Ker T`` into ``Im T^H``.
    """
    t = ff.synthesis_matrix
    D = t.shape[1]
    rows = ff.ambient_dim if rows is None else rows
    _, s, vh = np.linalg.svd(t, full_matrices=True)
    r = int(np.sum(s > DEFAULT_TOL.rank_rel_tol * (s[0] if s.size else 1.0)))
    im = np.conj(vh[:r]).T
    ker = np.conj(vh[r:]).T
    field = Field.of(t)
    comp = ker + im @ gaussian(rng, (r, D - r), field)
    # projector onto Im T^H along the chosen complement
    basis = np.hstack([im, comp])
    coords = np.linalg.solve(basis, np.eye(D))
    proj = im @ coords[:r]
    return gaussian(rng, (rows, D), field) @ proj


@dataclass(frozen=True)
class Instance:
    wff: FusionFrame
    V: Subspace
    vff: FusionFrame
    kind: str
    field: Field
    min_singular: float

    @property
    def W(self) -> Subspace:
        return self.wff.span

    def system(self, rng) -> FrameSystem:
        return FrameSystem(self.wff, random_local_frames(rng, self.wff))


def random_instance(rng, n: int, m: int, kind: str = "random", field: Field = Field.REAL,
                    max_tilt: float = 1.0) -> Instance:
    wff = random_fusion_frame(rng, n, m, kind, field)
    W = wff.span
    V = random_partner_subspace(rng, W, max_tilt)
    vff = random_fusion_frame_on(rng, V, m)
    _, smin = direct_sum_complement_check(V, W)
    return Instance(wff, V, vff, kind, field, smin)
