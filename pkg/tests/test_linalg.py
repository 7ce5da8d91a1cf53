
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofusion.errors import DecompositionError, DimensionMismatch
from ofusion.linalg import (
    Field,
    Subspace,
    Tolerance,
    adjoint,
    contains,
    direct_sum_complement_check,
    frobenius_norm,
    oblique_projector,
    orthogonal_complement,
    orthogonal_projector,
    orthonormalize,
    pseudo_inverse,
    spectral_norm,
    subspace_distance,
    subspace_intersection,
    subspace_sum,
    subspace_within_complement,
)

from conftest import coord

S2 = np.sqrt(2.0)


def oblique_oracle(V: Subspace, W: Subspace, f):
    """Split f = a + b with a in V and b in W^perp by solving the stacked system."""
    wp = orthogonal_complement(W)
    coeffs = np.linalg.solve(np.hstack([V.basis, wp.basis]), f)
    return V.basis @ coeffs[:V.dim]


def random_pair(rng, n, d, complex_=False):
    g = rng.standard_normal((n, d))
    if complex_:
        g = g + 1j * rng.standard_normal((n, d))
    W = orthonormalize(g)
    t = rng.standard_normal((n, d)) * 0.5
    if complex_:
        t = t + 1j * rng.standard_normal((n, d)) * 0.5
    V = orthonormalize(W.basis + (t - W.project(t)))
    return V, W


class TestField:
    def test_adjoint_real_is_transpose(self):
        m = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(adjoint(m), m.T)

    def test_adjoint_complex_is_conjugate_transpose(self):
        m = np.array([[1 + 2j, 3], [0, -1j]])
        np.testing.assert_array_equal(adjoint(m), np.conj(m).T)
        assert Field.of(m) is Field.COMPLEX
        assert Field.of(m.real) is Field.REAL


class TestTolerance:
    def test_defaults(self):
        t = Tolerance()
        assert t.rank_rel_tol == 1e-10 and t.eq_abs_tol == 1e-8

    @pytest.mark.parametrize("kw", [{"rank_rel_tol": 0.0}, {"eq_abs_tol": -1.0}])
    def test_strictly_positive(self, kw):
        with pytest.raises(ValueError):
            Tolerance(**kw)

    def test_rank_below_eq_not_required(self):
        assert Tolerance(rank_rel_tol=1e-3, eq_abs_tol=1e-6).rank_rel_tol > 1e-6

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("OFUSION_EQ_TOL", "1e-5")
        assert Tolerance.from_env().eq_abs_tol == 1e-5
        assert Tolerance.from_env(eq_abs_tol=1e-3).eq_abs_tol == 1e-3
        monkeypatch.delenv("OFUSION_EQ_TOL")
        assert Tolerance.from_env().eq_abs_tol == 1e-8


class TestOrthonormalize:
    def test_collinear(self):
        s = orthonormalize([np.array([1.0, 0]), np.array([2.0, 0])])
        assert s.dim == 1
        np.testing.assert_allclose(s.projector, np.diag([1.0, 0.0]), atol=1e-15)

    def test_empty(self):
        s = orthonormalize([], ambient_dim=2)
        assert s.dim == 0 and s.ambient_dim == 2

    def test_full(self):
        s = orthonormalize([np.array([1.0, 1]), np.array([1.0, -1])])
        assert s.dim == 2

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            orthonormalize([np.ones(2), np.ones(3)])

    def test_relative_cut(self):
        s = orthonormalize(np.diag([1.0, 1e-12, 0.0]))
        assert s.dim == 1
        s = orthonormalize(np.diag([1.0, 1e-9, 0.0]))
        assert s.dim == 2

    def test_basis_is_read_only(self):
        s = orthonormalize(np.eye(2))
        with pytest.raises(ValueError):
            s.basis[0, 0] = 3.0

    def test_non_orthonormal_basis_rejected(self):
        with pytest.raises(ValueError):
            Subspace(np.array([[1.0], [1.0]]))


class TestOrthogonalProjector:
    def test_full_space(self):
        np.testing.assert_array_equal(orthogonal_projector(Subspace.full(3)), np.eye(3))

    def test_zero(self):
        np.testing.assert_array_equal(orthogonal_projector(Subspace.zero(3)), np.zeros((3, 3)))

    def test_diagonal_line(self):
        p = orthogonal_projector(orthonormalize([np.array([1.0, 1.0])]))
        np.testing.assert_allclose(p, np.full((2, 2), 0.5), atol=1e-15)


class TestDirectSum:
    def test_self_pairing(self, rng):
        W = orthonormalize(rng.standard_normal((5, 3)))
        ok, smin = direct_sum_complement_check(W, W)
        assert ok and smin == pytest.approx(1.0)

    def test_orthogonal_pair(self):
        ok, smin = direct_sum_complement_check(coord(2, 0), coord(2, 1))
        assert not ok and smin == 0.0

    def test_tilted_pair(self):
        ok, smin = direct_sum_complement_check(coord(2, 0), orthonormalize([np.array([1.0, 1.0])]))
        assert ok and smin == pytest.approx(1 / S2)

    def test_dimension_mismatch_is_not_ok(self):
        ok, smin = direct_sum_complement_check(coord(3, 0), coord(3, 0, 1))
        assert not ok and smin == 0.0

    def test_ambient_mismatch(self):
        with pytest.raises(DimensionMismatch):
            direct_sum_complement_check(coord(2, 0), coord(3, 0))


class TestObliqueProjector:
    def test_equal_spaces_give_orthogonal_projector(self, rng):
        W = orthonormalize(rng.standard_normal((4, 2)))
        np.testing.assert_allclose(oblique_projector(W, W), W.projector, atol=1e-13)

    def test_hand_example(self):
        P = oblique_projector(coord(2, 0), orthonormalize([np.array([1.0, 1.0])]))
        np.testing.assert_allclose(P, np.array([[1.0, 1.0], [0.0, 0.0]]), atol=1e-14)

    def test_composition_with_orthogonal_projector(self, rng):
        V, W = random_pair(rng, 6, 3)
        P = oblique_projector(V, W)
        np.testing.assert_allclose(P @ W.projector, P, atol=1e-12)
        np.testing.assert_allclose(W.projector @ P, W.projector, atol=1e-12)

    def test_failure_reports_min_singular(self):
        with pytest.raises(DecompositionError) as info:
            oblique_projector(coord(2, 0), coord(2, 1))
        assert info.value.min_singular == 0.0

    @pytest.mark.parametrize("complex_", [False, True])
    def test_against_splitting_oracle(self, rng, complex_):
        for _ in range(20):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, n + 1))
            V, W = random_pair(rng, n, d, complex_)
            P = oblique_projector(V, W)
            f = rng.standard_normal(n) + (1j * rng.standard_normal(n) if complex_ else 0)
            np.testing.assert_allclose(P @ f, oblique_oracle(V, W, f), atol=1e-10)

    @pytest.mark.parametrize("complex_", [False, True])
    def test_invariants(self, rng, complex_):
        for _ in range(50):
            n = int(rng.integers(1, 10))
            d = int(rng.integers(0, n + 1))
            V, W = random_pair(rng, n, d, complex_)
            P = oblique_projector(V, W)
            assert frobenius_norm(P @ P - P) <= 1e-8 * (1 + frobenius_norm(P))
            np.testing.assert_allclose(adjoint(P), oblique_projector(W, V), atol=1e-8)
            if d:
                np.testing.assert_allclose(P @ V.basis, V.basis, atol=1e-10)
            wp = orthogonal_complement(W)
            if wp.dim:
                np.testing.assert_allclose(P @ wp.basis, 0, atol=1e-10)


class TestPseudoInverse:
    def test_identity(self):
        np.testing.assert_array_equal(pseudo_inverse(np.eye(3)), np.eye(3))

    def test_zero(self):
        z = pseudo_inverse(np.zeros((2, 3)))
        assert z.shape == (3, 2) and not z.any()

    def test_diagonal(self):
        np.testing.assert_allclose(pseudo_inverse(np.diag([1.0, 2.0, 0.0])), np.diag([1.0, 0.5, 0.0]))

    def test_empty(self):
        assert pseudo_inverse(np.zeros((0, 3))).shape == (3, 0)

    def test_penrose_identities(self, rng):
        for _ in range(100):
            r, c = rng.integers(1, 13, size=2)
            k = int(rng.integers(0, min(r, c) + 1))
            M = rng.standard_normal((r, k)) @ rng.standard_normal((k, c))
            if rng.uniform() < 0.5:
                M = M + 1j * (rng.standard_normal((r, k)) @ rng.standard_normal((k, c)))
            X = pseudo_inverse(M)
            scale = 1 + frobenius_norm(M) * frobenius_norm(X)
            tol = 1e-8 * scale ** 2
            assert frobenius_norm(M @ X @ M - M) <= tol
            assert frobenius_norm(X @ M @ X - X) <= tol
            assert frobenius_norm(adjoint(M @ X) - M @ X) <= tol
            assert frobenius_norm(adjoint(X @ M) - X @ M) <= tol


class TestLattice:
    def test_trivial_identities(self, rng):
        A = orthonormalize(rng.standard_normal((5, 2)))
        assert subspace_distance(subspace_intersection(A, A), A) < 1e-10
        assert subspace_distance(subspace_sum(A, Subspace.zero(5)), A) < 1e-12

    def test_intersection_example(self):
        i = subspace_intersection(coord(3, 0, 1), coord(3, 1, 2))
        assert subspace_distance(i, coord(3, 1)) < 1e-14

    def test_within_complement_example(self):
        i = subspace_within_complement(coord(3, 0, 1), coord(3, 1))
        assert subspace_distance(i, coord(3, 0)) < 1e-14

    def test_ambient_mismatch(self):
        with pytest.raises(DimensionMismatch):
            subspace_sum(coord(2, 0), coord(3, 0))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 7).flatmap(lambda n: st.tuples(
        st.just(n), st.sets(st.integers(0, n - 1)), st.sets(st.integers(0, n - 1)))))
    def test_exact_on_coordinate_lattice(self, data):
        n, a, b = data
        A, B = coord(n, *sorted(a)), coord(n, *sorted(b))
        assert subspace_distance(subspace_sum(A, B), coord(n, *sorted(a | b))) < 1e-14
        assert subspace_distance(subspace_intersection(A, B), coord(n, *sorted(a & b))) < 1e-14
        assert subspace_distance(subspace_within_complement(A, B), coord(n, *sorted(a - b))) < 1e-14

    def test_dimension_formula_on_random_subspaces(self, rng):
        for _ in range(40):
            n = int(rng.integers(2, 9))
            shared = rng.standard_normal((n, int(rng.integers(0, n // 2 + 1))))
            A = orthonormalize(np.hstack([shared, rng.standard_normal((n, int(rng.integers(0, 2))))]), ambient_dim=n)
            B = orthonormalize(np.hstack([shared, rng.standard_normal((n, int(rng.integers(0, 2))))]), ambient_dim=n)
            inter = subspace_intersection(A, B)
            assert inter.dim == A.dim + B.dim - subspace_sum(A, B).dim
            assert contains(A, inter, Tolerance(eq_abs_tol=1e-9)) and contains(B, inter, Tolerance(eq_abs_tol=1e-9))
            wc = subspace_within_complement(A, B)
            assert frobenius_norm(adjoint(B.basis) @ wc.basis) < 1e-9
            overlap = np.linalg.matrix_rank(adjoint(B.basis) @ A.basis, tol=1e-10) if A.dim and B.dim else 0
            assert wc.dim == A.dim - overlap


def test_norms():
    m = np.array([[3.0, 0.0], [0.0, 4.0]])
    assert frobenius_norm(m) == 5.0
    assert spectral_norm(m) == 4.0
    assert frobenius_norm(np.zeros((0, 2))) == 0.0
