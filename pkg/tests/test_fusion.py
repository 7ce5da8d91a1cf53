import numpy as np
import pytest

from ofusion.errors import DimensionMismatch, MembershipError
from ofusion.fusion import (
    BlockMask,
    FusionFrame,
    KElement,
    analysis,
    analysis_injective_on,
    classify,
    fusion_bounds,
    fusion_frame_criterion_on_kernel_complement,
    fusion_frame_operator,
    mask,
    mask_matrix,
    synthesis,
)
from ofusion.generate import random_fusion_frame
from ofusion.linalg import Field, Subspace, adjoint, direct_sum_complement_check, frobenius_norm, orthonormalize

from conftest import coord, instances

E3 = np.eye(3)


def axes2(w=(1.0, 1.0)):
    return FusionFrame([coord(2, 0), coord(2, 1)], w)


def overlap3(w=(1.0, 1.0)):
    return FusionFrame([coord(3, 0, 1), coord(3, 1, 2)], w)


class TestModel:
    def test_weights_positive(self):
        with pytest.raises(ValueError):
            FusionFrame([coord(2, 0)], [0.0])

    def test_weight_count(self):
        with pytest.raises(DimensionMismatch):
            FusionFrame([coord(2, 0)], [1.0, 1.0])

    def test_ambient_mismatch(self):
        with pytest.raises(DimensionMismatch):
            FusionFrame([coord(2, 0), coord(3, 0)], [1.0, 1.0])

    def test_needs_a_block(self):
        with pytest.raises(ValueError):
            FusionFrame([], [])

    def test_repeated_subspaces_allowed(self):
        ff = FusionFrame([coord(2, 0), coord(2, 0)], [1.0, 2.0])
        np.testing.assert_allclose(fusion_frame_operator(ff), np.diag([5.0, 0.0]))

    def test_coords_roundtrip(self, rng):
        ff = random_fusion_frame(rng, 6, 3, "random")
        c = rng.standard_normal(ff.total_dim)
        np.testing.assert_allclose(ff.to_coords(ff.from_coords(c)), c, atol=1e-12)


class TestSynthesisAnalysis:
    def test_zero(self):
        assert not synthesis(axes2(), axes2().zero_element()).any()

    def test_direct_sum(self):
        x = KElement([E3[:2, 0], E3[:2, 1]])
        np.testing.assert_array_equal(synthesis(axes2(), x), [1.0, 1.0])
        np.testing.assert_array_equal(synthesis(axes2((2.0, 3.0)), x), [2.0, 3.0])

    def test_membership_enforced(self):
        with pytest.raises(MembershipError):
            synthesis(axes2(), KElement([np.array([0.0, 1.0]), np.array([0.0, 1.0])]))

    def test_block_count_enforced(self):
        with pytest.raises(DimensionMismatch):
            synthesis(axes2(), KElement([np.zeros(2)]))

    def test_analysis_examples(self):
        assert all(not b.any() for b in analysis(FusionFrame([coord(3, 0)], [1.0]), E3[:, 2]).blocks)
        x = analysis(overlap3(), E3[:, 1])
        np.testing.assert_array_equal(x.blocks[0], E3[:, 1])
        np.testing.assert_array_equal(x.blocks[1], E3[:, 1])
        y = analysis(overlap3((2.0, 2.0)), E3[:, 1])
        np.testing.assert_array_equal(y.blocks[0], 2 * E3[:, 1])

    def test_mutually_adjoint(self):
        for rng, inst in instances(11, 20):
            ff = inst.wff
            n = ff.ambient_dim
            for _ in range(100):
                c = rng.standard_normal(ff.total_dim) + 1j * rng.standard_normal(ff.total_dim)
                f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                x = ff.from_coords(c)
                lhs = np.vdot(f, synthesis(ff, x))
                rhs = sum(np.vdot(a, b) for a, b in zip(analysis(ff, f).blocks, x.blocks))
                assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))

    def test_synthesis_of_analysis_is_frame_operator(self, rng):
        ff = random_fusion_frame(rng, 5, 3, "random", Field.COMPLEX)
        f = rng.standard_normal(5)
        np.testing.assert_allclose(synthesis(ff, analysis(ff, f)), fusion_frame_operator(ff) @ f, atol=1e-12)


class TestOperator:
    def test_parseval_axes(self):
        np.testing.assert_array_equal(fusion_frame_operator(axes2()), np.eye(2))

    def test_overlap(self):
        np.testing.assert_allclose(fusion_frame_operator(overlap3()), np.diag([1.0, 2.0, 1.0]), atol=1e-15)

    @pytest.mark.parametrize("kind", ["tight", "parseval"])
    def test_tight_is_multiple_of_projector(self, rng, kind):
        for _ in range(20):
            ff = random_fusion_frame(rng, int(rng.integers(1, 9)), int(rng.integers(1, 6)), kind)
            alpha = classify(ff).tight_constant
            assert frobenius_norm(fusion_frame_operator(ff) - alpha * ff.span.projector) <= 1e-10
            if kind == "parseval":
                assert classify(ff).parseval

    def test_psd_and_range(self):
        for _, inst in instances(12, 30):
            S = fusion_frame_operator(inst.wff)
            assert frobenius_norm(S - adjoint(S)) <= 1e-12
            ev = np.linalg.eigvalsh(S)
            assert ev.min() >= -1e-10
            assert orthonormalize(S, ref=1.0).dim == inst.wff.span.dim


class TestBounds:
    def test_axes(self):
        assert fusion_bounds(axes2(), Subspace.full(2)) == pytest.approx((1.0, 1.0))

    def test_overlap(self):
        assert fusion_bounds(overlap3(), Subspace.full(3)) == pytest.approx((1.0, 2.0))

    def test_quadratic_homogeneity(self, rng):
        ff = random_fusion_frame(rng, 6, 3, "random")
        a, b = fusion_bounds(ff, ff.span)
        a3, b3 = fusion_bounds(ff.with_weights(3 * ff.weights), ff.span)
        assert (a3, b3) == pytest.approx((9 * a, 9 * b))

    def test_containment_violation(self):
        with pytest.raises(MembershipError):
            fusion_bounds(overlap3(), coord(3, 0, 1))


class TestClassify:
    def test_axes(self):
        c = classify(axes2(), Subspace.full(2))
        assert c.riesz_fusion_basis and c.parseval and c.orthonormal_fusion_basis and c.complete
        assert not c.overcomplete

    def test_overlap(self):
        c = classify(overlap3(), Subspace.full(3))
        assert c.frame and c.overcomplete and not c.riesz_fusion_basis

    def test_incomplete(self):
        c = classify(FusionFrame([coord(2, 0)], [1.0]), Subspace.full(2))
        assert not c.complete and not c.frame

    def test_orthonormal_needs_unit_weights(self):
        c = classify(axes2((2.0, 1.0)))
        assert c.riesz_fusion_basis and not c.orthonormal_fusion_basis

    def test_zero_block_blocks_orthonormal_status(self):
        c = classify(FusionFrame([coord(2, 0), coord(2, 1), Subspace.zero(2)], [1.0, 1.0, 1.0]))
        assert c.riesz_fusion_basis and not c.orthonormal_fusion_basis

    @pytest.mark.parametrize("kind,expect", [("riesz", True), ("overcomplete", False)])
    def test_generators(self, rng, kind, expect):
        for _ in range(20):
            n = int(rng.integers(2, 10))
            m = int(rng.integers(2, n + 1))
            c = classify(random_fusion_frame(rng, n, m, kind))
            assert c.frame and c.riesz_fusion_basis is expect and c.overcomplete is not expect


class TestMask:
    def test_all_and_none(self):
        x = KElement([E3[:2, 0], E3[:2, 1]])
        ff = axes2()
        assert all(np.array_equal(a, b) for a, b in zip(mask(ff, x, BlockMask({0, 1})).blocks, x.blocks))
        assert all(not b.any() for b in mask(ff, x, BlockMask(set())).blocks)

    def test_second_block(self):
        x = mask(axes2(), KElement([E3[:2, 0], E3[:2, 1]]), BlockMask({1}))
        np.testing.assert_array_equal(x.blocks[0], [0.0, 0.0])
        np.testing.assert_array_equal(x.blocks[1], [0.0, 1.0])

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            mask(axes2(), axes2().zero_element(), BlockMask({2}))

    def test_matrix_is_orthogonal_projection(self):
        M = mask_matrix(overlap3(), BlockMask({1}))
        np.testing.assert_array_equal(M @ M, M)
        np.testing.assert_array_equal(M, M.T)


class TestKernelComplement:
    def test_riesz(self, rng):
        ff = random_fusion_frame(rng, 5, 3, "riesz")
        s = np.linalg.svd(ff.synthesis_matrix, compute_uv=False)
        assert fusion_frame_criterion_on_kernel_complement(ff) == pytest.approx((s[-1] ** 2, s[0] ** 2))

    def test_overlap(self):
        assert fusion_frame_criterion_on_kernel_complement(overlap3()) == pytest.approx((1.0, 2.0))

    def test_subfamily_is_frame_or_incomplete(self):
        sub = FusionFrame([coord(3, 0), coord(3, 1, 2)], [1.0, 1.0])
        a, _ = fusion_frame_criterion_on_kernel_complement(sub)
        c = classify(sub, Subspace.full(3))
        assert c.complete and c.frame and a > 0

    def test_agrees_with_fusion_bounds(self):
        for _, inst in instances(13, 40):
            a, b = fusion_frame_criterion_on_kernel_complement(inst.wff)
            fa, fb = fusion_bounds(inst.wff, inst.wff.span)
            assert a == pytest.approx(fa, rel=1e-8) and b == pytest.approx(fb, rel=1e-8)


def test_analysis_injective_iff_direct_sum():
    for rng, inst in instances(14, 40):
        W = inst.wff.span
        V = inst.V if rng.uniform() < 0.5 else orthonormalize(rng.standard_normal((W.ambient_dim, W.dim)))
        inj, _ = analysis_injective_on(inst.wff, V)
        ok, _ = direct_sum_complement_check(V, W)
        assert inj == ok
    bad_V = coord(3, 2)
    inj, smin = analysis_injective_on(FusionFrame([coord(3, 0)], [1.0]), bad_V)
    assert not inj and smin == 0.0
