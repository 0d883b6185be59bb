import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cayley_sobolev import calculus as calc
from cayley_sobolev.cayley import GroupSpec, build_ball

seeds = st.integers(0, 2**32 - 1)


def inside(ball, seed, halo=1):
    u = np.random.default_rng(seed).standard_normal(len(ball))
    u[~calc.validity_mask(ball, halo)] = 0.0
    return u


def values_at(ball, u, coords):
    return np.array([u[ball.index_of(c)] for c in coords])


class TestLaplacian:
    def test_delta_z1(self, z1_ball):
        lap = calc.laplacian(z1_ball, z1_ball.delta())
        assert values_at(z1_ball, lap, [(0,), (-1,), (1,), (2,), (-2,)]).tolist() == \
            [-2, 1, 1, 0, 0]
        assert np.count_nonzero(lap) == 3

    def test_delta_z2(self, z2_ball):
        assert calc.laplacian(z2_ball, z2_ball.delta())[0] == -4

    def test_constant(self):
        ball = build_ball(GroupSpec.lattice(3), 5)
        lap = calc.laplacian(ball, np.ones(len(ball)))
        assert np.all(lap[ball.distance <= 4] == 0)

    def test_matches_sparse_matrix(self, heis_ball, rng):
        u = rng.standard_normal(len(heis_ball))
        np.testing.assert_allclose(calc.laplacian(heis_ball, u),
                                   heis_ball.laplacian_matrix @ u, atol=1e-13)

    @given(seeds)
    def test_symmetry(self, seed):
        for ball in (build_ball(GroupSpec.lattice(3), 5), build_ball(GroupSpec.heisenberg(), 3)):
            u, v = inside(ball, seed), inside(ball, seed + 1)
            a, b = calc.laplacian(ball, u) @ v, u @ calc.laplacian(ball, v)
            assert abs(a - b) <= 1e-12 * max(1.0, abs(a))

    @given(seeds)
    def test_green_identity(self, seed):
        for ball in (build_ball(GroupSpec.lattice(3), 5), build_ball(GroupSpec.heisenberg(), 3)):
            u = inside(ball, seed)
            lhs = -calc.laplacian(ball, u) @ u
            assert lhs == pytest.approx(calc.gamma(ball, u).sum(), rel=1e-12)


class TestDifferences:
    def test_linear_function(self):
        ball = build_ball(GroupSpec.lattice(1), 5)
        u = ball.elements[:, 0].astype(float)
        plus = int(np.nonzero(ball.spec.generators[:, 0] == 1)[0][0])
        d = calc.directional_diff(ball, u, plus)
        assert np.all(d[ball.distance <= 4] == 1)

    def test_delta_step(self, z1_ball):
        plus = int(np.nonzero(z1_ball.spec.generators[:, 0] == 1)[0][0])
        d = calc.directional_diff(z1_ball, z1_ball.delta(), plus)
        assert values_at(z1_ball, d, [(-1,), (0,)]).tolist() == [1, -1]
        assert np.count_nonzero(d) == 2

    def test_constant_interior(self, heis_ball):
        for i in range(heis_ball.degree):
            d = calc.directional_diff(heis_ball, np.ones(len(heis_ball)), i)
            assert np.all(d[calc.validity_mask(heis_ball, 1)] == 0)

    @given(seeds)
    def test_laplacian_via_hessian(self, seed):
        for ball in (build_ball(GroupSpec.lattice(3), 5), build_ball(GroupSpec.heisenberg(), 3)):
            u = np.random.default_rng(seed).standard_normal(len(ball))
            diff = calc.laplacian_via_hessian(ball, u) + calc.laplacian(ball, u)
            assert np.abs(diff[calc.validity_mask(ball, 1)]).max() < 1e-12

    def test_laplacian_via_hessian_delta(self, z2_ball):
        assert calc.laplacian_via_hessian(z2_ball, z2_ball.delta())[0] == 4

    def test_laplacian_via_hessian_constant(self, z3_ball):
        out = calc.laplacian_via_hessian(z3_ball, np.ones(len(z3_ball)))
        assert np.all(out[calc.validity_mask(z3_ball, 1)] == 0)


class TestHessianNorm:
    def test_delta_l1(self, z1_ball):
        assert calc.hessian_norm(z1_ball, z1_ball.delta(), 1.0) == 16

    def test_delta_l1_z3(self, z3_ball):
        assert calc.hessian_norm(z3_ball, z3_ball.delta(), 1.0) == 16 * 3**2

    def test_zero(self, z3_ball):
        assert calc.hessian_norm(z3_ball, np.zeros(len(z3_ball)), 1.5) == 0

    @given(seeds, st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.sampled_from([1.0, 1.3, 2.0]))
    def test_homogeneous(self, seed, c, p):
        ball = build_ball(GroupSpec.lattice(2), 5)
        u = inside(ball, seed, 2)
        assert calc.hessian_norm(ball, c * u, p) == pytest.approx(
            abs(c) * calc.hessian_norm(ball, u, p), rel=1e-12)

    @given(seeds, st.sampled_from([1.0, 1.2, 1.5, 2.0, 3.0]))
    def test_holder_chain(self, seed, p):
        for ball in (build_ball(GroupSpec.lattice(3), 5), build_ball(GroupSpec.heisenberg(), 3)):
            rep = calc.norm_report(ball, inside(ball, seed, 2), p)
            assert min(rep.lp, rep.d1p, rep.d2p, rep.d2p_tilde) >= 0
            assert rep.d2p <= rep.holder_bound(ball.degree) * (1 + 1e-12)

    def test_reverse_ratio_bounded_across_scales(self):
        """||Hess u||_p / ||Delta u||_p stays bounded for bumps of growing width."""
        ball = build_ball(GroupSpec.lattice(3), 14)
        f = np.sum(ball.elements.astype(float) ** 2, axis=1)
        ratios = []
        for sigma in (1.0, 2.0, 3.0, 4.0):
            u = np.exp(-f / sigma**2)
            rep = calc.norm_report(ball, u, 1.5)
            ratios.append(rep.d2p_tilde / rep.d2p)
        assert max(ratios) < 10 and max(ratios) / min(ratios) < 3


class TestGamma:
    def test_quadratic(self, z1_ball):
        x = z1_ball.elements[:, 0].astype(float)
        g = calc.gamma(z1_ball, x**2)
        inner = calc.validity_mask(z1_ball, 1)
        np.testing.assert_allclose(g[inner], 4 * x[inner] ** 2 + 1)

    def test_constant(self, heis_ball):
        g = calc.gamma(heis_ball, np.full(len(heis_ball), 3.0))
        assert np.all(g[calc.validity_mask(heis_ball, 1)] == 0)

    def test_delta(self, z1_ball):
        g = calc.gamma(z1_ball, z1_ball.delta())
        assert values_at(z1_ball, g, [(0,), (1,), (-1,)]).tolist() == [1, 0.5, 0.5]

    @given(seeds)
    def test_nonnegative(self, seed):
        ball = build_ball(GroupSpec.heisenberg(), 3)
        assert np.all(calc.gamma(ball, np.random.default_rng(seed).standard_normal(len(ball))) >= 0)


class TestChainRule:
    def test_quadratic_exact(self, z1_ball):
        f = z1_ball.elements[:, 0].astype(float) ** 2
        rep = calc.chain_rule_check(z1_ball, f, lambda s: s * s, lambda s: 2 * s, lambda s: 2 + 0 * s)
        np.testing.assert_allclose(rep.ratio, 2.0, atol=1e-12)
        assert rep.fraction == 1.0
        assert calc.laplacian(z1_ball, f * f)[0] == 2

    @given(seeds)
    def test_quadratic_identity(self, seed):
        ball = build_ball(GroupSpec.lattice(3), 4)
        f = np.random.default_rng(seed).standard_normal(len(ball))
        lhs = calc.laplacian(ball, f * f)
        rhs = 2 * f * calc.laplacian(ball, f) + 2 * calc.gamma(ball, f)
        inner = calc.validity_mask(ball, 1)
        assert np.abs(lhs - rhs)[inner].max() < 1e-12

    def test_linear(self, z3_ball, rng):
        f = rng.standard_normal(len(z3_ball))
        rep = calc.chain_rule_check(z3_ball, f, lambda s: 3 * s + 1, lambda s: 3 + 0 * s,
                                    lambda s: 0 * s)
        np.testing.assert_allclose(rep.ratio, 0.0, atol=1e-12)
        assert rep.fraction == 1.0

    @given(seeds)
    def test_log_membership(self, seed):
        ball = build_ball(GroupSpec.lattice(3), 5)
        f = np.random.default_rng(seed).integers(-3, 4, len(ball)).astype(float)
        rep = calc.chain_rule_check(
            ball, f, lambda s: np.log1p(s * s), lambda s: 2 * s / (1 + s * s),
            lambda s: 2 * (1 - s * s) / (1 + s * s) ** 2)
        assert rep.fraction == 1.0
        assert np.all(rep.margin >= -1e-10)

    def test_detects_wrong_second_derivative(self, z3_ball, rng):
        f = rng.integers(-3, 4, len(z3_ball)).astype(float)
        rep = calc.chain_rule_check(z3_ball, f, lambda s: s**3, lambda s: 3 * s**2,
                                    lambda s: 0 * s + 100.0)
        assert rep.fraction < 1.0


class TestNorms:
    def test_lp_norm(self):
        assert calc.lp_norm(np.array([3.0, -4.0]), 2) == 5.0
        assert calc.lp_norm(np.array([1.0, -2.0]), np.inf) == 2.0

    def test_gradient_norm_delta(self, z3_ball):
        # each of 6 edges at e and the 6 reverse edges contribute 1
        assert calc.gradient_norm_p(z3_ball, z3_ball.delta(), 3.0) ** 3 == pytest.approx(12.0)
