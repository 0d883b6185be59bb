import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cayley_sobolev.calculus import laplacian, validity_mask
from cayley_sobolev.cayley import GroupSpec, build_ball
from cayley_sobolev.hodge import (
    EdgeFunction,
    dirichlet_poisson,
    divergence,
    gradient,
    hodge_decompose,
)


@pytest.fixture(scope="module")
def ball():
    return build_ball(GroupSpec.lattice(2), 10)


def edge_index(ball, a, b):
    ia, ib = ball.index_of(a), ball.index_of(b)
    lo, hi = min(ia, ib), max(ia, ib)
    hits = np.nonzero((ball.edges[:, 0] == lo) & (ball.edges[:, 1] == hi))[0]
    assert len(hits) == 1
    return int(hits[0]), ia < ib


class TestDivergence:
    def test_orientation_low_to_high(self, ball):
        assert np.all(ball.edges[:, 0] < ball.edges[:, 1])

    def test_zero(self, ball):
        assert not np.any(divergence(EdgeFunction(ball, np.zeros(len(ball.edges)))))

    def test_single_edge(self, ball):
        vals = np.zeros(len(ball.edges))
        k, _ = edge_index(ball, (0, 0), (1, 0))
        vals[k] = 1.0
        div = divergence(EdgeFunction(ball, vals))
        lo, hi = ball.edges[k]
        assert div[hi] == 1 and div[lo] == -1 and np.count_nonzero(div) == 2

    def test_div_grad_is_minus_laplacian(self, ball, rng):
        u = rng.standard_normal(len(ball))
        dg = divergence(gradient(ball, u))
        inner = validity_mask(ball, 1)
        np.testing.assert_allclose(dg[inner], -laplacian(ball, u)[inner], atol=1e-12)


class TestHodge:
    def test_pure_gradient(self, ball):
        res = hodge_decompose(gradient(ball, ball.delta()))
        assert res.h.norm() < 1e-10

    def test_circulation(self, ball):
        vals = np.zeros(len(ball.edges))
        loop = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]
        for a, b in zip(loop, loop[1:]):
            k, forward = edge_index(ball, a, b)
            vals[k] = 1.0 if forward else -1.0
        alpha = EdgeFunction(ball, vals)
        assert not np.any(divergence(alpha))
        res = hodge_decompose(alpha)
        assert np.abs(res.f).max() < 1e-12
        np.testing.assert_allclose(res.h.values, vals, atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_random_forms(self, seed):
        b = build_ball(GroupSpec.lattice(2), 10)
        alpha = EdgeFunction(b, np.random.default_rng(seed).standard_normal(len(b.edges)))
        res = hodge_decompose(alpha)
        assert res.div_residual < 1e-10
        assert res.orthogonality < 1e-8
        assert res.reconstruction <= 1e-15 * max(1.0, np.abs(alpha.values).max()) * 10

    def test_edge_function_length_checked(self, ball):
        with pytest.raises(ValueError):
            EdgeFunction(ball, np.zeros(3))


class TestPoisson:
    def test_plug_back(self, rng):
        b = build_ball(GroupSpec.lattice(3), 8)
        g = rng.random(len(b)) * (b.distance < b.radius)
        w = dirichlet_poisson(b, g)
        inner = b.distance < b.radius
        assert np.abs(-laplacian(b, w)[inner] - g[inner]).max() < 1e-12 * max(1, g.max()) * 10
