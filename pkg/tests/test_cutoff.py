import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cayley_sobolev.calculus import gradient_norm_p, hessian_power_sum, laplacian
from cayley_sobolev.cayley import ResourceLimitError
from cayley_sobolev.cutoff import (
    CutoffSpec,
    cutoff_norms,
    decay_study,
    eta_first,
    eta_second,
    fit_slope,
    orbit_representatives,
    orbit_size,
    second_profile_derivative,
)


class TestSpec:
    @pytest.mark.parametrize("args", [(3, 1.0, 10.0, "first"), (3, 10.0, 5.0, "first"),
                                      (4, 50.0, 1000.0, "second"), (0, 10.0, 20.0, "first"),
                                      (3, 10.0, 20.0, "third")])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            CutoffSpec(*args)

    def test_aliases(self):
        assert CutoffSpec(3, 10, 100, "FirstOrderLog").kind == "first"
        assert CutoffSpec(4, 200, 1000, "SecondOrderSmooth").kind == "second"


class TestProfiles:
    spec1 = CutoffSpec(3, 10.0, 1000.0, "first")
    spec2 = CutoffSpec(4, 200.0, 5000.0, "second")

    def test_first_plateaus(self):
        s = np.array([0.0, 25.0, 100.0, 1000.0**2, 2000.0**2])
        assert self.spec1.profile(s).tolist() == [1, 1, 1, 0, 0]

    def test_first_midpoint(self):
        rho = np.sqrt(10.0 * 1000.0)
        assert self.spec1.profile(np.array([rho**2]))[0] == pytest.approx(0.5, abs=1e-14)

    def test_second_endpoints(self):
        assert self.spec2.profile(np.array([200.0, 5000.0])).tolist() == [1.0, 0.0]

    def test_second_monotone(self):
        s = np.linspace(201, 4999, 500)
        assert np.all(second_profile_derivative(s, 200.0, 5000.0) <= 0)
        assert np.all(np.diff(self.spec2.profile(s)) <= 0)

    def test_second_derivative_closed_form(self):
        s = np.linspace(300, 4800, 20)
        h = 1e-4
        fd = (self.spec2.profile(s + h) - self.spec2.profile(s - h)) / (2 * h)
        np.testing.assert_allclose(fd, second_profile_derivative(s, 200.0, 5000.0), rtol=1e-6)

    @given(st.floats(1.5, 50), st.floats(2, 100), st.floats(0, 1e6))
    def test_first_in_unit_interval(self, r, ratio, s):
        v = CutoffSpec(3, r, r * ratio, "first").profile(np.array([s]))[0]
        assert 0 <= v <= 1

    @given(st.floats(101, 500), st.floats(1.5, 50), st.floats(0, 1e6))
    def test_second_in_unit_interval(self, r, ratio, s):
        v = CutoffSpec(4, r, r * ratio, "second").profile(np.array([s]))[0]
        assert 0 <= v <= 1

    def test_pointwise_to_one(self):
        x = np.array([[7, 3, 2]])
        vals = [CutoffSpec(3, 5.0, R, "first")(x)[0] for R in (1e2, 1e4, 1e8)]
        assert np.all(np.diff(vals) > 0) and vals[-1] > 0.85

    def test_eta_functions(self):
        ball, eta = eta_first(CutoffSpec(2, 2.0, 6.0, "first"))
        rho = np.sqrt(np.sum(ball.elements.astype(float) ** 2, axis=1))
        assert np.all(eta[rho <= 2] == 1) and np.all(eta[rho >= 6] == 0)
        assert eta[ball.distance == ball.radius].max() == 0
        ball2, eta2 = eta_second(CutoffSpec(3, 101.0, 150.0, "second"))
        assert eta2[0] == 1 and eta2[ball2.distance == ball2.radius].max() == 0
        with pytest.raises(ValueError):
            eta_first(CutoffSpec(3, 101.0, 150.0, "second"))


class TestOrbits:
    @pytest.mark.parametrize("N,rho2", [(2, 30), (3, 40), (4, 20)])
    def test_orbit_sizes_cover_the_ball(self, N, rho2):
        total = 0.0
        seen = set()
        for top in range(int(np.sqrt(rho2)) + 1):
            X = orbit_representatives(N, top, rho2)
            total += orbit_size(X).sum()
            for x in X:
                assert list(x) == sorted(x) and x[-1] == top and x @ x <= rho2
                seen.add(tuple(x))
        m = int(np.sqrt(rho2))
        brute = [p for p in itertools.product(range(-m, m + 1), repeat=N)
                 if sum(c * c for c in p) <= rho2]
        assert total == len(brute)
        assert seen == {tuple(sorted(abs(c) for c in p)) for p in brute}

    def test_first_order_matches_brute_force(self):
        spec = CutoffSpec(3, 2.0, 7.0, "first")
        ball, eta = eta_first(spec)
        norms = cutoff_norms(spec)
        assert norms.records["gradient"] == pytest.approx(gradient_norm_p(ball, eta, 3) ** 3,
                                                          rel=1e-12)
        assert norms.lattice_points > len(ball) * 0.1

    def test_second_order_matches_brute_force(self):
        spec = CutoffSpec(3, 101.0, 180.0, "second")
        ball, eta = eta_second(spec)
        norms = cutoff_norms(spec)
        lap = np.sum(np.abs(laplacian(ball, eta)) ** 1.5)
        assert norms.records["laplacian"] == pytest.approx(lap, rel=1e-12)
        assert norms.records["gradient"] == pytest.approx(gradient_norm_p(ball, eta, 3) ** 3,
                                                          rel=1e-12)
        assert norms.records["hessian"] == pytest.approx(hessian_power_sum(ball, eta, 1.5),
                                                         rel=1e-12)

    def test_collar_and_interior_are_parts(self):
        n = cutoff_norms(CutoffSpec(4, 200.0, 3200.0, "second"))
        for k in n.records:
            assert 0 <= n.collar[k] + n.interior[k] <= n.records[k] * (1 + 1e-12)

    def test_cap(self):
        with pytest.raises(ResourceLimitError):
            cutoff_norms(CutoffSpec(3, 10.0, 500.0, "first"), cap=100)


class TestDecay:
    def test_first_order_small_sweep(self):
        t = decay_study("first", 3, 5.0, [50, 100, 200, 400], fit_points=4)
        assert t.strictly_decreasing("gradient")
        assert t.expected_slopes == {"gradient": -2.0}
        assert -2.6 < t.slopes["gradient"] < -1.4
        rows = list(t.rows())
        assert [r[0] for r in rows] == [50, 100, 200, 400]

    def test_second_order_records_decrease(self):
        t = decay_study("second", 4, 200.0, [1600, 3200, 6400], fit_points=3)
        for k in ("laplacian", "hessian", "gradient"):
            assert t.strictly_decreasing(k)
            assert t.strictly_decreasing(k, "collar")
        assert max(t.pointwise_bound) < 2 * min(t.pointwise_bound)
        assert t.expected_slopes["laplacian"] == -1.0

    def test_invalid_sweeps(self):
        with pytest.raises(ValueError):
            decay_study("first", 3, 5.0, [100, 50])
        with pytest.raises(ValueError):
            decay_study("first", 3, 5.0, [50, 100], fit_points=4)

    def test_fit_slope_exact(self):
        x = np.linspace(0, 1, 6)
        assert fit_slope(x, np.exp(-1.5 * x + 2), 4) == pytest.approx(-1.5)
