import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polycyclic.dulac_engine import (DulacPath, SaddleDeployment, dulac_coefficients, dulac_ode_oracle,
                                     dulac_operator, invert_map, operator_bound_check)
from polycyclic.errors import DomainError
from polycyclic.euler_calculus import CoeffRing, LogExpSum, euler_resolve, ld_eval
from polycyclic.selftest import closed_form_xy

GRID = np.linspace(0.05, 0.9, 50)


class TestOperator:
    @pytest.mark.parametrize("mu", [0.3, -0.3, 0.0, 0.1])
    def test_compensator_is_an_operator_image(self, mu):
        r = 1 + mu
        for x in np.linspace(0.02, 0.98, 25):
            val = dulac_operator(r, lambda z: np.full_like(z, -1 / r), None, -math.log(x))
            assert val == pytest.approx(x * ld_eval(x, mu), rel=1e-10)

    def test_zero_input(self):
        assert dulac_operator(1, lambda z: np.zeros_like(z), None, 2.0) == 0.0

    @pytest.mark.parametrize("w", [0.1, 1.3, 4.0])
    def test_closed_form_s_two(self, w):
        val = dulac_operator(2, lambda z: np.ones_like(z), None, w)
        assert val == pytest.approx(2 * math.exp(-2 * w) * (math.exp(w) - 1), rel=1e-13)

    def test_complex_path_matches_real_path_for_entire_integrand(self):
        # the integrand is entire, so the value depends only on the endpoint
        w = complex(2.5, 0.3)
        p = DulacPath.through(w, 1.0, 2.0)
        straight = DulacPath()
        a = dulac_operator(3, lambda z: np.exp(-z), p, w)
        b = dulac_operator(3, lambda z: np.exp(-z), straight, w)
        assert a == pytest.approx(b, rel=1e-11)

    def test_singular_direction_rejected(self):
        with pytest.raises(DomainError):
            dulac_operator(-1, lambda z: np.ones_like(z), None, 1.0)

    def test_path_parameters_validated(self):
        with pytest.raises(DomainError):
            DulacPath(0.5, 1.0, 0.0)
        with pytest.raises(DomainError):
            DulacPath(1.0, 1.0, 2.0)


class TestBound:
    def test_real_paths(self):
        rep = operator_bound_check(1, lambda z: np.ones_like(z), None, list(np.linspace(0.05, 8.0, 50)))
        assert rep.admissible and rep.holds and rep.max_ratio <= 2

    def test_zero_function(self):
        rep = operator_bound_check(1, lambda z: np.zeros_like(z), None, [1.0, 2.0])
        assert rep.max_ratio == 0

    def test_exponential_path(self):
        w = complex(3.0, 0.5 * math.expm1(1.0))
        rep = operator_bound_check(3, lambda z: np.exp(-z), DulacPath(1, 2, 0.5), [w])
        assert rep.admissible and rep.max_ratio <= 2

    @given(st.floats(1.0, 3.0), st.floats(1.0, 4.0), st.floats(-1.0, 1.0), st.floats(0.2, 5.0),
           st.floats(0.5, 4.0))
    def test_sampled_admissible_paths(self, u0, K, C, U, s):
        w = complex(u0 + U, C * math.expm1(U / K))
        rep = operator_bound_check(s, lambda z: np.exp(-z), DulacPath(u0, K, C), [w], n_sup=400)
        assert rep.admissible and rep.max_ratio <= 2


class TestDeployment:
    def test_rescaling_enforces_norm_bound(self):
        dep = SaddleDeployment.from_coefficients(0.0, [[1.0]])
        assert dep.total_norm() <= 0.25 + 1e-15
        assert dep.y_scale == pytest.approx(0.25)

    def test_small_data_untouched(self):
        dep = SaddleDeployment.from_coefficients(0.0, [[0.1]])
        assert dep.y_scale == 1.0 and dep.a[0][0] == 0.1


class TestDulacMap:
    def test_linear_saddle(self):
        model = dulac_coefficients(SaddleDeployment.from_coefficients(0.5, []), grid=GRID)
        np.testing.assert_allclose(model.d_grid, GRID**1.5, rtol=1e-12)
        assert model(0.25) == pytest.approx(0.125, rel=1e-14)

    @pytest.mark.parametrize("mu", [0.0, 0.1, -0.2, 0.35])
    def test_closed_form_for_xy(self, mu):
        dep = SaddleDeployment.from_coefficients(mu, [[1.0]])
        model = dulac_coefficients(dep, grid=GRID)
        c = dep.a[0][0]
        want = closed_form_xy(mu, c, GRID, model.y_eval) / model.y_eval
        np.testing.assert_allclose(model.d_grid, want, rtol=1e-10)

    @pytest.mark.parametrize("mu,a", [(0.0, [[1.0]]), (0.1, [[0.0, 1.0]]), (-0.2, [[0.5, 1.0], [0.0, 0.3]]),
                                      (0.3, [[0.2, -0.4, 0.1], [0.3], [0.0, 0.0, 0.5]])])
    def test_against_ode_oracle(self, mu, a):
        dep = SaddleDeployment.from_coefficients(mu, a)
        model = dulac_coefficients(dep, 12, grid=GRID)
        xs = np.linspace(0.05, 0.9, 30)
        ode = np.array([dulac_ode_oracle(dep, x) for x in xs])
        np.testing.assert_allclose(model(xs), ode, rtol=1e-8)
        assert model.decay_ok and model.is_increasing()

    def test_coefficients_against_exact_resolvent(self):
        # mu = 1/5: chi0 f_n = n r f_n + x sum_p p a_{n-p} f_p with f_n(1) = 0
        mu = Fraction(1, 5)
        r = 1 + mu
        ring = CoeffRing(())
        dep = SaddleDeployment.from_coefficients(float(mu), [[0.5, 1.0], [0.25]])
        a = [LogExpSum.from_terms(ring, [(Fraction(float(c)), i, 0) for i, c in enumerate(arr) if c])
             for arr in dep.a]
        x = LogExpSum.monomial(ring, 1, 1)
        f = [None, LogExpSum.monomial(ring, 1, r)]
        for n in range(2, 6):
            g = LogExpSum.zero(ring)
            for p in range(1, n):
                if n - p <= len(a):
                    g = g + x * a[n - p - 1] * f[p] * p
            f.append(euler_resolve(n * r, g))
        model = dulac_coefficients(dep, 8, grid=GRID)
        xs = np.linspace(0.06, 0.9, 17)
        for n in range(2, 6):
            np.testing.assert_allclose(model.f_n(n, xs), f[n].evaluate(xs), rtol=1e-10, atol=1e-15)

    def test_normalization_at_section(self):
        dep = SaddleDeployment.from_coefficients(0.1, [[1.0]])
        model = dulac_coefficients(dep, grid=np.linspace(0.05, 1.0, 20))
        assert model(1.0) == pytest.approx(1.0, abs=1e-14)
        assert dulac_ode_oracle(dep, 1.0) == 1.0

    def test_resonant_xy_below_identity(self):
        dep = SaddleDeployment.from_coefficients(0.0, [[1.0]])
        for x in (0.05, 0.3, 0.8):
            v = dulac_ode_oracle(dep, x)
            assert 0 < v < x

    def test_leading_behaviour(self):
        dep = SaddleDeployment.from_coefficients(0.1, [[1.0]])
        # d / x^r = 1 / (1 + c y (x - x^(1+mu)) / mu) rises to 1 as x -> 0; the
        # deviation peaks at x = (1+mu)^(-1/mu) ~ 0.386, so the grid stays below it
        xs = np.geomspace(1e-4, 0.38, 30)
        model = dulac_coefficients(dep, grid=xs)
        ratios = model.d_grid / xs**1.1
        assert np.all(ratios < 1)
        assert np.all(np.diff(ratios) < 0)
        assert 1 - ratios[0] < 1e-4

    def test_grid_must_be_in_unit_interval(self):
        with pytest.raises(DomainError):
            dulac_coefficients(SaddleDeployment(0.0), grid=[0.5, 1.5])


class TestInverse:
    def test_identity(self):
        g = invert_map(lambda x: x, (0.01, 1.0))
        assert g(0.3) == pytest.approx(0.3, rel=1e-15)

    def test_square(self):
        g = invert_map(lambda x: x * x, (1e-3, 1.0))
        ys = np.linspace(1e-5, 1.0, 40)
        np.testing.assert_allclose(g(ys), np.sqrt(ys), rtol=1e-12)

    @pytest.mark.parametrize("mu,a", [(0.1, [[1.0]]), (0.0, [[1.0]]), (-0.2, [[0.5, 1.0], [0.0, 0.3]])])
    def test_round_trip_on_dulac_model(self, mu, a):
        model = dulac_coefficients(SaddleDeployment.from_coefficients(mu, a), grid=GRID)
        g = invert_map(model)
        xs = np.linspace(0.05, 0.9, 40)
        np.testing.assert_allclose(g(model(xs)), xs, atol=1e-9)
        rs = g.asymptotic_ratios([model(x) for x in (0.05, 0.1, 0.2)])
        assert all(abs(v - 1) < 0.05 for v in rs)

    def test_non_monotone_rejected(self):
        with pytest.raises(DomainError):
            invert_map(lambda x: (x - 0.5) ** 2, (0.0, 1.0))
