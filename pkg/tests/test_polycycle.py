import math
import random

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from polycyclic.errors import DomainError
from polycyclic.polycycle import (HilbertDerivation, Interval, PolycycleSpec, blowup_verify, count_cycles,
                                  displacement, rolle_bound, scan_zero_count)

LAMBDAS_1 = [[v] for v in np.linspace(-1e-4, 1e-4, 401)]


def transition(c):
    return (lambda x: x * (1 + c * x), lambda X: (np.sqrt(1 + 4 * c * X) - 1) / (2 * c))


class TestDisplacement:
    def test_identity_return(self):
        xs = np.geomspace(1e-6, 0.5, 40)
        assert np.all(displacement(PolycycleSpec.power([1.0]), xs) == 0)

    def test_saddle_loop_negative(self):
        xs = np.geomspace(1e-8, 0.5, 60)
        d = displacement(PolycycleSpec.power([1.2]), xs)
        np.testing.assert_allclose(d, xs**1.2 - xs, rtol=1e-15)
        assert np.all(d < 0)

    def test_resonant_two_saddle_collapses(self):
        xs = np.geomspace(1e-6, 0.5, 40)
        d = displacement(PolycycleSpec.power([2.0, 0.5]), xs)
        assert np.nanmax(np.abs(d)) < 1e-15

    def test_escape_is_nan(self):
        spec = PolycycleSpec.power([1.3, 0.9], lambdas=[1e-2, 0.0])
        d = displacement(spec, np.array([1e-4, 0.4]))
        assert math.isnan(d[0]) and not math.isnan(d[1])

    def test_lambda_count_checked(self):
        with pytest.raises(DomainError):
            displacement(PolycycleSpec.power([1.2], lambdas=[0.0, 0.0]), 0.1)


class TestCountCycles:
    def test_saddle_loop_sweep(self):
        res = count_cycles(PolycycleSpec.power([1.2]), LAMBDAS_1)
        assert max(c.count for c in res) == 1
        # the cycle sits at x ~ |lambda|, inside the window only when |lambda| > x_min
        assert all(c.count == (1 if c.lambdas[0] < -1e-12 else 0) for c in res)

    def test_unbroken_loop_has_no_cycle(self):
        (res,) = count_cycles(PolycycleSpec.power([1.2]), [[0.0]])
        assert res.count == 0

    def test_root_location(self):
        lam = -1e-5
        (res,) = count_cycles(PolycycleSpec.power([1.2]), [[lam]])
        (x,) = res.roots
        assert abs(x**1.2 - x - lam) < 1e-15
        assert not res.flags[0]

    def test_two_saddle_sweep(self):
        axis = np.linspace(-1e-3, 1e-3, 21)
        grid = [(a, b) for a in axis for b in axis]
        res = count_cycles(PolycycleSpec.power([1.3, 0.9]), grid)
        assert max(c.count for c in res) <= 2

    def test_every_root_has_sign_change_bracket(self):
        spec = PolycycleSpec.power([1.3, 0.9])
        axis = np.linspace(-1e-3, 1e-3, 9)
        for c in count_cycles(spec, [(a, b) for a in axis for b in axis]):
            assert len(c.brackets) == c.count
            for (lo, hi), root in zip(c.brackets, c.roots):
                assert lo <= root <= hi
                if lo < hi:
                    assert displacement(spec, lo, c.nu) * displacement(spec, hi, c.nu) < 0

    def test_reduction_invariance(self):
        tr = [transition(0.7), transition(-0.4)]
        spec = PolycycleSpec.power([1.3, 0.9], transitions=tr)
        axis = np.linspace(-1e-3, 1e-3, 11)
        grid = [(a, b) for a in axis for b in axis]
        before = [c.count for c in count_cycles(spec, grid)]
        after = [c.count for c in count_cycles(spec.reduce(), grid)]
        assert before == after and sum(before) > 0

    def test_tangency_flagged(self):
        # delta = (x - 0.1)^2 - eps near the double root x = 0.1
        spec = PolycycleSpec([lambda x: x + (x - 0.1) ** 2], lambdas=[1e-14])
        (res,) = count_cycles(spec, [None])
        assert res.count == 2
        assert all(res.flags)


class TestInterval:
    def test_outward_rounding(self):
        a = Interval(0.1) + Interval(0.2)
        assert a.lo < 0.30000000000000004 < a.hi or a.lo <= 0.3 <= a.hi

    @given(st.floats(-3, 3), st.floats(0, 1), st.integers(0, 4))
    def test_encloses_point_values(self, t, width, k):
        box = Interval(t, t + width)
        enc = (box**k) * 2 - box * 3 + 1
        for s in np.linspace(t, t + width, 7):
            v = 2 * s**k - 3 * s + 1
            assert enc.lo <= v <= enc.hi

    def test_even_power_straddling_zero(self):
        enc = Interval(-1, 2) ** 2
        assert enc.lo <= 0 and enc.hi >= 4


class TestRolle:
    def test_nonvanishing(self):
        rb = rolle_bound([lambda t: 2 + np.sin(t)], 0, 5)
        assert rb.bound == 0 and rb.scan_zeros == 0

    def test_quadratic(self):
        eps = 0.01
        derivs = [lambda t: t**2 - eps, lambda t: 2 * t, lambda t: 2 + 0 * t]
        rb = rolle_bound(derivs, -3, 3)
        assert rb.scan_zeros == 2 and rb.bound >= 2
        assert any(j == 2 for _, _, j in rb.intervals)

    def test_quadratic_interval_mode(self):
        eps = 0.01
        derivs = [lambda t: t**2 - eps, lambda t: 2 * t, lambda t: 2 + 0 * t]
        assert rolle_bound(derivs, -3, 3, mode="interval").bound >= 2

    def test_no_certificate(self):
        rb = rolle_bound([lambda t: t, lambda t: 0 * t], -1, 1, samples=3)
        assert rb.bound is None and "no dominating" in rb.reason

    def test_random_polynomial_orbits(self):
        rng = random.Random(11)
        for _ in range(50):
            p = np.polynomial.Polynomial([rng.uniform(-1, 1) for _ in range(rng.randint(2, 5))])
            derivs = [p.deriv(j) for j in range(p.degree() + 1)]
            rb = rolle_bound(derivs, -1, 1)
            assert rb.bound is not None and rb.bound >= rb.scan_zeros

    def test_scan_counts_simple_roots(self):
        assert scan_zero_count(lambda t: np.sin(t), 0.5, 10) == 3


class TestBlowup:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_identities(self, k):
        rep = blowup_verify(k)
        assert rep.pushforward and rep.factorization and rep.proportional and rep.first_integrals

    def test_s_values(self):
        r1, r2 = sp.symbols("r1 r2", positive=True)
        assert sp.simplify(blowup_verify(2).s_k - r1) == 0
        assert sp.simplify(blowup_verify(3).s_k - (r1 + r1 * r2)) == 0

    def test_homogeneous_specialization(self):
        rep = blowup_verify(2, [1])
        assert rep.s_k == 1 and rep.details["T"] == ["rho", "rho"]
        assert rep.holds

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_hilbert_first_integrals(self, k):
        H = HilbertDerivation(k)
        assert H.nontrivial_dimension == k - 1
        for j in range(1, k):
            assert sp.simplify(H.apply(H.first_integral(j))) == 0

    def test_rejects_large_k(self):
        with pytest.raises(DomainError):
            blowup_verify(9)
