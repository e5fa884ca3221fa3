import random
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polycyclic.chi_blocks import (ChiBlock, ChiDerivation, ChiPoly, F_eq, algebraic_multiplicity, chi_apply,
                                   differential_ideal, double_inclusion_check, eigen_coordinates,
                                   euler_operator, fewnomial_split, first_integral_residual,
                                   ramified_partial_sum, saturation_exponent, transverse_ideal, wronskian)
from polycyclic.division import chain_stationarity
from polycyclic.errors import DomainError
from polycyclic.euler_calculus import CoeffRing, chi0_apply
from polycyclic.selftest import random_block

R1 = CoeffRing.standard(1)
D1 = ChiDerivation(R1, 1)
D1u = ChiDerivation(R1, 1, 1)


def poly_strategy(D, max_exp=2):
    key = st.tuples(st.tuples(*[st.integers(0, max_exp)] * (1 + D.q1)),
                    st.tuples(*[st.integers(0, max_exp)] * D.ell))
    coeff = st.fractions(min_value=-4, max_value=4, max_denominator=5)
    return st.dictionaries(key, coeff, max_size=4).map(lambda d: ChiPoly(D, d))


class TestChiApply:
    def test_compensator_rule(self):
        z, x = ChiPoly.z(D1, 1), ChiPoly.x(D1)
        assert chi_apply(D1, z) == z * D1.r[0] + x

    def test_pure_power(self):
        x = ChiPoly.x(D1)
        assert chi_apply(D1, x**2) == x**2 * 2

    def test_product(self):
        z, x = ChiPoly.z(D1, 1), ChiPoly.x(D1)
        assert chi_apply(D1, x * z) == x * z * (1 + D1.r[0]) + x**2

    def test_u_variable(self):
        xu = ChiPoly.x(D1u) * ChiPoly.u(D1u, 1)
        assert chi_apply(D1u, xu) == xu * (-R1.mu(1))

    def test_first_integral(self):
        assert first_integral_residual(D1u, 0) == []

    @given(poly_strategy(D1u), poly_strategy(D1u))
    def test_leibniz(self, f, g):
        lhs = chi_apply(D1u, f * g)
        assert lhs == chi_apply(D1u, f) * g + f * chi_apply(D1u, g)

    @given(poly_strategy(D1))
    def test_agrees_with_euler_derivation(self, f):
        assert chi_apply(D1, f).to_logexp() == chi0_apply(f.to_logexp())

    @given(poly_strategy(D1u))
    def test_blocks_preserved(self, f):
        for b in fewnomial_split(f):
            out = chi_apply(D1u, b)
            assert isinstance(out, ChiBlock)
            assert out.is_zero() or out.degrees() == [b.degree]


class TestFewnomialSplit:
    def test_degrees(self):
        x, z = ChiPoly.x(D1), ChiPoly.z(D1, 1)
        blocks = fewnomial_split(x + z + x * z)
        assert [b.degree for b in blocks] == [1, 2]
        assert blocks[0] == x + z and blocks[1] == x * z

    def test_u_lowers_degree(self):
        blocks = fewnomial_split(ChiPoly.x(D1u) ** 2 * ChiPoly.u(D1u, 1))
        assert [b.degree for b in blocks] == [1]

    def test_zero(self):
        assert fewnomial_split(ChiPoly.zero(D1)) == []

    def test_mixed_block_rejected(self):
        with pytest.raises(ValueError):
            ChiBlock.of(ChiPoly.x(D1) + ChiPoly.x(D1) ** 2)


class TestEulerOperator:
    def test_degree_one_kernel(self):
        R = CoeffRing.standard(1, extra=("a", "c"))
        D = ChiDerivation(R, 1)
        b = ChiPoly.x(D) * R.gen("a") + ChiPoly.z(D, 1) * R.gen("c")
        assert euler_operator(D, F_eq(D, 1), b).is_zero()

    def test_single_factor(self):
        D0 = ChiDerivation(CoeffRing(()), 0)
        assert euler_operator(D0, [(5,)], ChiPoly.x(D0)) == ChiPoly.x(D0) * -4

    def test_degree_two_kernel(self):
        x, z = ChiPoly.x(D1), ChiPoly.z(D1, 1)
        assert euler_operator(D1, F_eq(D1, 2), x * z).is_zero()

    @given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 2))
    def test_kernel_random_blocks(self, seed, n, q1):
        D = ChiDerivation(CoeffRing.standard(q1, extra=("a",)), q1)
        b = random_block(random.Random(seed), D, n)
        assert euler_operator(D, F_eq(D, n), b).is_zero()

    def test_wrong_degree_not_annihilated(self):
        x = ChiPoly.x(D1)
        assert not euler_operator(D1, F_eq(D1, 1), x**2).is_zero()


def numeric_wronskian(D, n, mu_values, x):
    """det[chi^i X^m](x) by floating evaluation of the exact derivatives."""
    point = {f"mu{j}": mu_values[j - 1] for j in range(1, D.q1 + 1)}
    mons = [m for m, _ in F_eq(D, n)]
    rows = []
    cols = [ChiPoly.monomial(D, m) for m in mons]
    for _ in range(len(mons)):
        rows.append([c.to_logexp().evaluate(x, point) for c in cols])
        cols = [chi_apply(D, c) for c in cols]
    return float(np.linalg.det(np.array(rows)))


class TestWronskian:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_no_compensators(self, n):
        D0 = ChiDerivation(CoeffRing.standard(0), 0)
        w = wronskian(D0, n)
        assert str(w.b_n.as_expr()) == "1" and w.s_n == n

    def test_q1_one_n_one(self):
        w = wronskian(D1, 1)
        assert str(w.b_n.as_expr()) == "1"
        assert w.s_n == 1 + D1.r[0]

    def test_q1_one_n_two(self):
        w = wronskian(D1, 2)
        assert w.s_n == 3 * (1 + D1.r[0])
        assert w.s_n_at_zero == 6

    @pytest.mark.parametrize("q1,n", [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)])
    def test_exponent_law_and_numeric_oracle(self, q1, n):
        R = CoeffRing.standard(q1)
        D = ChiDerivation(R, q1)
        w = wronskian(D, n)
        assert w.s_n_at_zero == n * w.N
        mu_values = [Fraction(1, 7), Fraction(-1, 5)][:q1]
        point = {f"mu{j + 1}": v for j, v in enumerate(mu_values)}
        b = float(R.evaluate(w.b_n, point))
        s = float(R.evaluate(w.s_n, point))
        for x in (0.3, 0.7):
            got = numeric_wronskian(D, n, [float(v) for v in mu_values], x)
            assert got == pytest.approx(b * x**s, rel=1e-6)

    def test_b1_two_compensators(self):
        R = CoeffRing.standard(2)
        w = wronskian(ChiDerivation(R, 2), 1)
        assert w.b_n == R.mu(2) - R.mu(1)


class TestTransverseIdeal:
    def test_single_monomial(self):
        R = CoeffRing(("nu1",))
        D = ChiDerivation(R, 0)
        J = transverse_ideal(D, ChiPoly.monomial(D, (3,), (), R.gen("nu1")))
        assert J.describe() == "(nu1)" and J.certified

    def test_zero(self):
        J = transverse_ideal(D1, ChiPoly.zero(D1))
        assert J.is_zero()

    @pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("x0", [1, Fraction(1, 2), 2])
    def test_log_monomial_is_power_of_lambda(self, N, x0):
        D = ChiDerivation(CoeffRing(("nu1",)), 1, 1, r=[1], s=[1])
        f = ChiPoly.monomial(D, (0, 1), (N,))
        J = transverse_ideal(D, f, x0)
        assert J.describe() == ("(lambda1)" if N == 1 else f"(lambda1^{N})")
        assert saturation_exponent(D, f, (N,)) == N

    def test_x0_independence(self):
        f = ChiPoly.monomial(D1u, (1, 1), (1,)) + ChiPoly.monomial(D1u, (2, 0), (1,), R1.mu(1))
        ideals = [transverse_ideal(D1u, f, x0, precision=6) for x0 in (1, Fraction(1, 2), 2)]
        assert ideals[0] == ideals[1] == ideals[2]

    def test_nonpositive_base_point(self):
        with pytest.raises(DomainError):
            transverse_ideal(D1, ChiPoly.x(D1), 0)


class TestMultiplicity:
    def test_single_block(self):
        D0 = ChiDerivation(CoeffRing(("nu1",)), 0)
        res = algebraic_multiplicity(D0, [ChiBlock.of(ChiPoly.x(D0))])
        assert res.ma == 1
        assert res.chain[0].is_zero() and res.chain[1].is_unit()

    def test_ramified_chain_strictly_increasing(self):
        ring = CoeffRing(("alpha",))
        chain = [differential_ideal(ramified_partial_sum(ring, N), ["alpha"]) for N in range(1, 22)]
        for a, b in zip(chain, chain[1:]):
            assert a.issubset(b) and not b.issubset(a)
        assert chain_stationarity(chain, 20).status == "not stabilized"

    def test_ramified_via_multiplicity(self):
        ring = CoeffRing(("alpha",))
        res = algebraic_multiplicity(None, [ramified_partial_sum(ring, N) for N in range(1, 22)], N_max=20)
        assert res.ma is None and res.status == "not stabilized"


class TestDoubleInclusion:
    def test_monomial(self):
        R = CoeffRing(("a",))
        D = ChiDerivation(R, 0)
        rep = double_inclusion_check(D, ChiBlock.of(ChiPoly.x(D) * R.gen("a")), 1, 5)
        assert rep.holds and all(a == 1 for a in rep.achieved)

    def test_zero(self):
        D = ChiDerivation(CoeffRing(("a",)), 0)
        assert double_inclusion_check(D, ChiBlock(D, {}, degree=1)).holds

    def test_degree_one_with_compensator(self):
        R = CoeffRing(("mu1", "a", "c"))
        D = ChiDerivation(R, 1)
        g = ChiBlock.of(ChiPoly.x(D) * R.gen("a") + ChiPoly.z(D, 1) * R.gen("c"))
        rep = double_inclusion_check(D, g, Fraction(1, 2), 20)
        assert rep.holds and len(rep.achieved) == 20
        assert rep.max_achieved <= Fraction(3, 2)

    def test_eigen_coordinates(self):
        R = CoeffRing.standard(1)
        D = ChiDerivation(R, 1)
        p, coords = eigen_coordinates(D, ChiPoly.z(D, 1), {"mu1": Fraction(1, 3)})
        assert p == 1 and coords == {(1,): Fraction(3), (0,): Fraction(-3)}
