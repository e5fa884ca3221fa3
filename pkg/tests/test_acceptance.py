"""Acceptance suite: one PASS/FAIL line per criterion, with timings.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also repeated in the terminal summary.
"""

import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from polycyclic.chi_blocks import (ChiDerivation, ChiPoly, F_eq, differential_ideal, euler_operator,
                                   ramified_partial_sum, saturation_exponent, transverse_ideal, wronskian)
from polycyclic.cli import main
from polycyclic.division import MonomialOrder, chain_stationarity, divide
from polycyclic.dulac_engine import (DulacPath, SaddleDeployment, dulac_coefficients, dulac_ode_oracle,
                                     dulac_operator, invert_map, operator_bound_check)
from polycyclic.euler_calculus import CoeffRing, chi0_apply, euler_resolve, ld_eval
from polycyclic.polycycle import HilbertDerivation, PolycycleSpec, blowup_verify, count_cycles, rolle_bound
from polycyclic.selftest import (division_properties, monomial_oracle, random_block, random_local_poly,
                                 random_logexp, random_rational)

RESULTS: list[str] = []
SUITE_START = time.perf_counter()
DULAC_MODELS: list = []


@contextmanager
def criterion(number: int, title: str, budget: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"FAIL  {number:2d}. {title} ({time.perf_counter() - start:.2f} s): {exc}"
        RESULTS.append(line)
        print(line)
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'}  {number:2d}. {title} ({elapsed:.2f} s, budget {budget:g} s)"
    RESULTS.append(line)
    print(line)
    assert ok, f"runtime {elapsed:.2f} s exceeds {budget} s"


def test_01_compensator_identity():
    with criterion(1, "compensator identity beta*Ld+1 = y^beta on 100x21 grid", 1.0):
        ys = np.geomspace(1e-3, 10.0, 100)
        betas = np.linspace(-1.0, 1.0, 21)
        assert 0.0 in betas
        Y, B = np.meshgrid(ys, betas)
        rel = np.abs(B * ld_eval(Y, B) + 1 - Y**B) / Y**B
        assert rel.max() <= 1e-12, rel.max()
        assert np.allclose(ld_eval(ys, 0.0), np.log(ys), rtol=1e-15)


def test_02_euler_resolvent():
    with criterion(2, "Euler resolvent exact on 200 random rational instances", 5.0):
        rng = random.Random(2)
        ring = CoeffRing(())
        for _ in range(200):
            r = random_rational(rng, 6)
            g = random_logexp(rng, ring, rng.randint(1, 6))
            f = euler_resolve(r, g)
            assert (chi0_apply(f) - f * r - g).is_zero()
            assert f.at_one() == 0


def test_03_wronskian():
    with criterion(3, "Wronskian is b_n x^s_n with s_n(0) = n N(n), q1 in {1,2}, n <= 3", 30.0):
        for q1 in (1, 2):
            R = CoeffRing.standard(q1)
            D = ChiDerivation(R, q1)
            for n in (1, 2, 3):
                w = wronskian(D, n)
                assert len(w.determinant) == 1
                ((c, e, k),) = w.determinant.terms
                assert k == 0 and e == w.s_n and c == w.b_n and w.b_n != 0
                assert w.s_n_at_zero == n * w.N
        w = wronskian(ChiDerivation(CoeffRing.standard(1), 1), 1)
        r1 = 1 + CoeffRing.standard(1).mu(1)
        assert str(w.b_n.as_expr()) == "1" and w.s_n == 1 + r1


def test_04_euler_operator_kernel():
    with criterion(4, "E_F annihilates 50 random degree-n blocks, n <= 3, q1 <= 2", 30.0):
        rng = random.Random(4)
        for i in range(50):
            q1 = i % 3
            n = 1 + (i // 3) % 3
            D = ChiDerivation(CoeffRing.standard(q1, extra=("a",)), q1)
            b = random_block(rng, D, n)
            assert euler_operator(D, F_eq(D, n), b).is_zero()


def test_05_division():
    with criterion(5, "division laws on 500 instances; monomial oracle 500/500", 60.0):
        rng = random.Random(5)
        order = MonomialOrder(2)
        for _ in range(500):
            gens = [random_local_poly(rng, 2, 3, 4, 1) for _ in range(rng.randint(1, 3))]
            f = random_local_poly(rng, 2, 5, 6)
            props = division_properties(f, gens, order)
            assert props["identity"] and props["support"] and props["unique"] and props["idempotent"]
        agree = 0
        for _ in range(500):
            corners = [random_local_poly(rng, 2, 1, 4, 1) for _ in range(rng.randint(1, 3))]
            f = random_local_poly(rng, 2, 5, 6)
            got = divide(f, corners, order).remainder.is_zero()
            agree += got == monomial_oracle(f, [next(iter(c.support())) for c in corners])
        assert agree == 500, agree


def test_06_log_monomial_transverse_ideal():
    with criterion(6, "u^N x log x gives (lambda^N) and saturation exponent N, N = 1..5", 10.0):
        D = ChiDerivation(CoeffRing(("nu1",)), 1, 1, r=[1], s=[1])
        for N in range(1, 6):
            f = ChiPoly.monomial(D, (0, 1), (N,))
            J = transverse_ideal(D, f)
            assert J.describe() == ("(lambda1)" if N == 1 else f"(lambda1^{N})"), J
            assert J.certified
            assert saturation_exponent(D, f, (N,)) == N


def test_07_non_noetherian_witness():
    with criterion(7, "ramified chain strictly increasing through N_max = 20, not stabilized", 10.0):
        ring = CoeffRing(("alpha",))
        chain = [differential_ideal(ramified_partial_sum(ring, N), ["alpha"]) for N in range(1, 22)]
        for a, b in zip(chain, chain[1:]):
            assert a.issubset(b) and not b.issubset(a)
        res = chain_stationarity(chain, 20)
        assert res.status == "not stabilized" and len(res.strict_increases) == 20


def test_08_dulac_operator():
    with criterion(8, "L_r(-1/r) = x Ld at 100 points; bound ratio <= 2 on 50 admissible paths", 10.0):
        worst = 0.0
        for i, x in enumerate(np.linspace(0.01, 0.99, 100)):
            mu = (-0.4, -0.1, 0.0, 0.2, 0.5)[i % 5]
            r = 1 + mu
            val = dulac_operator(r, lambda z: np.full_like(z, -1 / r), None, -math.log(x))
            worst = max(worst, abs(val - x * ld_eval(x, mu)) / abs(x * ld_eval(x, mu)))
        assert worst <= 1e-10, worst
        rng = random.Random(8)
        admissible = 0
        while admissible < 50:
            u0, K, C = rng.uniform(1, 3), rng.uniform(1, 4), rng.uniform(-1, 1)
            U, s = rng.uniform(0.2, 5), rng.uniform(0.5, 4)
            f = (lambda z: np.ones_like(z), lambda z: np.exp(-z), lambda z: np.cos(z) * np.exp(-z))[admissible % 3]
            w = complex(u0 + U, C * math.expm1(U / K))
            rep = operator_bound_check(s, f, DulacPath(u0, K, C), [w], n_sup=400)
            if rep.admissible:
                admissible += 1
                assert rep.max_ratio <= 2, rep.max_ratio


DEPLOYMENTS = [(0.0, [[1.0]]), (0.1, [[1.0]]), (-0.2, [[0.5, 1.0], [0.0, 0.3]]),
               (0.3, [[0.2, -0.4, 0.1], [0.3], [0.0, 0.0, 0.5]]), (0.05, [[0.0, 1.0], [1.0, 0.5]])]


def test_09_dulac_map():
    with criterion(9, "Dulac map: linear exact, nonlinear vs ODE oracle to 1e-8, decay bound", 60.0):
        grid = np.linspace(0.05, 0.9, 50)
        lin = dulac_coefficients(SaddleDeployment.from_coefficients(0.25, []), 12, grid=grid)
        assert np.max(np.abs(lin.d_grid - grid**1.25) / grid**1.25) <= 1e-12
        DULAC_MODELS.append(lin)
        for mu, a in DEPLOYMENTS:
            dep = SaddleDeployment.from_coefficients(mu, a)
            model = dulac_coefficients(dep, 12, grid=grid)
            ode = np.array([dulac_ode_oracle(dep, x) for x in grid])
            assert np.max(np.abs(model.d_grid - ode) / ode) <= 1e-8
            assert model.decay_ok, model.decay_ratios
            DULAC_MODELS.append(model)


def test_10_inversion():
    if not DULAC_MODELS:
        pytest.skip("needs the models of criterion 9")
    with criterion(10, "inverse satisfies g(d(x)) = x to 1e-9 on every Dulac model", 5.0):
        xs = np.linspace(0.05, 0.9, 60)
        for model in DULAC_MODELS:
            g = invert_map(model)
            assert np.max(np.abs(g(model(xs)) - xs)) <= 1e-9


def test_11_cyclicity():
    with criterion(11, "cyclicity sweeps, bracketed roots, Rolle bound >= scan on 50 orbits", 120.0):
        loop = count_cycles(PolycycleSpec.power([1.2]), [[v] for v in np.linspace(-1e-4, 1e-4, 401)])
        assert max(c.count for c in loop) == 1
        axis = np.linspace(-1e-3, 1e-3, 21)
        two = count_cycles(PolycycleSpec.power([1.3, 0.9]), [(a, b) for a in axis for b in axis])
        assert max(c.count for c in two) <= 2
        for c in loop + two:
            assert len(c.brackets) == c.count
            assert all(lo <= x <= hi for (lo, hi), x in zip(c.brackets, c.roots))
        rng = random.Random(11)
        for _ in range(50):
            p = np.polynomial.Polynomial([rng.uniform(-1, 1) for _ in range(rng.randint(2, 5))])
            rb = rolle_bound([p.deriv(j) for j in range(p.degree() + 1)], -1, 1)
            assert rb.bound is not None and rb.bound >= rb.scan_zeros


def test_12_blowup():
    with criterion(12, "blow-up pushforward identity exact for k = 2, 3, 4; chi(g_j) = 0", 10.0):
        for k in (2, 3, 4):
            rep = blowup_verify(k)
            assert rep.pushforward and rep.factorization and rep.proportional
            H = HilbertDerivation(k)
            assert all(sp.simplify(H.apply(H.first_integral(j))) == 0 for j in range(1, k))


def test_13_determinism(tmp_path):
    with criterion(13, "selftest twice with the same seed is byte-identical; suite < 5 min", 300.0):
        outs = []
        for run in ("a", "b"):
            assert main(["selftest", "--seed", "13", "--out", str(tmp_path / run)]) == 0
            outs.append((tmp_path / run / "selftest.json").read_bytes())
        assert outs[0] == outs[1]
        total = time.perf_counter() - SUITE_START
        assert total < 300, total


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
