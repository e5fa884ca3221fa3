"""Deterministic invariant suite shared by ``polycyclic selftest`` and the tests.

Every check returns exact or fixed-format values only (no timings), so two
runs with the same seed produce identical reports.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chi_blocks import (ChiBlock, ChiDerivation, ChiPoly, F_eq, euler_operator, saturation_exponent,
                         transverse_ideal, wronskian)
from .division import LocalPoly, MonomialOrder, divide
from .dulac_engine import (SaddleDeployment, dulac_coefficients, dulac_operator, invert_map,
                           operator_bound_check)
from .euler_calculus import CoeffRing, LogExpSum, chi0_apply, euler_resolve, ld_eval
from .polycycle import PolycycleSpec, blowup_verify, count_cycles, rolle_bound


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def fmt(v) -> str:
    return format(float(v), ".6e")


# ------------------------------------------------------------ generators


def random_rational(rng: random.Random, size: int = 9) -> Fraction:
    return Fraction(rng.randint(-size, size), rng.randint(1, size))


def random_logexp(rng: random.Random, ring: CoeffRing, terms: int = 4) -> LogExpSum:
    return LogExpSum.from_terms(ring, [(random_rational(rng), random_rational(rng, 5), rng.randint(0, 3))
                                       for _ in range(terms)])


def compositions(parts: int, total: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(parts - 1, total - first):
            yield (first, *rest)


def random_block(rng: random.Random, D: ChiDerivation, n: int) -> ChiBlock:
    mons = list(compositions(1 + D.q1, n))
    chosen = rng.sample(mons, rng.randint(1, len(mons)))
    data = {}
    for m in chosen:
        c = random_rational(rng)
        if D.ring.names and rng.random() < 0.5:
            c = D.ring(c) * D.ring.gen(rng.choice(D.ring.names))
        data[(m, ())] = c
    return ChiBlock(D, data, 0)


def random_local_poly(rng: random.Random, nvars: int, max_terms: int = 4, max_deg: int = 4,
                      low: int = 0) -> LocalPoly:
    data = {}
    for _ in range(rng.randint(1, max_terms)):
        d = rng.randint(low, max_deg)
        m = [0] * nvars
        for _ in range(d):
            m[rng.randrange(nvars)] += 1
        data[tuple(m)] = rng.randint(-4, 4) or 1
    return LocalPoly(nvars, data)


def random_polynomial(rng: random.Random, degree: int) -> np.ndarray:
    return np.array([rng.uniform(-1, 1) for _ in range(degree + 1)])


def division_properties(f: LocalPoly, gens, order: MonomialOrder) -> dict:
    """Identity, support law, idempotence and uniqueness for one division."""
    res = divide(f, gens, order)
    prec = res.precision
    ftr = f.truncate(prec)
    total = res.remainder
    for q, a in zip(res.quotients, res.basis):
        total = total + q * a
    identity = (total.truncate(prec) - ftr).is_zero()
    dg = res.diagram
    support = all(dg.cell(m) is None for m in res.remainder.support())
    for i, (q, corner) in enumerate(zip(res.quotients, dg.corners)):
        for m in q.support():
            if dg.cell(tuple(a + b for a, b in zip(m, corner))) != i:
                support = False
    again = divide(res.remainder, gens, order, prec)
    idempotent = (again.remainder - res.remainder).truncate(prec).is_zero()
    unique = True
    if res.basis:
        shifted = ftr + res.basis[0] * LocalPoly.monomial((1,) + (0,) * (f.nvars - 1), 3)
        other = divide(shifted, gens, order, prec)
        unique = (other.remainder - res.remainder).truncate(prec).is_zero()
    return {"identity": identity, "support": support, "idempotent": idempotent, "unique": unique,
            "exact": res.exact, "member": res.remainder.is_zero(), "result": res}


def monomial_oracle(f: LocalPoly, corners) -> bool:
    """Membership in a monomial ideal: every term divisible by some corner."""
    return all(any(all(a <= b for a, b in zip(c, m)) for c in corners) for m in f.support())


# ------------------------------------------------------------------ checks


def check_compensator() -> Check:
    ys = np.geomspace(1e-3, 10.0, 100)
    betas = np.linspace(-1.0, 1.0, 21)
    worst = 0.0
    for b in betas:
        lhs = b * ld_eval(ys, b) + 1.0
        rhs = ys**b
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    return Check("compensator identity", worst <= 1e-12, {"max_rel_err": fmt(worst)})


def check_resolvent(rng: random.Random, count: int) -> Check:
    ring = CoeffRing(())
    bad = 0
    for _ in range(count):
        r = random_rational(rng, 5)
        g = random_logexp(rng, ring)
        f = euler_resolve(r, g)
        if not (chi0_apply(f) - f * ring(r) - g).is_zero() or f.at_one() != 0:
            bad += 1
    return Check("euler resolvent", bad == 0, {"instances": count, "failures": bad})


def check_wronskian() -> Check:
    ring = CoeffRing.standard(1)
    w = wronskian(ChiDerivation(ring, 1), 1)
    ok = str(w.b_n.as_expr()) == "1" and str(w.s_n.as_expr()) == "mu1 + 2" and w.s_n_at_zero == 2
    return Check("wronskian q1=1 n=1", ok, w.report())


def check_euler_kernel(rng: random.Random, count: int) -> Check:
    bad = 0
    for i in range(count):
        q1 = 1 + i % 2
        n = 1 + i % 3
        D = ChiDerivation(CoeffRing.standard(q1, extra=("a",)), q1)
        if not euler_operator(D, F_eq(D, n), random_block(rng, D, n)).is_zero():
            bad += 1
    return Check("euler operator kernel", bad == 0, {"instances": count, "failures": bad})


def check_transverse(N_values=(1, 2, 3)) -> Check:
    D = ChiDerivation(CoeffRing(("nu1",)), 1, 1, r=[1], s=[1])
    details, ok = {}, True
    for N in N_values:
        f = ChiPoly.monomial(D, (0, 1), (N,))
        J = transverse_ideal(D, f, 1)
        sat = saturation_exponent(D, f, (N,))
        want = f"(lambda1^{N})" if N > 1 else "(lambda1)"
        details[f"N={N}"] = f"{J.describe()} n={sat}"
        ok &= J.describe() == want and sat == N
    return Check("transverse ideal of u^N x log x", ok, details)


def check_division(rng: random.Random, count: int) -> Check:
    order = MonomialOrder(2)
    tallies = {"identity": 0, "support": 0, "idempotent": 0, "unique": 0, "oracle": 0}
    for _ in range(count):
        corners = [random_local_poly(rng, 2, 1, 4, 1) for _ in range(rng.randint(1, 3))]
        f = random_local_poly(rng, 2, 5, 6)
        props = division_properties(f, corners, order)
        for key in ("identity", "support", "idempotent", "unique"):
            tallies[key] += props[key]
        tallies["oracle"] += props["member"] == monomial_oracle(f, [next(iter(c.support())) for c in corners])
    ok = all(v == count for v in tallies.values())
    return Check("division properties", ok, {"instances": count, **tallies})


def check_dulac_operator() -> Check:
    mu = 0.1
    r = 1 + mu
    xs = np.linspace(0.05, 0.95, 10)
    worst = 0.0
    for x in xs:
        val = dulac_operator(r, lambda z: np.full_like(z, -1 / r), None, -np.log(x))
        want = x * ld_eval(x, mu)
        worst = max(worst, abs(val - want) / abs(want))
    rep = operator_bound_check(1.0, lambda z: np.ones_like(z), None, list(np.linspace(0.1, 5.0, 10)))
    ok = worst <= 1e-10 and rep.max_ratio <= 2
    return Check("dulac operator", ok, {"max_rel_err": fmt(worst), "bound_ratio": fmt(rep.max_ratio)})


def closed_form_xy(mu: float, c: float, x, y):
    """Dulac map of x dy + y(r + c x y) dx = 0 from x = 1 to x."""
    r = 1 + mu
    return x**r * y / (1 - c * y * x**r * ld_eval(x, -mu))


def check_dulac_map() -> Check:
    grid = np.linspace(0.05, 0.9, 12)
    lin = dulac_coefficients(SaddleDeployment.from_coefficients(0.1, []), grid=grid)
    lin_err = float(np.max(np.abs(lin.d_grid - grid**1.1) / grid**1.1))
    dep = SaddleDeployment.from_coefficients(0.1, [[1.0]])
    model = dulac_coefficients(dep, grid=grid)
    c = float(dep.a[0][0])
    y = model.y_eval
    want = closed_form_xy(0.1, c, grid, y) / y
    err = float(np.max(np.abs(model.d_grid - want) / want))
    inv = invert_map(model)
    ys = model(grid)
    round_trip = float(np.max(np.abs(inv(ys) - grid)))
    ok = lin_err <= 1e-12 and err <= 1e-8 and model.decay_ok and round_trip <= 1e-9
    return Check("dulac map", ok, {"linear_err": fmt(lin_err), "xy_err": fmt(err), "inverse_err": fmt(round_trip)})


def check_cyclicity(rng: random.Random, count: int) -> Check:
    spec = PolycycleSpec.power([1.2])
    res = count_cycles(spec, [[v] for v in np.linspace(-1e-4, 1e-4, 41)])
    max_count = max(c.count for c in res)
    bracketed = all(len(c.brackets) == c.count for c in res)
    rolle_ok = 0
    for _ in range(count):
        coeffs = random_polynomial(rng, rng.randint(1, 4))
        p = np.polynomial.Polynomial(coeffs)
        derivs = [p.deriv(j) for j in range(len(coeffs))]
        rb = rolle_bound(derivs, -1.0, 1.0, samples=401, scan_points=4001)
        rolle_ok += rb.bound is not None and rb.bound >= rb.scan_zeros
    ok = max_count == 1 and bracketed and rolle_ok == count
    return Check("cyclicity", ok, {"max_count": max_count, "bracketed": bracketed, "rolle_ok": rolle_ok})


def check_blowup(k: int = 2) -> Check:
    rep = blowup_verify(k)
    return Check(f"blow-up k={k}", rep.holds, {"s_k": str(rep.s_k)})


def run_suite(seed: int = 0, size: int = 10) -> list[Check]:
    """Run every module's invariant checks with a seeded generator."""
    rng = random.Random(seed)
    return [
        check_compensator(),
        check_resolvent(rng, 2 * size),
        check_wronskian(),
        check_euler_kernel(rng, size),
        check_transverse(),
        check_division(rng, 2 * size),
        check_dulac_operator(),
        check_dulac_map(),
        check_cyclicity(rng, size),
        check_blowup(2),
    ]
