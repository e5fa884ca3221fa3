"""Blocks of the derivation chi, their Wronskians and transverse ideals.

chi acts on x and the compensators z_j by chi x = x, chi z_j = r_j z_j + x.
Polynomials in (x, z) split into homogeneous blocks; a block of degree n is
killed by the Euler operator prod (chi - e_m) over all monomials of that
degree, and the Wronskian of those monomials is a single power of x.
"""

from __future__ import annotations

from polycyclic.chi_blocks import (ChiDerivation, ChiPoly, F_eq, chi_apply, euler_operator, fewnomial_split,
                                   saturation_exponent, transverse_ideal, wronskian)
from polycyclic.euler_calculus import CoeffRing


def blocks() -> None:
    ring = CoeffRing.standard(1, extra=("a",))
    D = ChiDerivation(ring, 1)
    x, z = ChiPoly.x(D), ChiPoly.z(D, 1)
    f = x * ring.gen("a") + z + x * z * 3 + z**2
    print("f =", f)
    for b in fewnomial_split(f):
        print(f"  degree {b.degree}: {b}   E_F(block) = {euler_operator(D, F_eq(D, b.degree), b)}")
    print("chi f =", chi_apply(D, f))


def wronskians() -> None:
    print("\nWronskians of the degree-n monomials")
    for q1 in (1, 2):
        D = ChiDerivation(CoeffRing.standard(q1), q1)
        for n in (1, 2):
            w = wronskian(D, n)
            print(f"  q1={q1} n={n} N={w.N}: Delta = ({w.b_n.as_expr()}) * x^({w.s_n.as_expr()}),"
                  f" s_n(0) = {w.s_n_at_zero}")


def transverse() -> None:
    print("\nTransverse ideals of u^N x log x (r = s = 1)")
    D = ChiDerivation(CoeffRing(("nu1",)), 1, 1, r=[1], s=[1])
    for N in range(1, 5):
        f = ChiPoly.monomial(D, (0, 1), (N,))
        J = transverse_ideal(D, f)
        print(f"  N={N}: {J.describe():<14} {J.status:<10} least n with x^n f saturated: "
              f"{saturation_exponent(D, f, (N,))}")


if __name__ == "__main__":
    blocks()
    wronskians()
    transverse()
