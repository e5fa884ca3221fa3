"""Division in the local ring Q[[alpha_1, alpha_2]].

The local order compares total degree first, so initial terms are the
lowest ones.  A standard basis fixes the staircase of the ideal, and every
series divides uniquely with quotient supports inside the cells and a
remainder supported off the staircase.
"""

from __future__ import annotations

from polycyclic.division import Ideal, LocalPoly, MonomialOrder, chain_stationarity, divide

a1 = LocalPoly.variable(2, 0)
a2 = LocalPoly.variable(2, 1)
order = MonomialOrder(2)


def staircase() -> None:
    gens = [a1**2 + a2**3, a1 * a2]
    res = divide(a1**3 + a1 * a2**2 * 2 + a2**3 + a2**7, gens, order)
    print("standard basis corners:", res.diagram.corners)
    print("monomials below the staircase (degree <= 4):", res.diagram.complement(4))
    for q, b in zip(res.quotients, res.basis):
        print(f"  quotient {q}  for  {b}")
    print("remainder:", res.remainder)


def chains() -> None:
    chain = [Ideal([a1**3], 2), Ideal([a1**2, a2**4], 2), Ideal([a1, a2**4], 2), Ideal([a1, a2**4], 2)]
    res = chain_stationarity(chain, 10)
    print("\nchain", [J.describe() for J in chain])
    print("stationary from index", res.index, "strict increases at", res.strict_increases)


if __name__ == "__main__":
    staircase()
    chains()
