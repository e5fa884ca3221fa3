"""Compensators, the Euler derivation x d/dx and its exact resolvent.

The compensator z = x Ld(x, mu) interpolates between (x^(1+mu) - x)/mu and
x log x.  Evaluating it naively loses digits as mu -> 0; Ld switches to a
series there.  The resolvent solves x f' = r f + g exactly inside the class
of finite sums c x^e (log x)^k.
"""

from __future__ import annotations

from fractions import Fraction

from polycyclic.euler_calculus import CoeffRing, Compensator, LogExpSum, chi0_apply, euler_resolve, ld_eval


def show_cancellation() -> None:
    x = 0.3
    print("mu          naive (x^(1+mu)-x)/mu     x*Ld(x, mu)")
    for mu in (1e-2, 1e-6, 1e-10, 1e-14, 0.0):
        naive = (x ** (1 + mu) - x) / mu if mu else float("nan")
        print(f"{mu:<10.0e}  {naive:<24.17g}  {x * ld_eval(x, mu):.17g}")


def show_resolvent() -> None:
    ring = CoeffRing.standard(1)
    mu = ring.mu(1)
    x = LogExpSum.monomial(ring, 1, 1)
    z = euler_resolve(1 + mu, x)
    print("\nresolvent of chi0 f = (1+mu1) f + x:", z)
    print("equals the compensator:", z == Compensator(ring, "mu1").to_logexp())

    flat = CoeffRing(())
    g = LogExpSum.from_terms(flat, [(3, 1, 2), (Fraction(-1, 2), Fraction(1, 3), 0)])
    f = euler_resolve(1, g)
    print("\ng =", g)
    print("f =", f)
    print("chi0 f - f - g =", chi0_apply(f) - f - g, "  f(1) =", f.at_one())


if __name__ == "__main__":
    show_cancellation()
    show_resolvent()
