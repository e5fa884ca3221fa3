"""Counting limit cycles near hyperbolic polycycles.

Breaking a saddle loop with ratio r = 1.2 by lambda < 0 creates exactly one
cycle near x = |lambda|.  For a two-saddle cycle with r1 r2 != 1 the count
stays at most two.  A Rolle-type domination argument bounds zero counts
independently, and the blow-up of the Hilbert derivation is checked
symbolically.
"""

from __future__ import annotations

import numpy as np

from polycyclic.polycycle import PolycycleSpec, blowup_verify, count_cycles, rolle_bound


def saddle_loop() -> None:
    spec = PolycycleSpec.power([1.2])
    for lam in (-1e-4, -1e-6, 0.0, 1e-6):
        (res,) = count_cycles(spec, [[lam]])
        roots = ", ".join(f"{r:.6e}" for r in res.roots) or "-"
        print(f"lambda = {lam:+.0e}: {res.count} cycle(s) at x = {roots}")


def two_saddles() -> None:
    axis = np.linspace(-1e-3, 1e-3, 21)
    res = count_cycles(PolycycleSpec.power([1.3, 0.9]), [(a, b) for a in axis for b in axis])
    counts = np.array([c.count for c in res]).reshape(21, 21)
    print("\ntwo-saddle counts over the lambda grid (rows lambda1, columns lambda2):")
    for row in counts[::4]:
        print("  ", "".join(str(v) for v in row))
    print("max count:", counts.max())


def rolle() -> None:
    eps = 0.01
    rb = rolle_bound([lambda t: t**2 - eps, lambda t: 2 * t, lambda t: 2 + 0 * t], -3, 3, mode="interval")
    print(f"\nRolle bound for t^2 - {eps}: {rb.bound} (zeros found by scan: {rb.scan_zeros})")
    for lo, hi, j in rb.intervals:
        print(f"  [{lo:+.3f}, {hi:+.3f}] dominated by derivative {j}")


def blowup() -> None:
    for k in (2, 3):
        rep = blowup_verify(k)
        print(f"\nblow-up k={k}: T = Diag{tuple(rep.details['T'])}, s_k = {rep.s_k}, holds: {rep.holds}")


if __name__ == "__main__":
    saddle_loop()
    two_saddles()
    rolle()
    blowup()
