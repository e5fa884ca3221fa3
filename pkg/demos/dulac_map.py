"""Dulac map of a resonant saddle x dy + y(1 + mu + a(x, y)) dx = 0.

The first integral f(x, y) = sum f_n(x) y^n with f(1, y) = y is computed
coefficient by coefficient through the integral operator L_s on the real
path w = -log x.  For a = xy the map is known in closed form, and any
deployment can be checked against direct integration of the trajectory.
"""

from __future__ import annotations

import numpy as np

from polycyclic.dulac_engine import SaddleDeployment, dulac_coefficients, dulac_ode_oracle, invert_map
from polycyclic.euler_calculus import ld_eval


def main() -> None:
    mu = 0.1
    dep = SaddleDeployment.from_coefficients(mu, [[1.0]])
    print(f"a = xy rescaled by y = {dep.y_scale} Y so that sum ||a_n|| <= 1/4")
    model = dulac_coefficients(dep, N_trunc=12)
    c, y = dep.a[0][0], model.y_eval
    print(f"tail estimate {model.tail_estimate:.2e}, decay ratios {np.round(model.decay_ratios[:4], 3)}")
    print("\n x      d_series               closed form            ODE oracle")
    for x in (0.05, 0.2, 0.5, 0.9):
        closed = x ** (1 + mu) / (1 - c * y * x ** (1 + mu) * ld_eval(x, -mu))
        print(f" {x:<5}  {model(x):.17f}  {closed:.17f}  {dulac_ode_oracle(dep, x):.17f}")
    g = invert_map(model)
    ys = [model(x) for x in (0.05, 0.1, 0.2)]
    print("\ninverse round trip at 0.3:", g(model(0.3)))
    print("g(y) / y^(1/r) near 0:", np.round(g.asymptotic_ratios(ys), 6))


if __name__ == "__main__":
    main()
