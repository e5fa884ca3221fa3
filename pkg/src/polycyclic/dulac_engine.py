"""Dulac maps of resonant saddles through the Dulac integral operator.

The saddle is ``omega = x dy + y (r + a(x, y)) dx`` with ``r = 1 + mu`` and
``a = x y sum_n a_n(x) y^(n-1)``.  Its first integral ``f = sum f_n(x) y^n``
with ``f(1, y) = y`` has ``f_1 = x^r`` and, in the variable ``w = -log x``,

    f_n = L_{nr}(h_n),   h_n = -(1/(n r)) sum_{p<n} p a_{n-p} f_p,

where ``L_s(h)(w) = s exp(-s w) int_0^w exp((s-1) z) h(z) dz``.  We evaluate
``L_s`` in the stable form ``s int_0^w exp(-s (w - z)) exp(-z) h(z) dz``.

The map returned is ``d(x) = f(x, y0) / y0``, normalized so that the linear
saddle gives exactly ``x^r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import AccuracyError, DomainError

__all__ = [
    "SaddleDeployment",
    "DulacPath",
    "DulacModel",
    "InverseMap",
    "dulac_operator",
    "operator_bound_check",
    "dulac_coefficients",
    "dulac_ode_oracle",
    "invert_map",
]

GL_NODES = 32
NORM_BOUND = 0.25


def _gauss(n=GL_NODES):
    return legendre.leggauss(n)


_XI, _WT = _gauss()


@dataclass(frozen=True)
class SaddleDeployment:
    """Resonant saddle with a_n(x) given as coefficient arrays in powers of x."""

    mu: float
    a: tuple = ()
    y_scale: float = 1.0

    @property
    def r(self) -> float:
        return 1.0 + self.mu

    @staticmethod
    def from_coefficients(mu: float, a: Sequence[Sequence[float]], normalize: bool = True) -> "SaddleDeployment":
        arrs = tuple(np.asarray(c, dtype=float) for c in a)
        dep = SaddleDeployment(float(mu), arrs)
        return dep.normalized() if normalize else dep

    def norms(self) -> list[float]:
        """Upper bounds for sup |a_n| on the closed unit disk (sum of |coefficients|)."""
        return [float(np.sum(np.abs(c))) for c in self.a]

    def total_norm(self) -> float:
        return float(sum(self.norms()))

    def normalized(self) -> "SaddleDeployment":
        """Rescale y = c Y (a_n -> c^n a_n) so that sum ||a_n|| <= 1/4."""
        norms = self.norms()

        def total(c):
            return sum(c ** (n + 1) * v for n, v in enumerate(norms))

        if total(1.0) <= NORM_BOUND:
            return self
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if total(mid) <= NORM_BOUND:
                lo = mid
            else:
                hi = mid
        c = lo
        scaled = tuple(arr * c ** (n + 1) for n, arr in enumerate(self.a))
        return SaddleDeployment(self.mu, scaled, self.y_scale * c)

    def a_n(self, n: int, x):
        if n < 1 or n > len(self.a):
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.polynomial.polynomial.polyval(x, self.a[n - 1])

    def a_total(self, x, y):
        """a(x, y) = x y sum a_n(x) y^(n-1)."""
        x = np.asarray(x, dtype=float)
        acc = np.zeros(np.broadcast(x, y).shape)
        for n in range(len(self.a), 0, -1):
            acc = acc * y + self.a_n(n, x)
        return x * y * acc


@dataclass(frozen=True)
class DulacPath:
    """[0, u0] followed by z = u0 + u + i C (exp(u/K) - 1); C = 0 is the real segment."""

    u0: float = 1.0
    K: float = 1.0
    C: float = 0.0

    def __post_init__(self):
        if self.u0 < 1 or self.K < 1 or abs(self.C) > 1:
            raise DomainError("exponential paths need u0 >= 1, K >= 1, |C| <= 1")

    @staticmethod
    def through(w: complex, u0: float = 1.0, K: float = 1.0) -> "DulacPath":
        """Path of the family ending at w (real w gives the segment)."""
        w = complex(w)
        if w.imag == 0:
            return DulacPath(u0, K, 0.0)
        U = w.real - u0
        if U <= 0:
            raise DomainError("complex target must have Re w > u0")
        C = w.imag / math.expm1(U / K)
        if abs(C) > 1:
            raise DomainError("target lies outside the exponential sector")
        return DulacPath(u0, K, C)

    def legs(self, w: complex):
        """Parametrizations (z(t), z'(t), t0, t1) of the legs ending at w."""
        w = complex(w)
        if self.C == 0 or w.imag == 0:
            return [(lambda t: t * w, lambda t: np.full_like(t, w, dtype=complex), 0.0, 1.0)]
        u0, K, C = self.u0, self.K, self.C
        U = w.real - u0
        z_end = u0 + U + 1j * C * math.expm1(U / K)
        if abs(z_end - w) > 1e-9 * max(1.0, abs(w)):
            raise DomainError("target is not on this path")
        first = (lambda t: t.astype(complex), lambda t: np.ones_like(t, dtype=complex), 0.0, u0)
        second = (lambda u: u0 + u + 1j * C * np.expm1(u / K),
                  lambda u: 1 + 1j * (C / K) * np.exp(u / K), 0.0, U)
        return [first, second]

    def sample(self, w: complex, n: int = 400):
        pts, ders = [], []
        for z, dz, a, b in self.legs(w):
            t = np.linspace(a, b, n)
            pts.append(z(t))
            ders.append(dz(t))
        return np.concatenate(pts), np.concatenate(ders)


def _gl_panel(fn, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    t = mid + half * _XI
    return half * np.sum(_WT * fn(t))


def _adaptive(fn, a, b, tol, depth=0, max_depth=40):
    whole = _gl_panel(fn, a, b)
    m = 0.5 * (a + b)
    left, right = _gl_panel(fn, a, m), _gl_panel(fn, m, b)
    err = abs(left + right - whole)
    if err <= tol or depth >= max_depth:
        return left + right, err
    l, el = _adaptive(fn, a, m, tol / 2, depth + 1, max_depth)
    r, er = _adaptive(fn, m, b, tol / 2, depth + 1, max_depth)
    return l + r, el + er


def dulac_operator(s: complex, f: Callable, path: DulacPath | None, w: complex, tol: float = 1e-12,
                   return_error: bool = False):
    """L_s(f)(w) = s exp(-s w) int_{gamma_w} exp((s-1) z) f(z) dz along ``path``."""
    s = complex(s)
    w = complex(w)
    path = path or DulacPath()
    legs = path.legs(w)
    total, err = 0j, 0.0
    for z, dz, a, b in legs:
        probe = z(np.linspace(a, b, 65)[1:])
        if np.any((s * probe).real <= 0):
            raise DomainError("path enters the singular direction of L_s (Re(s z) <= 0)")

        def integrand(t, z=z, dz=dz):
            zz = z(t)
            return np.exp(-s * (w - zz) - zz) * f(zz) * dz(t)

        if b == a:
            continue
        val, e = _adaptive(integrand, a, b, tol / max(abs(s), 1.0))
        total += val
        err += e
    total *= s
    err *= abs(s)
    if err > max(tol, 1e-12) * 10:
        raise AccuracyError(f"quadrature reached only {err:.2e}", achieved=err)
    out = total if (s.imag or w.imag) else total.real
    return (out, err) if return_error else out


@dataclass
class BoundReport:
    holds: bool
    max_ratio: float
    ratios: list
    admissible: bool
    first_violation: complex | None = None


def operator_bound_check(s: complex, f: Callable, path: DulacPath | None, targets: Sequence[complex],
                         n_sup: int = 2000) -> BoundReport:
    """Check |L_s f(w)| <= 2 sup_{gamma_w} |f| at each target.

    Condition |tan(arg(s z'))| <= |exp(z)| is tested on the sampled path
    first; a violation makes the path inadmissible and nothing is asserted.
    """
    ratios = []
    for w in targets:
        p = path or DulacPath.through(w)
        pts, ders = p.sample(w, n_sup)
        ang = np.angle(complex(s) * ders)
        lhs = np.abs(np.tan(ang))
        rhs = np.abs(np.exp(pts))
        bad = np.nonzero(lhs > rhs * (1 + 1e-12))[0]
        if bad.size:
            return BoundReport(False, math.inf, ratios, False, complex(pts[bad[0]]))
        sup = float(np.max(np.abs(f(pts))))
        val = abs(dulac_operator(s, f, p, w))
        ratios.append(0.0 if sup == 0 else val / sup)
    mx = max(ratios) if ratios else 0.0
    return BoundReport(mx <= 2.0, mx, ratios, True)


class _PanelTable:
    """Composite Gauss-Legendre nodes on [0, W] with partial-integral matrices."""

    def __init__(self, W: float, h: float):
        npan = max(1, int(math.ceil(W / h)))
        self.edges = np.linspace(0.0, npan * h, npan + 1)
        self.h = self.edges[1] - self.edges[0]
        self.nodes = (self.edges[:-1, None] + 0.5 * self.h * (_XI[None, :] + 1.0))
        # reference nodes on [0, 1]
        tau = 0.5 * (_XI + 1.0)
        self.tau = tau
        # for node i, sub-nodes on [0, tau_i] and interpolation weights from tau
        sub = tau[:, None] * tau[None, :]
        self.sub = sub
        self.interp = np.stack([_lagrange_matrix(tau, sub[i]) for i in range(GL_NODES)])
        self.bary = _bary_weights(tau)

    def solve(self, s: float, g: np.ndarray) -> np.ndarray:
        """F(t) = int_0^t exp(-s (t - z)) g(z) dz at every node (g given at nodes)."""
        npan = self.nodes.shape[0]
        out = np.empty_like(g)
        carry = 0.0
        h = self.h
        for k in range(npan):
            gk = g[k]
            # values of g at sub-nodes of [a, t_i]
            gs = self.interp @ gk  # (i, j)
            ti = self.tau * h
            zs = self.sub * h
            kern = np.exp(-s * (ti[:, None] - zs))
            partial = ti * 0.5 * np.sum(_WT[None, :] * kern * gs, axis=1)
            out[k] = np.exp(-s * ti) * carry + partial
            full = h * 0.5 * np.sum(_WT * np.exp(-s * (h - self.tau * h)) * gk)
            carry = np.exp(-s * h) * carry + full
        return out

    def interpolate(self, values: np.ndarray, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        k = np.clip(((w - self.edges[0]) / self.h).astype(int), 0, len(self.edges) - 2)
        t = (w - self.edges[k]) / self.h
        out = np.empty_like(w)
        for idx in np.unique(k):
            mask = k == idx
            out[mask] = _bary_eval(self.tau, self.bary, values[idx], t[mask])
        return out


def _bary_weights(nodes):
    n = len(nodes)
    w = np.ones(n)
    for j in range(n):
        for k in range(n):
            if k != j:
                w[j] /= nodes[j] - nodes[k]
    return w


def _bary_eval(nodes, weights, values, t):
    t = np.asarray(t, dtype=float)
    diff = t[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = weights[None, :] / diff
        out = (q @ values) / np.sum(q, axis=1)
    hit = exact.any(axis=1)
    if hit.any():
        out[hit] = values[np.argmax(exact[hit], axis=1)]
    return out


def _lagrange_matrix(nodes, targets):
    w = _bary_weights(nodes)
    diff = targets[:, None] - nodes[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = w[None, :] / diff
        mat = q / np.sum(q, axis=1, keepdims=True)
    exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0)
    for i in np.nonzero(exact.any(axis=1))[0]:
        mat[i] = exact[i].astype(float)
    return mat


@dataclass
class DulacModel:
    """Tabulated first-integral coefficients and the normalized Dulac map."""

    r: float
    mu: float
    y_eval: float
    y_scale: float
    N_trunc: int
    table: _PanelTable = field(repr=False)
    f_nodes: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    f_grid: np.ndarray = field(repr=False)
    tail_estimate: float = 0.0
    decay_ok: bool = True
    decay_ratios: list = field(default_factory=list)
    refinement_change: float = 0.0
    diagnostics: list = field(default_factory=list)

    @property
    def domain(self):
        return (float(math.exp(-self.table.edges[-1])), 1.0)

    @property
    def d_grid(self) -> np.ndarray:
        weights = self.y_eval ** np.arange(self.N_trunc)
        return weights @ self.f_grid

    def f_n(self, n: int, x):
        x = np.asarray(x, dtype=float)
        if n == 1:
            return x**self.r
        w = -np.log(x)
        out = self.table.interpolate(self.f_nodes[n - 1], w.ravel()).reshape(w.shape)
        return out if out.ndim else float(out)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, _ = self.domain
        if np.any(x <= 0) or np.any(x > 1) or np.any(x < lo * (1 - 1e-12)):
            raise DomainError(f"x outside the tabulated domain [{lo:.3g}, 1]")
        w = -np.log(x)
        total = x**self.r
        nodes = np.tensordot(self.y_eval ** np.arange(1, self.N_trunc), self.f_nodes[1:], axes=1)
        if self.N_trunc > 1:
            total = total + self.table.interpolate(nodes, w.ravel()).reshape(w.shape)
        return total if total.ndim else float(total)

    def D(self, x):
        x = np.asarray(x, dtype=float)
        return self(x) / x**self.r - 1.0

    def is_increasing(self) -> bool:
        order = np.argsort(self.grid)
        return bool(np.all(np.diff(self.d_grid[order]) > 0))


def _coefficient_tables(dep: SaddleDeployment, N: int, table: _PanelTable) -> np.ndarray:
    r = dep.r
    w = table.nodes
    x = np.exp(-w)
    f = np.zeros((N,) + w.shape)
    f[0] = np.exp(-r * w)
    a_vals = [dep.a_n(k, x) for k in range(1, N)]
    for n in range(2, N + 1):
        S = np.zeros_like(w)
        for p in range(1, n):
            k = n - p
            if k <= len(dep.a):
                S += p * a_vals[k - 1] * f[p - 1]
        if not np.any(S):
            continue
        s = n * r
        # f_n(w) = -int_0^w exp(-s (w - z)) exp(-z) S(z) dz
        f[n - 1] = -table.solve(s, x * S)
    return f


def dulac_coefficients(dep: SaddleDeployment, N_trunc: int = 12, grid=None, y_eval: float = 0.5,
                       tol: float = 1e-12, h0: float = 0.5, tail_tol: float = 1e-8) -> DulacModel:
    """Compute f_1..f_N on the real path and assemble d(x) = f(x, y0)/y0."""
    if grid is None:
        grid = np.linspace(0.05, 0.9, 50)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid > 1):
        raise DomainError("grid must lie in (0, 1]")
    r = dep.r
    if not (r > 0):
        raise DomainError("n r must stay away from 0")
    W = float(-np.log(grid.min())) + 1e-9
    h = h0
    prev = None
    change = math.inf
    for _ in range(8):
        table = _PanelTable(W, h)
        f_nodes = _coefficient_tables(dep, N_trunc, table)
        wg = -np.log(grid)
        f_grid = np.stack([grid**r] + [table.interpolate(f_nodes[n], wg) for n in range(1, N_trunc)])
        d = (y_eval ** np.arange(N_trunc)) @ f_grid
        if prev is not None:
            change = float(np.max(np.abs(d - prev) / np.abs(d)))
            if change <= tol:
                break
        prev = d
        h /= 2
    else:
        raise AccuracyError(f"panel refinement stalled at relative change {change:.2e}", achieved=change)
    norms = np.max(np.abs(f_grid), axis=1)
    ratios, decay_ok = [], True
    for n in range(2, N_trunc + 1):
        bound = 0.5 ** (n - 1) * norms[0]
        ratios.append(float(norms[n - 1] / norms[0]) if norms[0] else 0.0)
        if norms[n - 1] > bound * (1 + 1e-9):
            decay_ok = False
    q = 0.5 * y_eval
    tail = np.abs(f_grid[-1]) * y_eval ** (N_trunc - 1) * q / (1 - q)
    tail_rel = float(np.max(tail / np.abs(d))) if N_trunc > 1 and np.any(f_grid[-1]) else 0.0
    diags = []
    if tail_rel > tail_tol:
        diags.append(f"increase N_trunc: tail estimate {tail_rel:.2e} above {tail_tol:.0e}")
    if not decay_ok:
        diags.append("coefficient decay bound violated")
    model = DulacModel(r, dep.mu, y_eval, dep.y_scale, N_trunc, table, f_nodes, grid, f_grid, tail_rel,
                       decay_ok, ratios, change, diags)
    if not model.is_increasing():
        diags.append("d is not increasing on the grid")
    return model


def dulac_ode_oracle(dep: SaddleDeployment, x: float, y_eval: float = 0.5, rtol: float = 1e-13) -> float:
    """f(x, y0)/y0 by integrating the trajectory through (x, y0) to the section x = 1.

    Along trajectories d(log y)/d(log x) = -(r + a(x, y)); the value reached at
    x = 1 is the first integral since f(1, y) = y.
    """
    if not (0.01 <= x <= 1.0):
        raise DomainError("oracle restricted to x in [0.01, 1]")
    if x == 1.0:
        return 1.0
    r = dep.r

    def rhs(t, v):
        y = math.exp(v[0])
        return [-(r + float(dep.a_total(math.exp(t), y)))]

    sol = solve_ivp(rhs, (math.log(x), 0.0), [math.log(y_eval)], method="DOP853", rtol=rtol, atol=1e-15)
    if not sol.success:
        raise DomainError(f"integration failed: {sol.message}")
    return math.exp(sol.y[0, -1]) / y_eval


class InverseMap:
    """Pointwise inverse of a strictly increasing map on [lo, hi]."""

    def __init__(self, fn: Callable, lo: float, hi: float, r: float | None = None):
        self.fn = fn
        self.lo, self.hi = lo, hi
        self.r = r
        self.ylo, self.yhi = float(fn(lo)), float(fn(hi))

    def __call__(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(y_arr)
        for i, v in enumerate(y_arr):
            if not (self.ylo <= v <= self.yhi):
                raise DomainError(f"{v} outside the range [{self.ylo}, {self.yhi}]")
            if v == self.ylo:
                out[i] = self.lo
            elif v == self.yhi:
                out[i] = self.hi
            else:
                out[i] = brentq(lambda t: float(self.fn(t)) - v, self.lo, self.hi, xtol=1e-300,
                                rtol=4 * np.finfo(float).eps, maxiter=500)
        return out if np.ndim(y) else float(out[0])

    def asymptotic_ratios(self, ys: Sequence[float]) -> list:
        """g(y) / y^(1/r) at the given points; these approach 1 as y -> 0."""
        if self.r is None:
            raise ValueError("exponent r unknown")
        return [float(self(y)) / y ** (1.0 / self.r) for y in ys]


def invert_map(d, domain=None, samples: int = 513) -> InverseMap:
    """Numeric inverse of a DulacModel or an increasing callable on ``domain``."""
    r = getattr(d, "r", None)
    if domain is None:
        domain = d.domain
    lo, hi = float(domain[0]), float(domain[1])
    xs = np.linspace(lo, hi, samples)
    vals = np.array([float(d(x)) for x in xs])
    if not np.all(np.diff(vals) > 0):
        raise DomainError("map is not strictly increasing on its domain")
    return InverseMap(d, lo, hi, r)
