"""Limit cycles near hyperbolic polycycles.

A k-vertex polycycle with Dulac maps d_j and breaking parameters lambda_j
has its limit cycles at the solutions of the cyclic system

    d_j(x_j) - x_{j+1} = lambda_j   (j < k),     d_k(x_k) - x_1 = lambda_k,

so they are the zeros of the displacement delta(x_1) = d_k(x_k) - x_1 - lambda_k
obtained by running the chain forward.  Counting is a sign scan with
bracketed refinement; a Rolle-type domination argument gives an independent
upper bound; and the principal part of the Hilbert derivation is checked
against the quasi-spherical blow-up symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.optimize import brentq

from .errors import ConsistencyError, DomainError

__all__ = [
    "PolycycleSpec",
    "CycleCount",
    "displacement",
    "count_cycles",
    "Interval",
    "RolleResult",
    "rolle_bound",
    "scan_zero_count",
    "HilbertDerivation",
    "blowup_verify",
]

ESCAPE = math.nan


def power_map(r: float) -> Callable:
    return lambda x: np.power(x, r)


@dataclass
class PolycycleSpec:
    """Cyclic chain of k Dulac maps with breaking parameters.

    ``lambdas`` is either a fixed sequence of k values or a callable taking a
    parameter value nu and returning k values.  ``transitions`` optionally
    holds increasing maps f_j (with inverses) entering the system as
    d_j(x_j) - f_{j+1}(x_{j+1}) = lambda_j.
    """

    maps: Sequence[Callable]
    lambdas: Sequence[float] | Callable = None
    ratios: Sequence[float] | None = None
    x_max: float = 0.5
    x_min: float = 1e-12
    windows: Sequence[tuple] | None = None
    transitions: Sequence[tuple] | None = None

    def __post_init__(self):
        if self.lambdas is None:
            self.lambdas = [0.0] * self.k
        if self.windows is None:
            self.windows = [(0.0, self.x_max)] * self.k
        if len(self.windows) != self.k:
            raise DomainError("one window per vertex")

    @property
    def k(self) -> int:
        return len(self.maps)

    @staticmethod
    def power(ratios: Sequence[float], lambdas=None, x_max: float = 0.5, **kw) -> "PolycycleSpec":
        return PolycycleSpec([power_map(r) for r in ratios], lambdas, list(ratios), x_max, **kw)

    def lam(self, nu=None) -> list[float]:
        if callable(self.lambdas):
            vals = list(self.lambdas(nu))
        else:
            vals = list(self.lambdas) if nu is None else list(nu)
        if len(vals) != self.k:
            raise DomainError(f"need {self.k} breaking parameters, got {len(vals)}")
        return [float(v) for v in vals]

    def reduce(self) -> "PolycycleSpec":
        """Absorb the transitions: d_j -> d_j o f_j^{-1}, windows -> f_j(windows)."""
        if not self.transitions:
            return self
        maps, windows = [], []
        for d, (f, finv), (a, b) in zip(self.maps, self.transitions, self.windows):
            maps.append(lambda X, d=d, finv=finv: d(finv(X)))
            windows.append((float(f(a)) if a > 0 else 0.0, float(f(b))))
        return PolycycleSpec(maps, self.lambdas, self.ratios, windows[0][1], self.x_min, windows, None)


def displacement(spec: PolycycleSpec, x1, nu=None):
    """delta(x1) = d_k(x_k) - f_1(x_1) - lambda_k; nan marks an escaping chain."""
    lam = spec.lam(nu)
    x1 = np.asarray(x1, dtype=float)
    x = x1.copy()
    alive = (x > spec.windows[0][0]) & (x <= spec.windows[0][1])
    with np.errstate(invalid="ignore"):
        for j in range(spec.k - 1):
            v = spec.maps[j](np.where(alive, x, spec.windows[j][1])) - lam[j]
            if spec.transitions:
                finv = spec.transitions[j + 1][1]
                ok = v > 0
                v = np.where(ok, finv(np.where(ok, v, 1.0)), -1.0)
            lo, hi = spec.windows[j + 1]
            alive &= (v > lo) & (v <= hi)
            x = np.where(alive, v, spec.windows[j + 1][1])
        first = spec.transitions[0][0](x1) if spec.transitions else x1
        out = spec.maps[-1](x) - first - lam[-1]
    out = np.where(alive, out, ESCAPE)
    return out if out.ndim else float(out)


@dataclass
class CycleCount:
    nu: object
    lambdas: list
    count: int
    roots: list
    brackets: list
    flags: list
    derivatives: list
    diagnostics: list = field(default_factory=list)


def _scan_grid(lo, hi, n):
    return np.geomspace(lo, hi, n)


def count_cycles(spec: PolycycleSpec, nu_grid: Sequence, n_scan: int = 2048, max_scan: int = 2**16,
                 xtol: float = 1e-12, flag_threshold: float = 1e-6, scale: float = 1.0) -> list[CycleCount]:
    """Zeros of the displacement on the window for every parameter value."""
    results = []
    for nu in nu_grid:
        results.append(_count_one(spec, nu, n_scan, max_scan, xtol, flag_threshold, scale))
    return results


def _brackets(xs, vals):
    out = []
    exact = []
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0:
            exact.append(xs[i])
        elif a * b < 0:
            out.append((xs[i], xs[i + 1]))
    if len(vals) and vals[-1] == 0:
        exact.append(xs[-1])
    return out, exact


def _suspicious(xs, vals):
    """Interior local minima of |delta| without a sign change (possible root pairs)."""
    spots = []
    av = np.abs(vals)
    for i in range(1, len(xs) - 1):
        a, b, c = vals[i - 1], vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c)):
            continue
        if a * b > 0 and b * c > 0 and av[i] < av[i - 1] and av[i] < av[i + 1]:
            spots.append(i)
    return spots


def _count_one(spec, nu, n_scan, max_scan, xtol, flag_threshold, scale):
    lo = max(spec.x_min, spec.windows[0][0] if spec.windows[0][0] > 0 else spec.x_min)
    hi = spec.windows[0][1]
    delta = lambda x: displacement(spec, x, nu)
    xs = _scan_grid(lo, hi, n_scan)
    vals = delta(xs)
    diagnostics = []
    brackets, exact = _brackets(xs, vals)
    # refine around tangency candidates by local resampling
    for i in _suspicious(xs, vals):
        a, b = xs[i - 1], xs[i + 1]
        n = 16
        found = False
        while n <= max_scan:
            sub = np.geomspace(a, b, n + 1)
            sv = delta(sub)
            br, ex = _brackets(sub, sv)
            if br or ex:
                brackets.extend(br)
                exact.extend(ex)
                found = True
                break
            n *= 4
        if not found:
            m = np.abs(delta(np.geomspace(a, b, 257)))
            if np.nanmin(m) < 1e-10 * max(1.0, float(np.nanmax(np.abs(vals[np.isfinite(vals)])))):
                diagnostics.append(f"resolution limit near x = {xs[i]:.6g}")
    roots, kept, flags, ders = [], [], [], []
    for a, b in sorted(set(brackets)):
        root = brentq(lambda t: float(delta(t)), a, b, xtol=xtol * min(1.0, a), rtol=4 * np.finfo(float).eps,
                      maxiter=500)
        roots.append(root)
        kept.append((a, b))
    for e in exact:
        roots.append(float(e))
        kept.append((float(e), float(e)))
    order = np.argsort(roots)
    roots = [roots[i] for i in order]
    kept = [kept[i] for i in order]
    for root in roots:
        h = max(1e-7 * root, 1e-14)
        left, right = float(delta(max(root - h, lo))), float(delta(min(root + h, hi)))
        der = (right - left) / (min(root + h, hi) - max(root - h, lo))
        ders.append(der)
        flags.append(bool(abs(der) < flag_threshold * scale))
    return CycleCount(nu, spec.lam(nu), len(roots), roots, kept, flags, ders, diagnostics)


# ------------------------------------------------------------- Rolle bound


class Interval:
    """Closed interval with outward rounding after every operation."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        hi = lo if hi is None else hi
        if lo > hi:
            raise ValueError("empty interval")
        self.lo, self.hi = float(lo), float(hi)

    @staticmethod
    def _out(lo, hi):
        return Interval(math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf))

    @staticmethod
    def lift(v):
        return v if isinstance(v, Interval) else Interval(v, v)

    def __add__(self, o):
        o = Interval.lift(o)
        return Interval._out(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, o):
        return self + (-Interval.lift(o))

    def __rsub__(self, o):
        return Interval.lift(o) - self

    def __mul__(self, o):
        o = Interval.lift(o)
        ps = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi]
        return Interval._out(min(ps), max(ps))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n == 0:
            return Interval(1.0)
        if n % 2 == 1 or self.lo >= 0:
            a, b = sorted((self.lo**n, self.hi**n))
            return Interval._out(a, b)
        if self.hi <= 0:
            return Interval._out(self.hi**n, self.lo**n)
        return Interval._out(0.0, max(self.lo**n, self.hi**n))

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


@dataclass
class RolleResult:
    bound: int | None
    intervals: list
    counts: dict
    scan_zeros: int | None
    certificate: str
    reason: str = ""


def scan_zero_count(g: Callable, t0: float, t1: float, n: int = 20001) -> int:
    """Sign changes (and exact zeros) of g on a uniform grid."""
    ts = np.linspace(t0, t1, n)
    v = np.asarray(g(ts), dtype=float)
    zeros = int(np.sum(v == 0))
    s = np.sign(v)
    s = s[s != 0]
    return zeros + int(np.sum(s[1:] * s[:-1] < 0))


def rolle_bound(derivs: Sequence[Callable], t0: float, t1: float, samples: int = 2001,
                mode: str = "sign", scan_points: int = 20001) -> RolleResult:
    """Upper bound sum_j j n_j for the zeros of g = derivs[0] on [t0, t1].

    derivs[j] is chi^j g along the orbit parametrized by time t (so chi is
    d/dt).  The orbit is cut where the index of the largest |chi^j g| changes;
    on a piece with index j the j-th derivative must be certified
    nonvanishing (constant sign at the samples, or an interval enclosure
    excluding 0 in ``mode="interval"``), and Rolle's lemma bounds the zeros
    of g there by j.
    """
    ts = np.linspace(t0, t1, samples)
    vals = np.array([np.asarray(d(ts), dtype=float) * np.ones_like(ts) for d in derivs])
    mags = np.abs(vals)
    top = mags.max(axis=0)
    if np.any(top == 0):
        i = int(np.argmax(top == 0))
        return RolleResult(None, [], {}, None, "none", f"no dominating derivative at t = {ts[i]!r}")
    arg = mags.argmax(axis=0)

    def certified(j, a_idx, b_idx):
        if mode == "interval":
            enc = derivs[j](Interval(ts[a_idx], ts[b_idx]))
            enc = Interval.lift(enc)
            return not enc.contains_zero()
        seg = vals[j, a_idx:b_idx + 1]
        return bool(np.all(seg > 0) or np.all(seg < 0))

    pieces = []
    for i in range(samples - 1):
        choice = None
        for j in (arg[i], arg[i + 1]):
            if certified(j, i, i + 1):
                choice = int(j)
                break
        if choice is None:
            for j in range(len(derivs)):
                if certified(j, i, i + 1):
                    choice = j
                    break
        if choice is None:
            return RolleResult(None, [], {}, None, "none", f"no certified derivative on [{ts[i]!r}, {ts[i + 1]!r}]")
        if pieces and pieces[-1][2] == choice:
            pieces[-1][1] = ts[i + 1]
        else:
            pieces.append([ts[i], ts[i + 1], choice])
    counts: dict = {}
    for _, _, j in pieces:
        counts[j] = counts.get(j, 0) + 1
    bound = sum(j * n for j, n in counts.items())
    zeros = scan_zero_count(derivs[0], t0, t1, scan_points)
    if zeros > bound:
        raise ConsistencyError(f"Rolle bound {bound} below the scanned zero count {zeros}")
    return RolleResult(bound, [tuple(p) for p in pieces], counts, zeros, mode)


# ------------------------------------------------- Hilbert derivation, blow-up


class HilbertDerivation:
    """Principal part chi x_1 = prod x_j, chi x_{j+1} = r_j x_j^(r_j - 1) chi x_j."""

    def __init__(self, k: int, ratios: Sequence | None = None):
        if k < 1:
            raise DomainError("k >= 1")
        self.k = k
        self.x = sp.symbols(f"x1:{k + 1}", positive=True)
        if ratios is None:
            ratios = sp.symbols(f"r1:{k}", positive=True) if k > 1 else ()
        self.r = tuple(sp.sympify(v) for v in ratios)
        comps = [sp.Mul(*self.x)]
        for j in range(k - 1):
            comps.append(self.r[j] * self.x[j] ** (self.r[j] - 1) * comps[-1])
        self.components = tuple(comps)

    def apply(self, expr):
        return sum(c * sp.diff(expr, xj) for c, xj in zip(self.components, self.x))

    def first_integral(self, j: int):
        """g_j = x_j^{r_j} - x_{j+1}, j = 1..k-1."""
        return self.x[j - 1] ** self.r[j - 1] - self.x[j]

    @property
    def nontrivial_dimension(self) -> int:
        return self.k - 1


def _is_zero(expr) -> bool:
    e = sp.powsimp(sp.expand_power_base(sp.expand(expr), force=True), force=True, combine="exp")
    e = sp.expand(e)
    if e == 0:
        return True
    return sp.simplify(e) == 0


def _rprod(r, i, j):
    """r_i r_{i+1} ... r_j (1-based); empty product is 1; r_k = 1."""
    out = sp.Integer(1)
    for m in range(i, j + 1):
        out *= r[m - 1] if m - 1 < len(r) else 1
    return out


@dataclass
class BlowupReport:
    k: int
    s_k: object
    pushforward: bool
    factorization: bool
    proportional: bool
    first_integrals: bool
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.pushforward and self.factorization and self.proportional and self.first_integrals


def blowup_verify(k: int, ratios: Sequence | None = None) -> BlowupReport:
    """Symbolic checks of the quasi-spherical blow-up of the Hilbert derivation.

    (i)   T^{-1}_* chi_pr = rho^{s_k} Y_pr with Y_pr the same expression in y;
    (ii)  g_j o T = rho^{r_{1,j}} (y_j^{r_j} - y_{j+1});
    (iii) in the coordinates (rho, u_j = g_j / rho^{r_{1,j}}) with
          rho = Q(x)^{1/r_{1,k}}, rho chi(u_j) + r_{1,j} u_j chi(rho) = 0, so the
          field is chi(rho)/rho times rho d/drho - sum r_{1,j} u_j d/du_j.
    Also checks chi(g_j) = 0.
    """
    if not 1 <= k <= 6:
        raise DomainError("k must be small")
    H = HilbertDerivation(k, ratios)
    r = H.r
    rho = sp.Symbol("rho", positive=True)
    y = sp.symbols(f"y1:{k + 1}", positive=True)
    expo = [_rprod(r, 1, j - 1) for j in range(1, k + 1)]  # x_j = rho^{r_{1,j-1}} y_j
    s_k = sum((_rprod(r, 1, j) for j in range(1, k)), sp.Integer(0))
    subs = {H.x[j]: rho ** expo[j] * y[j] for j in range(k)}
    Hy = HilbertDerivation(k, r)
    ysubs = {Hy.x[j]: y[j] for j in range(k)}
    push_ok = True
    for j in range(k):
        lhs = H.components[j].subs(subs) / rho ** expo[j]
        rhs = rho**s_k * Hy.components[j].subs(ysubs)
        if not _is_zero(lhs - rhs):
            push_ok = False
    fact_ok = True
    for j in range(1, k):
        G = H.first_integral(j).subs(subs)
        L = y[j - 1] ** r[j - 1] - y[j]
        if not _is_zero(G - rho ** _rprod(r, 1, j) * L):
            fact_ok = False
    fi_ok = all(_is_zero(H.apply(H.first_integral(j))) for j in range(1, k))
    r1k = _rprod(r, 1, k)
    Q = sum((H.x[j - 1] ** _rprod(r, j, k) for j in range(1, k + 1)), sp.Integer(0))
    Qy = sum((y[j - 1] ** _rprod(r, j, k) for j in range(1, k + 1)), sp.Integer(0))
    hom_ok = _is_zero(Q.subs(subs) - rho**r1k * Qy)
    R = Q ** (1 / r1k)
    chiR = H.apply(R)
    prop_ok = hom_ok
    for j in range(1, k):
        u = H.first_integral(j) / R ** _rprod(r, 1, j)
        if not _is_zero(R * H.apply(u) + _rprod(r, 1, j) * u * chiR):
            prop_ok = False
    details = {"s_k": str(s_k), "quasi_homogeneity": hom_ok, "T": [str(rho ** e) for e in expo]}
    return BlowupReport(k, s_k, push_ok, fact_ok, prop_ok, fi_ok, details)
