"""Calculus of chi-homogeneous blocks.

Monomials are ``X^m u^n`` with ``X = (x, z_1, ..., z_q1)`` and
``u = (u_1, ..., u_ell)``.  The derivation acts by

    chi x = x,   chi z_j = r_j z_j + x,   chi u_j = -s_j u_j,

so ``X^m u^n`` is an eigenvector up to lower terms, with eigenvalue
``e_{m,n} = <m, r> - <n, s>`` where ``r = (1, r_1, ..., r_q1)``.  The degree
``|m| - |n|`` is preserved.  On a transversal ``x = x0`` one substitutes
``u_j = lambda_j / x0^{s_j}``, where ``lambda_j = x^{s_j} u_j`` are first
integrals, which turns the orbit of a block under chi into an ideal of
series in the parameters and the ``lambda_j``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from sympy import QQ
from sympy.polys.fields import field as sym_field
from sympy.polys.matrices import DomainMatrix

from .division import Ideal, LocalPoly, MonomialOrder, chain_stationarity
from .errors import ConsistencyError, DomainError
from .euler_calculus import CoeffRing, Compensator, LogExpSum, chi0_apply, to_fraction

__all__ = [
    "ChiDerivation",
    "ChiPoly",
    "ChiBlock",
    "TransverseIdeal",
    "WronskianResult",
    "SBMonomialIdeal",
    "chi_apply",
    "euler_operator",
    "F_eq",
    "wronskian",
    "transverse_ideal",
    "fewnomial_split",
    "algebraic_multiplicity",
    "saturation_exponent",
    "differential_ideal",
    "ramified_partial_sum",
    "double_inclusion_check",
    "eigen_coordinates",
    "first_integral_residual",
]

DEFAULT_U_ORDER = 8
DEFAULT_PRECISION = 12
WRONSKIAN_MAX_N = 70


class ChiDerivation:
    """chi = x d/dx (with chi z_j = r_j z_j + x) - sum s_j u_j d/du_j."""

    def __init__(self, ring: CoeffRing, q1: int = 0, ell: int = 0, r: Sequence | None = None,
                 s: Sequence | None = None):
        self.ring = ring
        self.q1 = q1
        self.ell = ell
        if r is None:
            r = [1 + ring.mu(j) for j in range(1, q1 + 1)]
        if s is None:
            s = [1 + ring.mu(j) if f"mu{j}" in ring.names else ring.one for j in range(1, ell + 1)]
        if len(r) != q1 or len(s) != ell:
            raise ValueError("need one r_j per compensator and one s_j per u-variable")
        self.r = tuple(ring(v) for v in r)
        self.s = tuple(ring(v) for v in s)
        self.rvec = (ring.one, *self.r)

    def __repr__(self):
        return f"ChiDerivation(q1={self.q1}, ell={self.ell}, r={[str(v.as_expr()) for v in self.r]}, s={[str(v.as_expr()) for v in self.s]})"

    def eigenvalue(self, m, n=()):
        ring = self.ring
        e = ring.zero
        for mi, ri in zip(m, self.rvec):
            if mi:
                e += mi * ri
        for ni, si in zip(n, self.s):
            if ni:
                e -= ni * si
        return e

    def apply_general(self, x_exponent, zm=(), un=()):
        """chi of x^e z^zm u^un with an arbitrary ring exponent e.

        Returns a list of (coefficient, x_exponent, zm, un).
        """
        ring = self.ring
        e = ring(x_exponent)
        eig = e + sum((k * rj for k, rj in zip(zm, self.r)), ring.zero) - sum(
            (k * sj for k, sj in zip(un, self.s)), ring.zero)
        out = []
        if eig != 0:
            out.append((eig, e, tuple(zm), tuple(un)))
        for j, k in enumerate(zm):
            if k:
                z2 = list(zm)
                z2[j] -= 1
                out.append((ring(k), e + 1, tuple(z2), tuple(un)))
        return out

    def lam_exponents(self):
        return self.s


def first_integral_residual(D: ChiDerivation, j: int):
    """chi(x^{s_j} u_j) as a list of terms; empty means it vanishes exactly."""
    un = [0] * D.ell
    un[j] = 1
    return D.apply_general(D.s[j], (0,) * D.q1, tuple(un))


class ChiPoly:
    """Finite sum of monomials X^m u^n with CoeffRing coefficients."""

    def __init__(self, D: ChiDerivation, data: Mapping | None = None, u_order: int = DEFAULT_U_ORDER):
        self.D = D
        self.u_order = u_order
        ring = D.ring
        clean: dict = {}
        for key, c in (data or {}).items():
            m, n = key
            m = tuple(int(v) for v in m)
            n = tuple(int(v) for v in n)
            if len(m) != 1 + D.q1 or len(n) != D.ell:
                raise ValueError(f"bad bi-index {(m, n)}")
            if min(m + n, default=0) < 0:
                raise ValueError("negative exponent")
            if sum(n) > u_order:
                continue
            c = ring(c)
            if c != 0:
                v = clean.get((m, n), ring.zero) + c
                if v == 0:
                    clean.pop((m, n), None)
                else:
                    clean[(m, n)] = v
        self._data = clean

    @classmethod
    def monomial(cls, D: ChiDerivation, m, n=(), c=1, u_order: int = DEFAULT_U_ORDER):
        n = tuple(n) if n else (0,) * D.ell
        return cls(D, {(tuple(m), n): c}, u_order)

    @classmethod
    def x(cls, D):
        return cls.monomial(D, (1,) + (0,) * D.q1)

    @classmethod
    def z(cls, D, j):
        m = [0] * (1 + D.q1)
        m[j] = 1
        return cls.monomial(D, m)

    @classmethod
    def u(cls, D, j):
        n = [0] * D.ell
        n[j - 1] = 1
        return cls.monomial(D, (0,) * (1 + D.q1), n)

    @classmethod
    def zero(cls, D, u_order: int = DEFAULT_U_ORDER):
        return cls(D, {}, u_order)

    @property
    def terms(self) -> dict:
        return dict(self._data)

    def is_zero(self) -> bool:
        return not self._data

    def __bool__(self):
        return bool(self._data)

    def __len__(self):
        return len(self._data)

    def degrees(self) -> list[int]:
        return sorted({sum(m) - sum(n) for m, n in self._data})

    def _wrap(self, data, u_order=None):
        return ChiPoly(self.D, data, self.u_order if u_order is None else u_order)

    def _lift(self, other):
        if isinstance(other, ChiPoly):
            return other
        return ChiPoly.monomial(self.D, (0,) * (1 + self.D.q1), (), other, self.u_order)

    def __add__(self, other):
        other = self._lift(other)
        acc = dict(self._data)
        for k, c in other._data.items():
            acc[k] = acc.get(k, self.D.ring.zero) + c
        return ChiPoly(self.D, acc, min(self.u_order, other.u_order))

    __radd__ = __add__

    def __neg__(self):
        return self._wrap({k: -c for k, c in self._data.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __mul__(self, other):
        if not isinstance(other, ChiPoly):
            c = self.D.ring(other)
            return self._wrap({k: v * c for k, v in self._data.items()})
        acc: dict = {}
        for (m1, n1), c1 in self._data.items():
            for (m2, n2), c2 in other._data.items():
                key = (tuple(a + b for a, b in zip(m1, m2)), tuple(a + b for a, b in zip(n1, n2)))
                acc[key] = acc.get(key, self.D.ring.zero) + c1 * c2
        return ChiPoly(self.D, acc, min(self.u_order, other.u_order))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = self._lift(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, ChiPoly):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def to_logexp(self) -> LogExpSum:
        """Expand a u-free polynomial into a LogExpSum in x."""
        ring = self.D.ring
        comps = [Compensator(ring, rj - 1).to_logexp() for rj in self.D.r]
        x = LogExpSum.monomial(ring, 1, 1)
        total = LogExpSum.zero(ring)
        for (m, n), c in self._data.items():
            if any(n):
                raise DomainError("to_logexp needs a u-free polynomial")
            term = LogExpSum.monomial(ring, c, m[0])
            for zj, k in zip(comps, m[1:]):
                if k:
                    term = term * zj**k
            total = total + term
        del x
        return total

    def __repr__(self):
        if not self._data:
            return "0"
        names = ["x"] + [f"z{j}" for j in range(1, self.D.q1 + 1)]
        unames = [f"u{j}" for j in range(1, self.D.ell + 1)]
        parts = []
        for (m, n), c in sorted(self._data.items()):
            mono = [f"{v}^{k}" if k > 1 else v for v, k in zip(names + unames, m + n) if k]
            parts.append(f"({c.as_expr()})" + ("*" + "*".join(mono) if mono else ""))
        return " + ".join(parts)


class ChiBlock(ChiPoly):
    """ChiPoly whose monomials all have the same degree |m| - |n|."""

    def __init__(self, D: ChiDerivation, data: Mapping | None = None, u_order: int = DEFAULT_U_ORDER,
                 degree: int | None = None):
        super().__init__(D, data, u_order)
        degs = {sum(m) - sum(n) for m, n in self._data}
        if len(degs) > 1:
            raise ValueError(f"block mixes degrees {sorted(degs)}")
        if degs:
            d = degs.pop()
            if degree is not None and degree != d:
                raise ValueError(f"block has degree {d}, not {degree}")
            degree = d
        self.degree = degree

    @classmethod
    def of(cls, p: ChiPoly) -> "ChiBlock":
        return cls(p.D, p.terms, p.u_order)


def chi_apply(D: ChiDerivation, b: ChiPoly) -> ChiPoly:
    """Exact action of chi on a polynomial; blocks map to blocks of the same degree."""
    ring = D.ring
    acc: dict = {}
    for (m, n), c in b.terms.items():
        e = D.eigenvalue(m, n)
        if e != 0:
            acc[(m, n)] = acc.get((m, n), ring.zero) + e * c
        for j in range(1, 1 + D.q1):
            k = m[j]
            if k:
                m2 = list(m)
                m2[j] -= 1
                m2[0] += 1
                key = (tuple(m2), n)
                acc[key] = acc.get(key, ring.zero) + k * c
    out = ChiPoly(D, acc, b.u_order)
    if isinstance(b, ChiBlock):
        return ChiBlock(D, out.terms, b.u_order, b.degree)
    return out


def F_eq(D: ChiDerivation, n: int, u_order: int = 0) -> list:
    """Bi-indices (m, nu) of degree n with |nu| <= u_order (nu = () when ell = 0)."""
    out = []
    for k in range(0, u_order + 1 if D.ell else 1):
        for nu in _compositions(D.ell, k):
            total = n + k
            if total < 0:
                continue
            for m in _compositions(1 + D.q1, total):
                out.append((m, nu))
    return out


def _compositions(parts: int, total: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(parts - 1, total - first):
            yield (first, *rest)


def euler_operator(D: ChiDerivation, F: Iterable, b: ChiPoly) -> ChiPoly:
    """Apply prod_{m in F} (chi - e_m Id); F holds m or bi-indices (m, n)."""
    out = b
    for item in F:
        if len(item) == 2 and isinstance(item[0], tuple):
            m, n = item
        else:
            m, n = tuple(item), ()
        e = D.eigenvalue(m, n)
        out = chi_apply(D, out) - out * e
        if isinstance(b, ChiBlock):
            out = ChiBlock(D, out.terms, b.u_order, b.degree)
    return out


def fewnomial_split(f: ChiPoly) -> list[ChiBlock]:
    """Blocks of f ordered by degree; their sum is f."""
    groups: dict = {}
    for (m, n), c in f.terms.items():
        groups.setdefault(sum(m) - sum(n), {})[(m, n)] = c
    return [ChiBlock(f.D, groups[p], f.u_order, p) for p in sorted(groups)]


def _chi_closure(D: ChiDerivation, f: ChiPoly) -> set:
    support = set(f.terms)
    frontier = list(support)
    while frontier:
        m, n = frontier.pop()
        for j in range(1, 1 + D.q1):
            if m[j]:
                m2 = list(m)
                m2[j] -= 1
                m2[0] += 1
                key = (tuple(m2), n)
                if key not in support:
                    support.add(key)
                    frontier.append(key)
    return support


# ---------------------------------------------------------------- Wronskian


@dataclass
class WronskianResult:
    n: int
    q1: int
    N: int
    determinant: LogExpSum
    b_n: object
    s_n: object
    s_n_at_zero: Fraction
    monomials: tuple

    def report(self) -> dict:
        return {
            "n": self.n,
            "q1": self.q1,
            "N": self.N,
            "determinant": repr(self.determinant),
            "b_n": str(self.b_n.as_expr()),
            "s_n": str(self.s_n.as_expr()),
            "s_n_at_zero": str(self.s_n_at_zero),
        }


def _residue_polys(D: ChiDerivation, dom):
    """Residues r_j - 1 as elements of a polynomial domain over the ring symbols."""
    out = []
    for rj in D.r:
        beta = rj - 1
        if not beta.denom.is_ground:
            raise DomainError("Wronskian needs residues r_j - 1 polynomial in the parameters")
        if beta == 0:
            raise DomainError("Wronskian needs r_j != 1 (generic residues)")
        out.append(dom.from_sympy(beta.as_expr()))
    return out


def wronskian(D: ChiDerivation, n: int) -> WronskianResult:
    """det M_n for the monomials X^m, |m| = n, with columns (chi^j X^m)_j.

    Writes y_j = x^{r_j - 1}, so that (r_j - 1) z_j = x (y_j - 1) and chi acts
    diagonally on x^n y^a with eigenvalue n + <a, r - 1>.  The determinant is
    computed over QQ[parameters, y] and must collapse to one monomial in y.
    """
    if D.ell:
        raise DomainError("Wronskian is defined for ell = 0")
    ring = D.ring
    q1 = D.q1
    mons = [m for m, _ in F_eq(D, n)]
    N = len(mons)
    if N > WRONSKIAN_MAX_N:
        raise DomainError(f"N(n) = {N} exceeds the guard {WRONSKIAN_MAX_N}")
    names = list(ring.names) + [f"y{j}" for j in range(1, q1 + 1)]
    if not names:
        names = ["_y"]
    dom = QQ[tuple(names)]
    gens = dom.gens
    ys = gens[len(ring.names):len(ring.names) + q1]
    betas = _residue_polys(D, dom)

    def expand_scaled(m):
        # (prod beta_j^{m_j}) X^m / x^n = prod (y_j - 1)^{m_j}
        p = dom.one
        for j in range(q1):
            p = p * (ys[j] - 1) ** m[1 + j]
        return p

    def y_exponents(poly):
        return [(mon[len(ring.names):len(ring.names) + q1], c) for mon, c in poly.terms()]

    rows = []
    scaled = [expand_scaled(m) for m in mons]
    eig_cache: dict = {}
    matrix = [[None] * N for _ in range(N)]
    for col, p in enumerate(scaled):
        for j in range(N):
            acc = dom.zero
            for mon, c in p.terms():
                a = mon[len(ring.names):len(ring.names) + q1]
                if a not in eig_cache:
                    eig_cache[a] = n + sum((ai * bi for ai, bi in zip(a, betas)), dom.zero)
                ymon = dom.one
                for yj, ai in zip(ys, a):
                    ymon = ymon * yj**ai
                acc += dom.convert(c) * eig_cache[a] ** j * ymon
            matrix[j][col] = acc
    del rows
    M = DomainMatrix(matrix, (N, N), dom)
    det = M.det()
    ypart = {}
    for mon, c in det.terms():
        key = mon[len(ring.names):len(ring.names) + q1]
        ypart.setdefault(key, dom.zero)
        ypart[key] += dom.ring.from_dict({mon[:len(ring.names)] + (0,) * q1: c})
    ypart = {k: v for k, v in ypart.items() if v != 0}
    if len(ypart) != 1:
        raise ConsistencyError(f"Wronskian does not factor as b x^s: {len(ypart)} y-monomials")
    (yexp, coeff), = ypart.items()
    expected = tuple(sum(m[1 + j] for m in mons) for j in range(q1))
    if yexp != expected:
        raise ConsistencyError(f"Wronskian exponent {yexp} differs from sum of multi-indices {expected}")
    scale = ring.one
    for m in mons:
        for j in range(q1):
            scale *= (D.r[j] - 1) ** m[1 + j]
    b_n = ring(dom.to_sympy(coeff)) / scale
    s_n = ring.zero
    for m in mons:
        s_n += D.eigenvalue(m)
    s_alt = n * N + sum(((D.r[j] - 1) * yexp[j] for j in range(q1)), ring.zero)
    if s_alt != s_n:
        raise ConsistencyError("s_n mismatch")
    # b_n = Delta_n(1, mu): determinant of M_n at x = 1 (y = 1), computed separately
    at_one = [[_eval_y_one(matrix[j][c], dom, len(ring.names), q1) for c in range(N)] for j in range(N)]
    par_dom = QQ[tuple(ring.names)] if ring.names else QQ
    det1 = DomainMatrix([[par_dom.from_sympy(dom.to_sympy(v)) for v in row] for row in at_one], (N, N), par_dom).det()
    if ring(par_dom.to_sympy(det1)) / scale != b_n:
        raise ConsistencyError("b_n differs from Delta_n(1, mu)")
    s0 = ring.evaluate(s_n, {})
    if s0 != n * N:
        raise ConsistencyError(f"s_n(0) = {s0} differs from n N(n) = {n * N}")
    determinant = LogExpSum.monomial(ring, b_n, s_n)
    return WronskianResult(n, q1, N, determinant, b_n, s_n, s0, tuple(mons))


def _eval_y_one(poly, dom, npar, q1):
    acc = dom.zero
    for mon, c in poly.terms():
        acc += dom.ring.from_dict({mon[:npar] + (0,) * q1: c})
    return acc


# ------------------------------------------------------- transverse ideals

_LOG_FIELD, _LOG = sym_field("L", QQ)


def _K(q):
    q = to_fraction(q)
    return _LOG_FIELD(QQ(q.numerator, q.denominator))


class _SeriesBuilder:
    """Truncated series in (parameters, lambda) with coefficients in QQ(L), L = log x0."""

    def __init__(self, D: ChiDerivation, x0: Fraction, precision: int):
        self.D = D
        self.ring = D.ring
        self.x0 = x0
        self.npar = len(D.ring.names)
        self.nvars = self.npar + D.ell
        self.precision = precision
        self.L = _LOG if x0 != 1 else _LOG_FIELD.zero
        self._cache: dict = {}

    def const(self, c) -> LocalPoly:
        return LocalPoly.constant(self.nvars, c, self.precision)

    def from_poly(self, poly) -> LocalPoly:
        data = {}
        for mon, c in poly.terms():
            data[tuple(mon) + (0,) * self.D.ell] = _K(c)
        return LocalPoly(self.nvars, data, self.precision)

    def from_ring(self, elem) -> LocalPoly:
        if elem in self._cache:
            return self._cache[elem]
        num = self.from_poly(elem.numer) if self.npar else self.const(_K(elem.numer))
        den = self.from_poly(elem.denom) if self.npar else self.const(_K(elem.denom))
        d0 = den.coefficient((0,) * self.nvars)
        if d0 == 0:
            raise DomainError(f"coefficient {elem.as_expr()} is not a germ at the origin")
        t = den * (1 / d0) - self.const(_LOG_FIELD.one)
        inv = self.const(_LOG_FIELD.one)
        power = self.const(_LOG_FIELD.one)
        for k in range(1, self.precision + 1):
            power = power * (-t)
            if power.is_zero():
                break
            inv = inv + power
        out = num * inv * (1 / d0)
        self._cache[elem] = out
        return out

    def exp_series(self, a: LocalPoly) -> LocalPoly:
        out = self.const(_LOG_FIELD.one)
        term = self.const(_LOG_FIELD.one)
        for k in range(1, self.precision + 1):
            term = term * a * _K(Fraction(1, k))
            if term.is_zero():
                break
            out = out + term
        return out

    def x0_power(self, e) -> LocalPoly:
        """x0^e for a ring exponent e whose value at the origin is an integer."""
        e0 = self.ring.evaluate(e, {})
        if e0.denominator != 1:
            raise DomainError("transversal restriction at x0 != 1 needs integer exponents at the origin")
        base = self.const(_K(self.x0 ** int(e0)))
        rest = self.from_ring(e - self.ring(e0))
        if rest.is_zero():
            return base
        return base * self.exp_series(rest * self.L)

    def compensator(self, j: int) -> LocalPoly:
        """z_j(x0) = x0 Ld(x0, r_j - 1) as a series in the parameters."""
        key = ("z", j)
        if key in self._cache:
            return self._cache[key]
        if self.x0 == 1:
            out = LocalPoly(self.nvars, {}, self.precision)
        else:
            beta = self.from_ring(self.D.r[j] - 1)
            out = self.const(_LOG_FIELD.zero)
            term = self.const(self.L)
            for k in range(0, self.precision + 1):
                out = out + term * _K(Fraction(1, math.factorial(k + 1)))
                term = term * beta * self.L
                if term.is_zero():
                    break
            out = out * _K(self.x0)
        self._cache[key] = out
        return out

    def restrict(self, f: ChiPoly) -> LocalPoly:
        total = LocalPoly(self.nvars, {}, self.precision)
        for (m, n), c in f.terms.items():
            term = self.from_ring(c) * self.const(_K(self.x0 ** m[0]))
            for j in range(self.D.q1):
                if m[1 + j]:
                    term = term * self.compensator(j) ** m[1 + j]
            if any(n):
                e = self.ring.zero
                for nj, sj in zip(n, self.D.s):
                    e -= nj * sj
                term = term * self.x0_power(e)
                term = term.shift((0,) * self.npar + tuple(n))
            total = total + term
        return total


class TransverseIdeal:
    """Ideal in the parameters and lambda_j generated by restricted derivatives."""

    def __init__(self, ideal: Ideal, x0, derivatives: int, certified: bool, status: str, u_order: int):
        self.ideal = ideal
        self.x0 = x0
        self.derivatives = derivatives
        self.certified = certified
        self.status = status
        self.u_order = u_order

    @property
    def generators(self):
        return self.ideal.generators

    @property
    def names(self):
        return self.ideal.names

    def issubset(self, other) -> bool:
        other_ideal = other.ideal if isinstance(other, TransverseIdeal) else other
        return self.ideal.issubset(other_ideal)

    def __eq__(self, other):
        if not isinstance(other, TransverseIdeal):
            return NotImplemented
        return self.issubset(other) and other.issubset(self)

    __hash__ = None

    def is_zero(self) -> bool:
        return self.ideal.is_zero()

    def is_unit(self) -> bool:
        return self.ideal.is_unit()

    def describe(self) -> str:
        return self.ideal.describe()

    def __repr__(self):
        return f"TransverseIdeal{self.describe()} [x0={self.x0}, derivatives={self.derivatives}, {self.status}]"


def transverse_ideal(D: ChiDerivation, f: ChiPoly, x0=1, max_derivatives: int = 64,
                     precision: int = DEFAULT_PRECISION, window: int = 3) -> TransverseIdeal:
    """Ideal generated by the restrictions of f, chi f, chi^2 f, ... to x = x0.

    If f has D monomials in its chi-closure, chi^D f is a constant-coefficient
    combination of the lower derivatives (Cayley-Hamilton for the triangular
    action), so D restrictions generate everything and the result is
    certified.  When D exceeds ``max_derivatives`` the loop stops after
    ``window`` consecutive members, or reports "chain not stabilized".
    """
    x0 = to_fraction(x0)
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    builder = _SeriesBuilder(D, x0, precision)
    names = list(D.ring.names) + [f"lambda{j}" for j in range(1, D.ell + 1)]
    order = MonomialOrder(builder.nvars)
    closure = len(_chi_closure(D, f))
    gens: list = []
    current = f
    needed = closure
    status = "certified"
    certified = True
    in_a_row = 0
    count = 0
    for j in range(max(needed, 1) if needed <= max_derivatives else max_derivatives):
        g = builder.restrict(current)
        count += 1
        if needed > max_derivatives:
            ideal = Ideal(gens, builder.nvars, order, precision, names)
            if gens and ideal.contains(g):
                in_a_row += 1
                if in_a_row >= window:
                    status = "stabilized by membership"
                    certified = False
                    break
            else:
                in_a_row = 0
        if not g.is_zero():
            gens.append(g)
        current = chi_apply(D, current)
    else:
        if needed > max_derivatives:
            status = "chain not stabilized"
            certified = False
    ideal = Ideal(gens, builder.nvars, order, precision, names)
    return TransverseIdeal(ideal, x0, count, certified, status, f.u_order)


def saturation_exponent(D: ChiDerivation, f: ChiPoly, lam: Sequence[int]) -> int | None:
    """Least integer n with x^n f in the saturated principal ideal (x^<a,s> u^a).

    A quotient term c x^e (log x)^k u^b is bounded near the origin iff b >= 0
    and either e(0) > 0, or e is identically 0 and k = 0.  Returns None when
    some term is not divisible by u^a.
    """
    ring = D.ring
    lam = tuple(lam)
    shift = ring.zero
    for aj, sj in zip(lam, D.s):
        shift += aj * sj
    best = None
    for (m, n), c in f.terms.items():
        if any(nj < aj for nj, aj in zip(n, lam)):
            return None
        mono = ChiPoly(D, {((m[0],) + (0,) * D.q1, n): 1})
        le = ChiPoly(D, {(m, (0,) * D.ell): 1}).to_logexp()
        for cc, e, k in le.terms:
            ex = e - shift
            v = ring.evaluate(ex, {})
            const = ring.is_constant(ex)
            if const and k == 0:
                need = math.ceil(-v)
            else:
                need = math.floor(-v) + 1
            best = need if best is None else max(best, need)
        del mono
    return best


# ----------------------------------------------- SB monomial ideals (ramified)


@dataclass(frozen=True)
class SBMonomialIdeal:
    """Ideal of bounded functions generated by monomials alpha^a x^e.

    alpha^b x^c lies in it iff some generator has a <= b and e <= c: the
    quotient alpha^(b-a) x^(c-e) is bounded near the origin exactly then.
    """

    generators: tuple

    def contains_monomial(self, a, e) -> bool:
        return any(all(x <= y for x, y in zip(ga, a)) and ge <= e for ga, ge in self.generators)

    def issubset(self, other: "SBMonomialIdeal") -> bool:
        return all(other.contains_monomial(a, e) for a, e in self.generators)

    def __le__(self, other):
        return self.issubset(other)

    def minimal(self) -> "SBMonomialIdeal":
        keep = []
        for a, e in self.generators:
            others = [g for g in self.generators if g != (a, e)]
            if not SBMonomialIdeal(tuple(others)).contains_monomial(a, e):
                keep.append((a, e))
        return SBMonomialIdeal(tuple(sorted(set(keep))))

    def describe(self) -> str:
        return "(" + ", ".join(f"a^{a} x^{e}" for a, e in self.generators) + ")"


def ramified_partial_sum(ring: CoeffRing, N: int, alpha: str = "alpha") -> LogExpSum:
    """sum_{n=1}^N alpha^n x^(1/n)."""
    a = ring.gen(alpha)
    return LogExpSum.from_terms(ring, [(a**n, Fraction(1, n), 0) for n in range(1, N + 1)])


def differential_ideal(f: LogExpSum, alpha_names: Sequence[str]) -> SBMonomialIdeal:
    """Bounded-function ideal generated by chi0^j f, j < #terms.

    Coefficients must be polynomials in ``alpha_names`` over QQ and the
    exponents rational constants.  The derivatives are expanded on the
    monomials alpha^a x^e (log x)^k and row-reduced over QQ, which keeps
    the result inside the ideal; the reduced rows must be monomials.
    """
    ring = f.ring
    idx = [ring.names.index(a) for a in alpha_names]
    derivs = []
    g = f
    for _ in range(len(f)):
        derivs.append(g)
        g = chi0_apply(g)
    rows = []
    keys: dict = {}
    for g in derivs:
        row = {}
        for c, e, k in g.terms:
            if not ring.is_constant(e):
                raise DomainError("exponents must be constants")
            if not c.denom.is_ground:
                raise DomainError("coefficients must be polynomial")
            ev = ring.evaluate(e, {})
            dq = to_fraction(c.denom.LC)
            for mon, cq in c.numer.terms():
                a = tuple(mon[i] for i in idx)
                key = (a, ev, k)
                keys.setdefault(key, len(keys))
                row[key] = row.get(key, Fraction(0)) + to_fraction(cq) / dq
        rows.append(row)
    ordered = sorted(keys, key=lambda t: (t[1], t[0], t[2]))
    mat = [[r.get(key, Fraction(0)) for key in ordered] for r in rows]
    reduced = _rref(mat)
    gens = []
    for row in reduced:
        nz = [ordered[i] for i, v in enumerate(row) if v != 0]
        if not nz:
            continue
        if len(nz) != 1:
            raise DomainError("differential ideal is not monomial after reduction")
        a, e, k = nz[0]
        if k:
            raise DomainError("logarithmic generators not supported")
        gens.append((a, e))
    return SBMonomialIdeal(tuple(sorted(gens))).minimal()


def _rref(mat):
    mat = [row[:] for row in mat]
    nrows = len(mat)
    ncols = len(mat[0]) if mat else 0
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        pv = mat[r][c]
        mat[r] = [v / pv for v in mat[r]]
        for i in range(nrows):
            if i != r and mat[i][c] != 0:
                fac = mat[i][c]
                mat[i] = [a - fac * b for a, b in zip(mat[i], mat[r])]
        r += 1
        if r == nrows:
            break
    return mat[:r]


# ------------------------------------------------- algebraic multiplicity


@dataclass
class MultiplicityResult:
    ma: int | None
    chain: list
    degrees: list
    status: str

    @property
    def ma_plus(self):
        return None if self.ma is None else max(self.ma, 0)


def algebraic_multiplicity(D: ChiDerivation | None, series, x0=1, N_max: int = 20, window: int = 3,
                           precision: int = DEFAULT_PRECISION) -> MultiplicityResult:
    """Stationarity index of the chain of ideals of the partial sums.

    ``series`` is a sequence of ChiBlocks (transverse ideals of partial sums
    indexed by degree, starting at min(0, lowest degree)), or a sequence of
    LogExpSum partial sums with ramified exponents, for which the chain of
    bounded-function differential ideals is used instead.
    """
    series = list(series)
    if series and isinstance(series[0], LogExpSum):
        alpha = [n for n in series[0].ring.names if not n.startswith("mu")]
        chain = [differential_ideal(s, alpha) for s in series[: N_max + 1]]
        res = chain_stationarity(chain, N_max, window)
        return MultiplicityResult(res.index, chain, list(range(len(chain))), res.status)
    blocks = [b for b in series if not b.is_zero()]
    if not blocks:
        zero = transverse_ideal(D, ChiPoly.zero(D), x0, precision=precision)
        return MultiplicityResult(0, [zero], [0], "stabilized")
    degs = [b.degree for b in blocks]
    start = min(0, min(degs))
    top = max(degs)
    chain, indices = [], []
    partial = ChiPoly.zero(D, blocks[0].u_order)
    for p in range(start, min(top, start + N_max) + 1):
        for b in blocks:
            if b.degree == p:
                partial = partial + b
        chain.append(transverse_ideal(D, partial, x0, precision=precision))
        indices.append(p)
    res = chain_stationarity(chain, N_max, window)
    ma = None if res.index is None else indices[res.index]
    return MultiplicityResult(ma, chain, indices, res.status)


# ---------------------------------------------------- double inclusion


def eigen_coordinates(D: ChiDerivation, g: ChiPoly, point: Mapping[str, object]) -> tuple[int, dict]:
    """Write a u-free block of degree p as x^p sum_a c_a y^a with y_j = x^{r_j - 1}.

    ``point`` specializes all ring symbols to rationals with r_j != 1.
    Returns (p, {a: c_a}); chi acts on x^p y^a by p + <a, r(point) - 1>.
    """
    ring = D.ring
    betas = [ring.evaluate(rj - 1, point) for rj in D.r]
    if any(b == 0 for b in betas):
        raise DomainError("sample point has a resonant residue")
    out: dict = {}
    p = None
    for (m, n), c in g.terms.items():
        if any(n):
            raise DomainError("eigen coordinates need ell = 0")
        deg = sum(m)
        if p is None:
            p = deg
        elif p != deg:
            raise DomainError("not homogeneous")
        poly = {(0,) * D.q1: ring.evaluate(c, point)}
        for j in range(D.q1):
            for _ in range(m[1 + j]):
                nxt: dict = {}
                for a, v in poly.items():
                    up = list(a)
                    up[j] += 1
                    up = tuple(up)
                    nxt[up] = nxt.get(up, Fraction(0)) + v / betas[j]
                    nxt[a] = nxt.get(a, Fraction(0)) - v / betas[j]
                poly = nxt
        for a, v in poly.items():
            out[a] = out.get(a, Fraction(0)) + v
    return (p if p is not None else 0), {a: v for a, v in out.items() if v != 0}


@dataclass
class InclusionReport:
    holds: bool
    target: Fraction
    achieved: list
    resamples: int
    points: list
    diagnostics: list = field(default_factory=list)

    @property
    def max_achieved(self):
        vals = [a for a in self.achieved if a is not None]
        return max(vals) if vals else None


def double_inclusion_check(D: ChiDerivation, g: ChiBlock, eps=Fraction(1, 2), samples: int = 20,
                           seed: int = 0, scale=None) -> InclusionReport:
    """Measure the x-power needed to bring the transverse generators into I_{chi,g}.

    At each rational sample point the Wronskian system M_n a = (chi^j g)_j is
    inverted by Cramer's rule, a = adj(M_n(x)) G(x) / Delta_n(x), so that the
    restriction (chi^i g)(1) equals sum_j c_ij(x) chi^j g(x) with
    c = M_n(1) adj(M_n(x)) / Delta_n(x).  The achieved exponent is the least E
    with x^E c bounded, i.e. s_n(mu*) minus the smallest x-order in
    M_n(1) adj(M_n(x)).  Only ell = 0 blocks are handled.
    """
    eps = to_fraction(eps)
    if D.ell:
        raise DomainError("double inclusion check handles ell = 0 blocks")
    p = g.degree if isinstance(g, ChiBlock) else None
    if g.is_zero():
        return InclusionReport(True, Fraction(p or 0) + eps, [], 0, [])
    p = g.degree
    if p < 0:
        raise DomainError("degree must be nonnegative")
    mons = [m for m, _ in F_eq(D, p)]
    N = len(mons)
    q1 = D.q1
    rng = random.Random(seed)
    if scale is None:
        scale = eps / (4 * max(1, p) * N * max(1, q1))
    scale = to_fraction(scale)
    achieved, points, diags = [], [], []
    resamples = 0
    ring = D.ring
    target = p + eps
    while len(achieved) < samples:
        point = {}
        for name in ring.names:
            num = rng.randint(-1000, 1000)
            point[name] = scale * Fraction(num, 1000)
        try:
            ach = _achieved_exponent(D, mons, p, point)
        except _Singular as exc:
            resamples += 1
            diags.append(f"resampled at {point}: {exc}")
            if resamples > 10 * samples:
                raise DomainError("too many singular sample points") from None
            continue
        achieved.append(ach)
        points.append(point)
    holds = all(a <= target for a in achieved)
    return InclusionReport(holds, target, achieved, resamples, points, diags)


class _Singular(Exception):
    pass


def _achieved_exponent(D: ChiDerivation, mons, p, point):
    q1 = D.q1
    ring = D.ring
    betas = [ring.evaluate(rj - 1, point) for rj in D.r]
    if any(b == 0 for b in betas):
        raise _Singular("resonant residue")
    eig = {}
    cols = []
    for m in mons:
        _, coords = eigen_coordinates(D, ChiPoly(D, {(m, ()): 1}), point)
        cols.append(coords)
        for a in coords:
            eig[a] = p + sum(ai * bi for ai, bi in zip(a, betas))
    if len(set(eig.values())) != len(eig):
        raise _Singular("eigenvalue collision")
    N = len(mons)
    ynames = tuple(f"y{j}" for j in range(1, q1 + 1)) or ("_y",)
    dom = QQ[ynames]
    ys = dom.gens

    def ymon(a):
        out = dom.one
        for yj, aj in zip(ys, a):
            out = out * yj**aj
        return out

    M = [[dom.zero] * N for _ in range(N)]
    M1 = [[Fraction(0)] * N for _ in range(N)]
    for c, coords in enumerate(cols):
        for j in range(N):
            acc = dom.zero
            acc1 = Fraction(0)
            for a, v in coords.items():
                w = v * eig[a] ** j
                acc += dom.convert(QQ(w.numerator, w.denominator)) * ymon(a)
                acc1 += w
            M[j][c] = acc
            M1[j][c] = acc1
    Mx = DomainMatrix(M, (N, N), dom)
    adj = Mx.adjugate().to_Matrix()
    det = Mx.det()
    det_terms = list(det.terms())
    if len(det_terms) != 1:
        raise ConsistencyError("Delta_n is not a monomial at the sample point")
    (dexp, dcoef), = det_terms
    if dcoef == 0:
        raise _Singular("b_n vanishes")
    s_n = p * N + sum(ai * bi for ai, bi in zip(dexp, betas))
    best = None
    for i in range(N):
        for j in range(N):
            entry = dom.zero
            for k in range(N):
                if M1[i][k] != 0:
                    entry += dom.convert(QQ(M1[i][k].numerator, M1[i][k].denominator)) * dom.from_sympy(adj[k, j])
            for mon, c in entry.terms():
                if c == 0:
                    continue
                order = p * (N - 1) + sum(ai * bi for ai, bi in zip(mon, betas))
                need = s_n - order
                best = need if best is None else max(best, need)
    return best
