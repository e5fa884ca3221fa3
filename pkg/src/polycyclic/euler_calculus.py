"""Exact coefficient ring, compensators and the resolvent of x f' = r f + g.

Everything symbolic lives in :class:`CoeffRing`, a field of rational
functions over QQ in named symbols (residues ``mu1, mu2, ...`` and analytic
parameters).  :class:`LogExpSum` holds finite sums ``c x^e (log x)^k`` whose
coefficients and exponents are elements of that field.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from sympy import QQ
from sympy.polys.fields import FracElement, field

from .errors import DomainError

__all__ = [
    "CoeffRing",
    "LogExpSum",
    "Compensator",
    "ld_eval",
    "euler_resolve",
    "chi0_apply",
    "to_fraction",
]


def to_fraction(q) -> Fraction:
    """Convert an int, str ("3/7"), Fraction or sympy rational to Fraction."""
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, str)):
        return Fraction(q)
    if isinstance(q, float):
        return Fraction(q)
    num = getattr(q, "numerator", None)
    den = getattr(q, "denominator", None)
    if num is not None and den is not None:
        num = num() if callable(num) else num
        den = den() if callable(den) else den
        return Fraction(int(num), int(den))
    return Fraction(str(q))


class CoeffRing:
    """Rational functions over QQ in a fixed tuple of symbol names.

    Names starting with ``mu`` are residue symbols; the generic point used to
    order exponents gives them small distinct values.
    """

    _DUMMY = "_t"

    def __init__(self, names: Iterable[str] = ("mu1",)):
        names = tuple(names)
        self.names = names
        self.field, *gens = field(",".join(names) if names else self._DUMMY, QQ)
        self._gens = dict(zip(names, gens))
        self._poly_gens = self.field.ring.gens
        point = {}
        for i, name in enumerate(names):
            if name.startswith("mu"):
                point[name] = Fraction((-1) ** i, 37 + 11 * i)
            else:
                point[name] = Fraction(3, 29 + 7 * i)
        self.generic_point = point

    @classmethod
    def standard(cls, q1: int = 1, nu: int = 0, extra: Iterable[str] = ()) -> "CoeffRing":
        names = [f"mu{j}" for j in range(1, q1 + 1)]
        names += [f"nu{j}" for j in range(1, nu + 1)]
        names += list(extra)
        return cls(names)

    def __repr__(self):
        return f"CoeffRing({self.names!r})"

    def __eq__(self, other):
        return isinstance(other, CoeffRing) and other.names == self.names

    def __hash__(self):
        return hash(self.names)

    @property
    def zero(self) -> FracElement:
        return self.field.zero

    @property
    def one(self) -> FracElement:
        return self.field.one

    def gen(self, name: str) -> FracElement:
        try:
            return self._gens[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r}; ring has {self.names}") from None

    def mu(self, j: int) -> FracElement:
        return self.gen(f"mu{j}")

    def __call__(self, value) -> FracElement:
        if isinstance(value, FracElement):
            if value.field != self.field:
                return self.field.from_expr(value.as_expr())
            return value
        if isinstance(value, str) and any(c.isalpha() for c in value):
            return self.field.from_expr(_sympify(value))
        if hasattr(value, "free_symbols"):
            if value.free_symbols:
                return self.field.from_expr(value)
            value = to_fraction(value)
        q = to_fraction(value)
        return self.field(QQ(q.numerator, q.denominator))

    def evaluate(self, elem, point: Mapping[str, object] | None = None) -> Fraction:
        """Exact value at a rational point; missing names default to zero."""
        point = {} if point is None else point
        subs = [(g, _qq(point.get(name, 0))) for name, g in zip(self.names, self._poly_gens)]
        if not subs:
            subs = [(self._poly_gens[0], QQ(0))]
        num = elem.numer.evaluate(subs) if elem.numer.ring.ngens else elem.numer
        den = elem.denom.evaluate(subs) if elem.denom.ring.ngens else elem.denom
        if den == 0:
            raise ZeroDivisionError(f"{elem} has a pole at {dict(point)}")
        return to_fraction(num) / to_fraction(den)

    def evaluate_float(self, elem, point: Mapping[str, float] | None = None) -> float:
        point = {} if point is None else point
        expr = elem.as_expr()
        vals = {}
        for name, sym in zip(self.names, self.field.symbols):
            vals[sym] = point.get(name, 0.0)
        return float(expr.subs(vals))

    def is_constant(self, elem) -> bool:
        return elem.numer.is_ground and elem.denom.is_ground

    def sort_key(self, elem):
        return _generic_value(self, elem), str(elem.as_expr())


def _qq(v):
    q = to_fraction(v)
    return QQ(q.numerator, q.denominator)


def _sympify(text):
    import sympy

    return sympy.sympify(text)


@lru_cache(maxsize=65536)
def _generic_value(ring: CoeffRing, elem) -> Fraction:
    try:
        return ring.evaluate(elem, ring.generic_point)
    except ZeroDivisionError:
        return Fraction(10**9)


class LogExpSum:
    """Finite sum of terms ``c x^e (log x)^k`` in normal form.

    ``terms`` is a tuple of ``(c, e, k)`` sorted by exponent at the ring's
    generic point, then by ``k``; no zero coefficients, no repeated ``(e, k)``.
    """

    __slots__ = ("ring", "_data", "_terms")

    def __init__(self, ring: CoeffRing, data: Mapping | None = None):
        self.ring = ring
        clean = {}
        for (e, k), c in (data or {}).items():
            if k < 0:
                raise ValueError("log power must be nonnegative")
            if c != 0:
                clean[(ring(e), int(k))] = ring(c)
        self._data = clean
        self._terms = None

    @classmethod
    def from_terms(cls, ring: CoeffRing, terms: Iterable[tuple]) -> "LogExpSum":
        acc: dict = {}
        for c, e, k in terms:
            key = (ring(e), int(k))
            acc[key] = acc.get(key, ring.zero) + ring(c)
        return cls(ring, acc)

    @classmethod
    def monomial(cls, ring: CoeffRing, c=1, e=0, k: int = 0) -> "LogExpSum":
        return cls.from_terms(ring, [(c, e, k)])

    @classmethod
    def zero(cls, ring: CoeffRing) -> "LogExpSum":
        return cls(ring, {})

    @property
    def terms(self) -> tuple:
        if self._terms is None:
            items = sorted(self._data.items(), key=lambda kv: (self.ring.sort_key(kv[0][0]), kv[0][1]))
            self._terms = tuple((c, e, k) for (e, k), c in items)
        return self._terms

    def as_dict(self) -> dict:
        return dict(self._data)

    def coefficient(self, e, k: int = 0):
        return self._data.get((self.ring(e), k), self.ring.zero)

    def is_zero(self) -> bool:
        return not self._data

    def __bool__(self):
        return bool(self._data)

    def __len__(self):
        return len(self._data)

    def _coerce(self, other) -> "LogExpSum":
        if isinstance(other, LogExpSum):
            if other.ring != self.ring:
                raise ValueError("LogExpSums over different rings")
            return other
        return LogExpSum.monomial(self.ring, other, 0, 0)

    def __add__(self, other):
        other = self._coerce(other)
        acc = dict(self._data)
        for key, c in other._data.items():
            acc[key] = acc.get(key, self.ring.zero) + c
        return LogExpSum(self.ring, acc)

    __radd__ = __add__

    def __neg__(self):
        return LogExpSum(self.ring, {key: -c for key, c in self._data.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, LogExpSum):
            c = self.ring(other)
            return LogExpSum(self.ring, {key: v * c for key, v in self._data.items()})
        other = self._coerce(other)
        acc: dict = {}
        for (e1, k1), c1 in self._data.items():
            for (e2, k2), c2 in other._data.items():
                key = (e1 + e2, k1 + k2)
                acc[key] = acc.get(key, self.ring.zero) + c1 * c2
        return LogExpSum(self.ring, acc)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = LogExpSum.monomial(self.ring, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, LogExpSum):
            return (self - other).is_zero()
        try:
            return (self - self._coerce(other)).is_zero()
        except Exception:
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def chi0(self) -> "LogExpSum":
        return chi0_apply(self)

    def map_coefficients(self, fn) -> "LogExpSum":
        return LogExpSum(self.ring, {key: fn(c) for key, c in self._data.items()})

    def at_one(self):
        """Exact value at x = 1 (only log-free terms survive)."""
        total = self.ring.zero
        for (e, k), c in self._data.items():
            if k == 0:
                total += c
        return total

    def evaluate(self, x, point: Mapping[str, object] | None = None):
        """Float value at ``x`` (scalar or array) and a numeric parameter point."""
        x = np.asarray(x, dtype=float)
        logx = np.log(x)
        total = np.zeros_like(x)
        point = point or {}
        exact = all(not isinstance(v, float) for v in point.values())
        for c, e, k in self.terms:
            if exact:
                cv = float(self.ring.evaluate(c, point))
                ev = float(self.ring.evaluate(e, point))
            else:
                cv = self.ring.evaluate_float(c, point)
                ev = self.ring.evaluate_float(e, point)
            total = total + cv * np.exp(ev * logx) * logx**k
        return total if total.ndim else float(total)

    def substitute(self, point: Mapping[str, object]) -> "LogExpSum":
        """Specialize some symbols to rational values, staying in the same ring."""
        subs = {name: self.ring(v) for name, v in point.items()}

        def sp(elem):
            expr = elem.as_expr().subs({self.ring.gen(n).as_expr(): v.as_expr() for n, v in subs.items()})
            return self.ring(expr) if not expr.is_Number else self.ring(to_fraction(expr))

        acc: dict = {}
        for (e, k), c in self._data.items():
            key = (sp(e), k)
            acc[key] = acc.get(key, self.ring.zero) + sp(c)
        return LogExpSum(self.ring, acc)

    def __repr__(self):
        if not self._data:
            return "0"
        parts = []
        for c, e, k in self.terms:
            s = f"({c.as_expr()})"
            if e != 0:
                s += f"*x**({e.as_expr()})"
            if k:
                s += f"*log(x)**{k}"
            parts.append(s)
        return " + ".join(parts)


def chi0_apply(f: LogExpSum) -> LogExpSum:
    """Apply x d/dx term by term."""
    ring = f.ring
    acc: dict = {}
    for (e, k), c in f.as_dict().items():
        if e != 0:
            acc[(e, k)] = acc.get((e, k), ring.zero) + e * c
        if k > 0:
            key = (e, k - 1)
            acc[key] = acc.get(key, ring.zero) + k * c
    return LogExpSum(ring, acc)


def euler_resolve(r, g: LogExpSum) -> LogExpSum:
    """The unique f in the LogExpSum class with x f' = r f + g and f(1) = 0.

    Resonance (exponent equal to ``r``) is decided by exact equality in the
    coefficient ring.
    """
    ring = g.ring
    r = ring(r)
    acc: dict = {}

    def add(e, k, c):
        acc[(e, k)] = acc.get((e, k), ring.zero) + c

    for (e, k), c in g.as_dict().items():
        if e == r:
            add(r, k + 1, c / (k + 1))
            continue
        d = e - r
        beta = c / d
        add(e, k, beta)
        for i in range(k, 0, -1):
            beta = -i * beta / d
            add(e, i - 1, beta)
        add(r, 0, -beta)
    return LogExpSum(ring, acc)


class Compensator:
    """z(x, mu) = x Ld(x, mu) for a residue expression ``mu`` of a ring."""

    def __init__(self, ring: CoeffRing, mu="mu1", index: int = 0):
        self.ring = ring
        self.mu = ring.gen(mu) if isinstance(mu, str) and mu in ring.names else ring(mu)
        self.index = index

    def to_logexp(self) -> LogExpSum:
        if self.mu == 0:
            return LogExpSum.monomial(self.ring, 1, 1, 1)
        return LogExpSum.from_terms(self.ring, [(1 / self.mu, 1 + self.mu, 0), (-1 / self.mu, 1, 0)])

    def evaluate(self, x, mu_value: float):
        x = np.asarray(x, dtype=float)
        return x * ld_eval(x, mu_value)


def ld_eval(y, beta, threshold: float = 1e-4, terms: int = 8):
    """Ld(y, beta) = (y^beta - 1)/beta, equal to log y at beta = 0.

    Uses the series sum beta^n (log y)^(n+1)/(n+1)! when |beta log y| is
    below ``threshold``; arrays broadcast.
    """
    y_arr = np.asarray(y, dtype=float)
    b_arr = np.asarray(beta, dtype=float)
    if np.any(~(y_arr > 0)):
        raise DomainError("Ld(y, beta) needs y > 0")
    L = np.log(y_arr)
    t = b_arr * L
    small = np.abs(t) < threshold
    series = np.zeros(np.broadcast(t, L).shape)
    term = np.ones_like(series)
    for n in range(terms):
        series = series + term / math.factorial(n + 1)
        term = term * t
    series = series * L
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = np.expm1(t) / np.where(small, 1.0, b_arr)
    out = np.where(small, series, closed)
    return out if out.ndim else float(out)
