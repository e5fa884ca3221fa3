"""Hironaka division in local polynomial and truncated power-series rings.

The local order compares exponents by ``(L(m), m_1, ..., m_q)`` and the
*initial* exponent of a series is its smallest support element.  Division is
governed by the staircase of initial exponents of a standard basis: a monomial
lying in several cones is assigned to the first corner (in order) whose cone
contains it, and everything outside the staircase goes to the remainder.

Two modes are supported.  In polynomial mode (``precision=None``) the result is
exact whenever the division terminates, which it always does for monomial
ideals.  In truncated mode every monomial of total degree ``>= precision`` is
discarded, i.e. the computation takes place modulo the corresponding power of
the maximal ideal, and always terminates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

__all__ = [
    "MonomialOrder",
    "LocalPoly",
    "ExponentDiagram",
    "DivisionResult",
    "Ideal",
    "StationarityResult",
    "initial_exponent",
    "standard_basis",
    "diagram",
    "divide",
    "member",
    "chain_stationarity",
    "weighted_norm",
]

DEFAULT_PRECISION_MARGIN = 10
DEFAULT_STEP_BUDGET = 200_000


class MonomialOrder:
    """Order on N^q by (L(m), m_1, ..., m_q) with L(m) = sum w_j m_j, w_j > 0."""

    def __init__(self, nvars: int, weights: Sequence | None = None):
        if weights is None:
            weights = [1] * nvars
        if len(weights) != nvars:
            raise ValueError("one weight per variable")
        ws = tuple(Fraction(w) for w in weights)
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be positive")
        self.nvars = nvars
        self.weights = ws
        self._unit = all(w == 1 for w in ws)

    def L(self, m) -> Fraction:
        if self._unit:
            return Fraction(sum(m))
        return sum((w * e for w, e in zip(self.weights, m)), Fraction(0))

    def key(self, m):
        return (self.L(m), *m)

    def __eq__(self, other):
        return isinstance(other, MonomialOrder) and other.weights == self.weights

    def __hash__(self):
        return hash(self.weights)

    def __repr__(self):
        return f"MonomialOrder(weights={[str(w) for w in self.weights]})"


def _coerce_coeff(c):
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    return c


def _add_m(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub_m(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _divides(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


class LocalPoly:
    """Sparse polynomial in ``nvars`` variables, optionally truncated.

    With ``precision = P`` every monomial of total degree >= P is zero.
    Coefficients may be any exact field elements (Fraction, sympy field
    elements).
    """

    __slots__ = ("nvars", "precision", "_data")

    def __init__(self, nvars: int, data: Mapping | None = None, precision: int | None = None):
        self.nvars = nvars
        self.precision = precision
        clean = {}
        for m, c in (data or {}).items():
            m = tuple(int(e) for e in m)
            if len(m) != nvars or any(e < 0 for e in m):
                raise ValueError(f"bad exponent {m} for {nvars} variables")
            if precision is not None and sum(m) >= precision:
                continue
            c = _coerce_coeff(c)
            if c != 0:
                clean[m] = clean[m] + c if m in clean else c
                if clean[m] == 0:
                    del clean[m]
        self._data = clean

    @classmethod
    def monomial(cls, m, c=1, precision=None) -> "LocalPoly":
        return cls(len(m), {tuple(m): c}, precision)

    @classmethod
    def variable(cls, nvars: int, j: int, precision=None) -> "LocalPoly":
        m = [0] * nvars
        m[j] = 1
        return cls(nvars, {tuple(m): 1}, precision)

    @classmethod
    def constant(cls, nvars: int, c=1, precision=None) -> "LocalPoly":
        return cls(nvars, {(0,) * nvars: c}, precision)

    @property
    def terms(self) -> dict:
        return dict(self._data)

    def support(self):
        return list(self._data)

    def coefficient(self, m):
        return self._data.get(tuple(m), 0)

    def is_zero(self) -> bool:
        return not self._data

    def __bool__(self):
        return bool(self._data)

    def is_monomial(self) -> bool:
        return len(self._data) == 1

    def degree(self) -> int:
        return max((sum(m) for m in self._data), default=-1)

    def _prec(self, other):
        ps = [p for p in (self.precision, getattr(other, "precision", None)) if p is not None]
        return min(ps) if ps else None

    def _lift(self, other) -> "LocalPoly":
        if isinstance(other, LocalPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return LocalPoly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._lift(other)
        acc = dict(self._data)
        for m, c in other._data.items():
            acc[m] = acc[m] + c if m in acc else c
        return LocalPoly(self.nvars, acc, self._prec(other))

    __radd__ = __add__

    def __neg__(self):
        return LocalPoly(self.nvars, {m: -c for m, c in self._data.items()}, self.precision)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, LocalPoly):
            c = _coerce_coeff(other)
            return LocalPoly(self.nvars, {m: v * c for m, v in self._data.items()}, self.precision)
        prec = self._prec(other)
        acc: dict = {}
        for m1, c1 in self._data.items():
            d1 = sum(m1)
            for m2, c2 in other._data.items():
                if prec is not None and d1 + sum(m2) >= prec:
                    continue
                m = _add_m(m1, m2)
                acc[m] = acc[m] + c1 * c2 if m in acc else c1 * c2
        return LocalPoly(self.nvars, acc, prec)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = LocalPoly.constant(self.nvars, 1, self.precision)
        for _ in range(n):
            out = out * self
        return out

    def shift(self, m, c=1) -> "LocalPoly":
        """Multiply by c * alpha^m."""
        c = _coerce_coeff(c)
        return LocalPoly(self.nvars, {_add_m(k, m): v * c for k, v in self._data.items()}, self.precision)

    def truncate(self, precision: int | None) -> "LocalPoly":
        if precision is None:
            return self
        if self.precision is not None:
            precision = min(precision, self.precision)
        return LocalPoly(self.nvars, self._data, precision)

    def __eq__(self, other):
        if not isinstance(other, LocalPoly):
            try:
                other = self._lift(other)
            except Exception:
                return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def sorted_terms(self, order: MonomialOrder):
        return sorted(self._data.items(), key=lambda kv: order.key(kv[0]))

    def __repr__(self):
        if not self._data:
            return "0"
        parts = []
        for m, c in sorted(self._data.items()):
            mono = "*".join(f"a{j + 1}^{e}" if e > 1 else f"a{j + 1}" for j, e in enumerate(m) if e)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        s = " + ".join(parts)
        if self.precision is not None:
            s += f" + O({self.precision})"
        return s


def initial_exponent(f: LocalPoly, order: MonomialOrder):
    """Smallest support element of ``f`` in the local order."""
    if f.is_zero():
        raise ValueError("no initial exponent: the series is zero")
    return min(f.support(), key=order.key)


def _initial(f: LocalPoly, order: MonomialOrder):
    m = initial_exponent(f, order)
    return m, f.coefficient(m)


@dataclass(frozen=True)
class ExponentDiagram:
    """Staircase N(J) = union of corner cones, and its Hironaka partition."""

    corners: tuple
    order: MonomialOrder

    def cell(self, m) -> int | None:
        """Index i with m in Delta_i, or None when m lies in the complement."""
        for i, c in enumerate(self.corners):
            if _divides(c, m):
                return i
        return None

    def in_staircase(self, m) -> bool:
        return self.cell(m) is not None

    def complement(self, max_degree: int) -> list:
        """Monomials of degree <= max_degree outside the staircase."""
        q = self.order.nvars
        out = []
        for d in range(max_degree + 1):
            for m in _monomials_of_degree(q, d):
                if self.cell(m) is None:
                    out.append(m)
        return out

    def cell_members(self, i: int, max_degree: int) -> list:
        q = self.order.nvars
        return [m for d in range(max_degree + 1) for m in _monomials_of_degree(q, d) if self.cell(m) == i]


def _monomials_of_degree(q: int, d: int) -> Iterator[tuple]:
    if q == 0:
        if d == 0:
            yield ()
        return
    if q == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _monomials_of_degree(q - 1, d - first):
            yield (first, *rest)


@dataclass
class DivisionResult:
    """Outcome of a division; quotients are indexed like ``basis``."""

    basis: tuple
    quotients: tuple
    remainder: LocalPoly
    diagram: ExponentDiagram
    precision: int | None
    exact: bool = True
    attained_precision: int | None = None


class _BudgetExceeded(Exception):
    def __init__(self, degree):
        self.degree = degree


def _reduce(f: LocalPoly, basis: Sequence[LocalPoly], order: MonomialOrder, budget: int):
    """Core division loop against a basis whose initial exponents are corners."""
    heads = [_initial(a, order) for a in basis]
    corners = [h[0] for h in heads]
    q = [dict() for _ in basis]
    rem: dict = {}
    work = dict(f.terms)
    prec = f.precision
    for a in basis:
        if a.precision is not None:
            prec = a.precision if prec is None else min(prec, a.precision)
    steps = 0
    while work:
        steps += 1
        if steps > budget:
            raise _BudgetExceeded(min(sum(m) for m in work))
        m = min(work, key=order.key)
        c = work.pop(m)
        i = next((j for j, cm in enumerate(corners) if _divides(cm, m)), None)
        if i is None:
            rem[m] = c
            continue
        shift = _sub_m(m, corners[i])
        factor = c / heads[i][1]
        q[i][shift] = q[i].get(shift, 0) + factor
        for mm, cc in basis[i].terms.items():
            if mm == corners[i]:
                continue
            t = _add_m(mm, shift)
            if prec is not None and sum(t) >= prec:
                continue
            v = work.get(t, 0) - factor * cc
            if v == 0:
                work.pop(t, None)
            else:
                work[t] = v
    nv = f.nvars
    quotients = tuple(LocalPoly(nv, qi, prec) for qi in q)
    return quotients, LocalPoly(nv, rem, prec), prec


def _canonical_sort(basis, order):
    return sorted(basis, key=lambda a: order.key(initial_exponent(a, order)))


def standard_basis(
    generators: Sequence[LocalPoly],
    order: MonomialOrder,
    precision: int | None = None,
    budget: int = DEFAULT_STEP_BUDGET,
) -> tuple[tuple, int | None]:
    """Reduced standard basis of the ideal generated by ``generators``.

    Completion adjoins remainders of S-series until every pair reduces to
    zero, then each element is replaced by ``alpha^m - NF(alpha^m)`` with
    ``m`` its initial exponent.  The result is canonical: it depends only on
    the ideal, the order and the precision.  Returns ``(basis, precision)``;
    the precision is chosen automatically when polynomial mode cannot
    terminate (non-monomial generators).
    """
    gens = [g for g in generators if not g.is_zero()]
    if precision is None:
        ps = [g.precision for g in gens if g.precision is not None]
        if ps:
            precision = min(ps)
        elif any(not g.is_monomial() for g in gens):
            precision = max(g.degree() for g in gens) + DEFAULT_PRECISION_MARGIN
    gens = [g.truncate(precision) for g in gens]
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        return (), precision
    nv = gens[0].nvars
    basis: list[LocalPoly] = []
    for g in _canonical_sort(gens, order):
        if basis:
            _, r, _ = _reduce(g, _minimal(basis, order), order, budget)
        else:
            r = g
        if not r.is_zero():
            basis.append(r)
    pairs = [(i, j) for i in range(len(basis)) for j in range(i)]
    while pairs:
        i, j = pairs.pop(0)
        mi, ci = _initial(basis[i], order)
        mj, cj = _initial(basis[j], order)
        lcm = tuple(max(a, b) for a, b in zip(mi, mj))
        if precision is not None and sum(lcm) >= precision:
            continue
        if all(min(a, b) == 0 for a, b in zip(mi, mj)) and basis[i].is_monomial() and basis[j].is_monomial():
            continue
        s = basis[i].shift(_sub_m(lcm, mi), cj) - basis[j].shift(_sub_m(lcm, mj), ci)
        if s.is_zero():
            continue
        _, r, _ = _reduce(s, _minimal(basis, order), order, budget)
        if not r.is_zero():
            basis.append(r)
            n = len(basis) - 1
            pairs.extend((n, k) for k in range(n))
    minimal = _minimal(basis, order)
    reduced = []
    for a in minimal:
        m = initial_exponent(a, order)
        mono = LocalPoly.monomial(m, 1, precision)
        if len(mono.support()) == 0:
            continue
        _, nf, _ = _reduce(mono, minimal, order, budget)
        reduced.append(mono - nf)
    reduced = _canonical_sort(reduced, order)
    return tuple(LocalPoly(nv, r.terms, precision) for r in reduced), precision


def _minimal(basis, order):
    """Elements whose initial exponent is minimal for divisibility; one per corner."""
    heads = [(initial_exponent(a, order), a) for a in basis]
    chosen = {}
    for m, a in heads:
        if any(_divides(other, m) and other != m for other, _ in heads):
            continue
        chosen.setdefault(m, a)
    return [chosen[m] for m in sorted(chosen, key=order.key)]


def diagram(generators: Sequence[LocalPoly], order: MonomialOrder, precision: int | None = None) -> ExponentDiagram:
    """Staircase of the ideal generated by ``generators`` (after completion)."""
    basis, _ = standard_basis(generators, order, precision)
    return ExponentDiagram(tuple(initial_exponent(a, order) for a in basis), order)


def divide(
    f: LocalPoly,
    basis: Sequence[LocalPoly],
    order: MonomialOrder,
    precision: int | None = None,
    budget: int = DEFAULT_STEP_BUDGET,
) -> DivisionResult:
    """Divide ``f`` by the reduced standard basis of ``basis``.

    Returns quotients for that standard basis (exposed as ``result.basis``)
    with ``f = sum Q_i a_i + R`` exactly, or modulo the precision ideal.
    """
    sb, prec = standard_basis(basis, order, precision if precision is not None else f.precision, budget)
    if prec is not None:
        f = f.truncate(prec)
    dg = ExponentDiagram(tuple(initial_exponent(a, order) for a in sb), order)
    if not sb:
        return DivisionResult((), (), f, dg, prec)
    try:
        quotients, rem, p = _reduce(f, sb, order, budget)
    except _BudgetExceeded as exc:
        partial = divide(f.truncate(exc.degree), basis, order, exc.degree, budget)
        partial.exact = False
        partial.attained_precision = exc.degree
        return partial
    return DivisionResult(sb, quotients, rem, dg, p)


def member(f: LocalPoly, basis: Sequence[LocalPoly], order: MonomialOrder, precision: int | None = None) -> bool:
    """True iff the remainder against the completed basis vanishes."""
    if f.is_zero():
        return True
    return divide(f, basis, order, precision).remainder.is_zero()


class Ideal:
    """Ideal of a local ring given by generators; equality is mutual membership."""

    def __init__(self, generators: Iterable[LocalPoly], nvars: int, order: MonomialOrder | None = None,
                 precision: int | None = None, names: Sequence[str] | None = None):
        self.generators = tuple(g for g in generators if not g.is_zero())
        self.nvars = nvars
        self.order = order or MonomialOrder(nvars)
        self.names = tuple(names) if names else tuple(f"a{j + 1}" for j in range(nvars))
        self._sb = None
        self._precision = precision

    @property
    def basis(self) -> tuple:
        if self._sb is None:
            self._sb, self._precision = standard_basis(self.generators, self.order, self._precision)
        return self._sb

    @property
    def precision(self):
        self.basis
        return self._precision

    def is_zero(self) -> bool:
        return not self.basis

    def is_unit(self) -> bool:
        return any(initial_exponent(a, self.order) == (0,) * self.nvars for a in self.basis)

    def corners(self) -> tuple:
        return tuple(initial_exponent(a, self.order) for a in self.basis)

    def contains(self, f: LocalPoly) -> bool:
        f = f.truncate(self.precision)
        if f.is_zero():
            return True
        if not self.basis:
            return False
        _, r, _ = _reduce(f, self.basis, self.order, DEFAULT_STEP_BUDGET)
        return r.is_zero()

    def issubset(self, other: "Ideal") -> bool:
        return all(other.contains(g) for g in self.generators)

    def __le__(self, other):
        return self.issubset(other)

    def __eq__(self, other):
        if not isinstance(other, Ideal):
            return NotImplemented
        return self.issubset(other) and other.issubset(self)

    def __hash__(self):
        return hash(self.corners())

    def describe(self) -> str:
        if self.is_zero():
            return "(0)"
        if self.is_unit():
            return "(1)"
        parts = []
        for a in self.basis:
            m = initial_exponent(a, self.order)
            mono = "*".join(f"{n}^{e}" if e > 1 else n for n, e in zip(self.names, m) if e)
            parts.append(mono if a.is_monomial() else f"{mono}+...")
        return "(" + ", ".join(parts) + ")"

    def __repr__(self):
        return f"Ideal{self.describe()}"


@dataclass
class StationarityResult:
    index: int | None
    checked: int
    window: int
    strict_increases: list = field(default_factory=list)

    @property
    def stabilized(self) -> bool:
        return self.index is not None

    @property
    def status(self) -> str:
        return "stabilized" if self.stabilized else "not stabilized"


def chain_stationarity(ideals: Iterable, N_max: int, window: int = 3) -> StationarityResult:
    """Least n with I_n = I_{n+1} = ... = I_{n+window}, scanning indices <= N_max.

    Items need ``issubset``.  A finite sequence counts as continued by its
    last member.  Raises ValueError when the chain is not increasing.
    """
    seen: list = []
    it = iter(ideals)
    exhausted = False
    for n in range(N_max + 1):
        try:
            seen.append(next(it))
        except StopIteration:
            exhausted = True
            break
    if not seen:
        raise ValueError("empty chain")
    equal_next = []
    for n in range(len(seen) - 1):
        if not seen[n].issubset(seen[n + 1]):
            raise ValueError(f"chain not increasing at index {n}")
        equal_next.append(seen[n + 1].issubset(seen[n]))
    strict = [n for n, eq in enumerate(equal_next) if not eq]
    last = len(seen) - 1
    for n in range(len(seen)):
        top = n + window
        if top > last and not exhausted:
            break
        if all(equal_next[j] for j in range(n, min(top, last))):
            return StationarityResult(n, len(seen), window, strict)
    return StationarityResult(None, len(seen), window, strict)


def weighted_norm(f: LocalPoly, weights: Sequence, sigma: float) -> float:
    """sum |c_m| sigma^L(m) for float-convertible coefficients."""
    total = 0.0
    for m, c in f.terms.items():
        L = sum(float(w) * e for w, e in zip(weights, m))
        total += abs(float(c)) * sigma**L
    return total
