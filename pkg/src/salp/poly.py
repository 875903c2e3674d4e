"""Exact multivariate polynomial arithmetic over arbitrary-precision rationals.

Coefficients are `fractions.Fraction` throughout; nothing in this module (or
in the modules built on it) ever rounds.  A polynomial stores one term per
dict entry, keyed by a dense exponent vector aligned with a shared
:class:`VarOrder`, so structural equality of term maps is semantic equality.

The deliberately small surface of ring operations is backed by exact
elimination machinery: Sylvester/Bareiss resultants, principal subresultant
coefficients from determinant windows, a subresultant polynomial remainder
sequence, and canonical Sturm sequences.  Everything downstream (real root
isolation, cylindrical decomposition, quantifier elimination) reduces to
these primitives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _int_gcd

from .errors import ParseError, StructureError

# The canonical rational scalar type.  Fraction already maintains the reduced,
# positive-denominator form required everywhere in this package.
Rational = Fraction

_Coeff = int | Fraction


@dataclass(frozen=True)
class VarOrder:
    """An ordered tuple of distinct variable names.

    Every polynomial carries a VarOrder; binary operations demand identical
    orders.  The order doubles as the projection order for the cylindrical
    machinery (earlier variables are eliminated last).
    """

    variables: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise StructureError(f"duplicate variable in order {self.variables}")

    @staticmethod
    def of(*names: str) -> "VarOrder":
        return VarOrder(tuple(names))

    def __len__(self) -> int:
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)

    def __contains__(self, name: str) -> bool:
        return name in self.variables

    def __getitem__(self, i: int) -> str:
        return self.variables[i]

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise StructureError(f"variable {name!r} not in order {self.variables}") from None

    def prefix(self, k: int) -> "VarOrder":
        return VarOrder(self.variables[:k])

    def suffix(self, k: int) -> "VarOrder":
        """The order with the first k variables removed."""
        return VarOrder(self.variables[k:])

    def extended(self, names: tuple[str, ...]) -> "VarOrder":
        return VarOrder(self.variables + tuple(names))


def _as_fraction(value: _Coeff) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise StructureError(f"not a rational scalar: {value!r}")


class Polynomial:
    """A multivariate polynomial with Fraction coefficients.

    Immutable by convention: `terms` is private state and never mutated after
    construction.  Zero coefficients are dropped eagerly, so `terms == {}`
    exactly when the polynomial is zero.
    """

    __slots__ = ("order", "terms", "_key")

    def __init__(self, order: VarOrder, terms: dict[tuple[int, ...], Fraction]):
        width = len(order)
        clean: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in terms.items():
            if len(expo) != width:
                raise StructureError(f"exponent {expo} does not match order of width {width}")
            coeff = _as_fraction(coeff)
            if coeff != 0:
                clean[tuple(expo)] = coeff
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_key", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(order: VarOrder) -> "Polynomial":
        return Polynomial(order, {})

    @staticmethod
    def const(order: VarOrder, value: _Coeff) -> "Polynomial":
        value = _as_fraction(value)
        if value == 0:
            return Polynomial.zero(order)
        return Polynomial(order, {(0,) * len(order): value})

    @staticmethod
    def variable(order: VarOrder, name: str) -> "Polynomial":
        expo = [0] * len(order)
        expo[order.index(name)] = 1
        return Polynomial(order, {tuple(expo): Fraction(1)})

    @staticmethod
    def monomial(order: VarOrder, expo: tuple[int, ...], coeff: _Coeff = 1) -> "Polynomial":
        return Polynomial(order, {tuple(expo): _as_fraction(coeff)})

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in expo) for expo in self.terms)

    def constant_value(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        if not self.is_constant():
            raise StructureError(f"not a constant: {self}")
        return next(iter(self.terms.values()))

    def vars_used(self) -> tuple[str, ...]:
        names = self.order.variables
        used = [False] * len(names)
        for expo in self.terms:
            for i, e in enumerate(expo):
                if e:
                    used[i] = True
        return tuple(n for n, u in zip(names, used) if u)

    def degree_in(self, var: str) -> int:
        """Degree in `var`; -1 for the zero polynomial."""
        if self.is_zero():
            return -1
        i = self.order.index(var)
        return max(expo[i] for expo in self.terms)

    def total_degree(self) -> int:
        if self.is_zero():
            return -1
        return max(sum(expo) for expo in self.terms)

    def main_variable(self) -> str | None:
        """The latest variable of the order that actually occurs, or None."""
        used = self.vars_used()
        if not used:
            return None
        return max(used, key=self.order.index)

    # -- arithmetic --------------------------------------------------------

    def _require_same_order(self, other: "Polynomial") -> None:
        if self.order != other.order:
            raise StructureError(
                f"variable order mismatch: {self.order.variables} vs {other.order.variables}"
            )

    def _coerce(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            self._require_same_order(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.const(self.order, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        terms = dict(self.terms)
        for expo, coeff in other.terms.items():
            terms[expo] = terms.get(expo, Fraction(0)) + coeff
        return Polynomial(self.order, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.order, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                terms[expo] = terms.get(expo, Fraction(0)) + c1 * c2
        return Polynomial(self.order, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise StructureError("polynomial powers must be non-negative integers")
        result = Polynomial.const(self.order, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: _Coeff) -> "Polynomial":
        c = _as_fraction(c)
        return Polynomial(self.order, {e: k * c for e, k in self.terms.items()})

    # -- equality / ordering ----------------------------------------------

    def key(self) -> tuple:
        if self._key is None:
            object.__setattr__(
                self, "_key", tuple(sorted(self.terms.items()))
            )
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            if isinstance(other, (int, Fraction)):
                return self.is_constant() and self.constant_value() == other
            return NotImplemented
        return self.order == other.order and self.terms == other.terms

    def __hash__(self):
        return hash((self.order, self.key()))

    def sort_key(self) -> tuple:
        """Deterministic ordering key: by total degree, then terms."""
        return (self.total_degree(), len(self.terms), self.key())

    # -- evaluation / substitution ------------------------------------------

    def evaluate(self, assign: dict[str, _Coeff]) -> Fraction:
        """Full evaluation; every occurring variable must be assigned."""
        missing = [v for v in self.vars_used() if v not in assign]
        if missing:
            raise StructureError(f"evaluate: missing assignment for {missing}")
        values = [
            _as_fraction(assign[v]) if v in assign else Fraction(0)
            for v in self.order
        ]
        total = Fraction(0)
        for expo, coeff in self.terms.items():
            term = coeff
            for val, e in zip(values, expo):
                if e:
                    term *= val ** e
            total += term
        return total

    def substitute(self, assign: dict[str, _Coeff]) -> "Polynomial":
        """Partial evaluation; unassigned variables stay symbolic."""
        positions = {self.order.index(v): _as_fraction(c) for v, c in assign.items()}
        terms: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in self.terms.items():
            new_expo = list(expo)
            for i, val in positions.items():
                e = expo[i]
                if e:
                    coeff = coeff * val ** e
                    new_expo[i] = 0
            if coeff != 0:
                key = tuple(new_expo)
                terms[key] = terms.get(key, Fraction(0)) + coeff
        return Polynomial(self.order, terms)

    def compose(self, assign: dict[str, "Polynomial"]) -> "Polynomial":
        """Substitute polynomials for variables (all over the same order)."""
        for q in assign.values():
            self._require_same_order(q)
        positions = {self.order.index(v): q for v, q in assign.items()}
        result = Polynomial.zero(self.order)
        for expo, coeff in self.terms.items():
            term = Polynomial.const(self.order, coeff)
            for i, e in enumerate(expo):
                if not e:
                    continue
                if i in positions:
                    term = term * positions[i] ** e
                else:
                    mono = [0] * len(self.order)
                    mono[i] = e
                    term = term * Polynomial.monomial(self.order, tuple(mono))
            result = result + term
        return result

    def reorder(self, new_order: VarOrder, rename: dict[str, str] | None = None) -> "Polynomial":
        """Re-express over another order, optionally renaming variables.

        Every occurring variable must land in `new_order`.
        """
        rename = rename or {}
        mapping: list[int | None] = []
        for v in self.order:
            target = rename.get(v, v)
            mapping.append(new_order.index(target) if target in new_order else None)
        terms: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in self.terms.items():
            new_expo = [0] * len(new_order)
            for i, e in enumerate(expo):
                if not e:
                    continue
                j = mapping[i]
                if j is None:
                    raise StructureError(
                        f"variable {self.order.variables[i]!r} does not map into {new_order.variables}"
                    )
                new_expo[j] += e
            key = tuple(new_expo)
            terms[key] = terms.get(key, Fraction(0)) + coeff
        return Polynomial(new_order, terms)

    # -- structure w.r.t. one variable --------------------------------------

    def coeffs_in(self, var: str) -> list["Polynomial"]:
        """Coefficients as polynomials in the remaining variables, ascending degree."""
        i = self.order.index(var)
        deg = self.degree_in(var)
        if deg < 0:
            return []
        buckets: list[dict[tuple[int, ...], Fraction]] = [dict() for _ in range(deg + 1)]
        for expo, coeff in self.terms.items():
            e = expo[i]
            rest = list(expo)
            rest[i] = 0
            buckets[e][tuple(rest)] = coeff
        return [Polynomial(self.order, b) for b in buckets]

    def leading_coeff_in(self, var: str) -> "Polynomial":
        coeffs = self.coeffs_in(var)
        if not coeffs:
            return Polynomial.zero(self.order)
        return coeffs[-1]

    def derivative(self, var: str) -> "Polynomial":
        i = self.order.index(var)
        terms: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in self.terms.items():
            e = expo[i]
            if not e:
                continue
            new_expo = list(expo)
            new_expo[i] = e - 1
            terms[tuple(new_expo)] = coeff * e
        return Polynomial(self.order, terms)

    # -- printing -----------------------------------------------------------

    def __str__(self) -> str:
        return poly_to_text(self)

    def __repr__(self) -> str:
        return f"Polynomial({poly_to_text(self)!r})"


# ---------------------------------------------------------------------------
# content and normalization


def _fraction_gcd(values: list[Fraction]) -> Fraction:
    num = 0
    den = 1
    for v in values:
        num = _int_gcd(num, abs(v.numerator))
        den = den * v.denominator // _int_gcd(den, v.denominator)
    if num == 0:
        return Fraction(0)
    return Fraction(num, den)


def content_free(p: Polynomial, var: str | None = None) -> Polynomial:
    """Divide out the rational content and normalize the sign.

    The result has coprime integer coefficients.  Sign normalization makes
    the leading coefficient with respect to `var` (itself a polynomial) have
    a positive leading rational; with `var=None` the polynomial's own leading
    term (in exponent order) is made positive.  Polynomial content is kept.
    """
    if p.is_zero():
        return p
    c = _fraction_gcd(list(p.terms.values()))
    q = p.scale(1 / c)
    if var is not None and p.degree_in(var) > 0:
        lead = q.leading_coeff_in(var)
    else:
        lead = q
    top = lead.terms[max(lead.terms)]
    if top < 0:
        q = -q
    return q


# ---------------------------------------------------------------------------
# exact division (used by fraction-free elimination)


def exact_div(p: Polynomial, q: Polynomial) -> Polynomial:
    """Exact polynomial division; raises StructureError if q does not divide p."""
    p._require_same_order(q)
    if q.is_zero():
        raise StructureError("exact_div by zero polynomial")
    if p.is_zero():
        return p
    q_lead = max(q.terms)
    q_lc = q.terms[q_lead]
    rem = dict(p.terms)
    out: dict[tuple[int, ...], Fraction] = {}
    while rem:
        lead = max(rem)
        diff = tuple(a - b for a, b in zip(lead, q_lead))
        if any(d < 0 for d in diff):
            raise StructureError("exact_div: division is not exact")
        c = rem[lead] / q_lc
        out[diff] = out.get(diff, Fraction(0)) + c
        for expo, coeff in q.terms.items():
            key = tuple(a + b for a, b in zip(expo, diff))
            val = rem.get(key, Fraction(0)) - c * coeff
            if val == 0:
                rem.pop(key, None)
            else:
                rem[key] = val
    return Polynomial(p.order, out)


def _det_bareiss(matrix: list[list[Polynomial]], order: VarOrder) -> Polynomial:
    """Exact determinant of a polynomial matrix (Bareiss elimination)."""
    n = len(matrix)
    if n == 0:
        return Polynomial.const(order, 1)
    m = [row[:] for row in matrix]
    sign = 1
    prev: Polynomial | None = None
    for k in range(n - 1):
        if m[k][k].is_zero():
            pivot_row = next((i for i in range(k + 1, n) if not m[i][k].is_zero()), None)
            if pivot_row is None:
                return Polynomial.zero(order)
            m[k], m[pivot_row] = m[pivot_row], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = exact_div(num, prev) if prev is not None else num
            m[i][k] = Polynomial.zero(order)
        prev = m[k][k]
    det = m[n - 1][n - 1]
    return -det if sign < 0 else det


# ---------------------------------------------------------------------------
# resultants and subresultants


def _check_positive_degree(p: Polynomial, var: str, who: str) -> int:
    d = p.degree_in(var)
    if d < 1:
        raise StructureError(f"{who}: argument must have positive degree in {var!r}")
    return d


def _sylvester_window(p: Polynomial, q: Polynomial, var: str, j: int) -> list[list[Polynomial]]:
    """Rows v^(n-j-1)p .. p, v^(m-j-1)q .. q over degree columns m+n-j-1 .. j."""
    m = p.degree_in(var)
    n = q.degree_in(var)
    pc = p.coeffs_in(var)  # ascending
    qc = q.coeffs_in(var)
    zero = Polynomial.zero(p.order)
    top = m + n - j - 1
    cols = list(range(top, j - 1, -1))
    rows: list[list[Polynomial]] = []
    for s in range(n - j - 1, -1, -1):  # rows of p first
        rows.append([pc[d - s] if 0 <= d - s <= m else zero for d in cols])
    for s in range(m - j - 1, -1, -1):
        rows.append([qc[d - s] if 0 <= d - s <= n else zero for d in cols])
    return rows


def resultant(p: Polynomial, q: Polynomial, var: str) -> Polynomial:
    """Resultant with respect to `var` (Sylvester determinant, rows of p first)."""
    p._require_same_order(q)
    _check_positive_degree(p, var, "resultant")
    _check_positive_degree(q, var, "resultant")
    rows = _sylvester_window(p, q, var, 0)
    return _det_bareiss(rows, p.order)


def principal_subresultant_coefficients(p: Polynomial, q: Polynomial, var: str) -> list[Polynomial]:
    """psc_j(p, q) for j = 0 .. min(deg p, deg q) - 1 (psc_0 is the resultant)."""
    p._require_same_order(q)
    m = p.degree_in(var)
    n = q.degree_in(var)
    if m < 1 or n < 1:
        raise StructureError("psc: both arguments need positive degree in the variable")
    out = []
    for j in range(min(m, n)):
        rows = _sylvester_window(p, q, var, j)
        out.append(_det_bareiss(rows, p.order))
    return out


def _pseudo_remainder(p: Polynomial, q: Polynomial, var: str) -> Polynomial:
    """prem(p, q): remainder of lc(q)^(dp-dq+1) * p modulo q, w.r.t. var."""
    dp = p.degree_in(var)
    dq = q.degree_in(var)
    if dq < 0:
        raise StructureError("pseudo-remainder by zero")
    lc_q = q.leading_coeff_in(var)
    e = dp - dq + 1
    r = p
    v = Polynomial.variable(p.order, var)
    while not r.is_zero() and r.degree_in(var) >= dq:
        dr = r.degree_in(var)
        lc_r = r.leading_coeff_in(var)
        r = r * lc_q - q * lc_r * v ** (dr - dq)
        e -= 1
    # normalize so exactly lc(q)^(dp-dq+1) multiplications were applied
    if e > 0:
        r = r * lc_q ** e
    return r


def subresultant_sequence(p: Polynomial, q: Polynomial, var: str) -> list[Polynomial]:
    """The subresultant polynomial remainder sequence starting (p, q).

    Requires deg(p) >= deg(q) in `var`.  A trailing zero is kept when the
    final pseudo-division comes out exact (it marks a non-trivial gcd); the
    sequence otherwise ends at the first constant remainder.
    """
    p._require_same_order(q)
    if p.is_zero():
        raise StructureError("subresultant_sequence: first argument is zero")
    if q.is_zero():
        return [p]
    if p.degree_in(var) < q.degree_in(var):
        raise StructureError("subresultant_sequence: expects deg(p) >= deg(q)")
    seq = [p, q]
    g = Polynomial.const(p.order, 1)
    h = Polynomial.const(p.order, 1)
    a, b = p, q
    while True:
        if b.degree_in(var) <= 0:
            break
        delta = a.degree_in(var) - b.degree_in(var)
        r = _pseudo_remainder(a, b, var)
        if r.is_zero():
            seq.append(r)
            break
        nxt = exact_div(r, g * h ** delta)
        seq.append(nxt)
        a, b = b, nxt
        g = a.leading_coeff_in(var)
        if delta > 0:
            h = exact_div(g ** delta, h ** (delta - 1)) if delta > 1 else g
    return seq


# ---------------------------------------------------------------------------
# univariate helpers (coefficient lists, ascending degree)


def univariate_coeffs(p: Polynomial, var: str) -> list[Fraction]:
    """Dense ascending coefficient list; p must involve no other variable."""
    extra = [v for v in p.vars_used() if v != var]
    if extra:
        raise StructureError(f"not univariate in {var!r}: also uses {extra}")
    i = p.order.index(var)
    deg = p.degree_in(var)
    if deg < 0:
        return []
    out = [Fraction(0)] * (deg + 1)
    for expo, coeff in p.terms.items():
        out[expo[i]] = coeff
    return out


def poly_from_coeffs(coeffs: list[Fraction], var: str, order: VarOrder | None = None) -> Polynomial:
    order = order or VarOrder.of(var)
    i = order.index(var)
    terms = {}
    for e, c in enumerate(coeffs):
        if c:
            expo = [0] * len(order)
            expo[i] = e
            terms[tuple(expo)] = Fraction(c)
    return Polynomial(order, terms)


def _u_trim(c: list[Fraction]) -> list[Fraction]:
    while c and c[-1] == 0:
        c.pop()
    return c


def u_degree(c: list[Fraction]) -> int:
    return len(c) - 1


def u_eval(c: list[Fraction], x: Fraction) -> Fraction:
    total = Fraction(0)
    for coeff in reversed(c):
        total = total * x + coeff
    return total


def u_derivative(c: list[Fraction]) -> list[Fraction]:
    return [c[i] * i for i in range(1, len(c))]


def u_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    """Dense product of univariate coefficient lists."""
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _u_trim(out)


def u_divmod(a: list[Fraction], b: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    if not b:
        raise StructureError("univariate division by zero")
    a = list(a)
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and _u_trim(a):
        if len(a) < len(b):
            break
        k = len(a) - len(b)
        f = a[-1] / b[-1]
        q[k] = f
        for i, coeff in enumerate(b):
            a[k + i] -= f * coeff
        _u_trim(a)
    return _u_trim(q), a


def _u_int_primitive(c: list[Fraction]) -> list[int]:
    """Rescale by a positive rational into coprime integer coefficients.

    The factor is positive, so every coefficient keeps its sign; sign-based
    reasoning (Sturm chains, interval evaluation) is unaffected.
    """
    c = _u_trim(list(c))
    if not c:
        return []
    den = 1
    for x in c:
        den = den * x.denominator // _int_gcd(den, x.denominator)
    ints = [x.numerator * (den // x.denominator) for x in c]
    g = 0
    for x in ints:
        g = _int_gcd(g, x)
    return [x // g for x in ints]


def _u_int_prim_rem(a: list[int], b: list[int]) -> list[int]:
    """Primitive remainder of a by b, matching the rational remainder's sign.

    Pseudo-division over the integers (scaling by the leading coefficient of
    b at each step) avoids the coefficient explosion of fraction-based
    Euclidean remainders; the accumulated scale factor is made positive and
    then divided out as content.
    """
    lc = b[-1]
    db = len(b) - 1
    r = list(a)
    negate = False
    while True:
        while r and r[-1] == 0:
            r.pop()
        if len(r) - 1 < db:
            break
        lead = r.pop()
        r = [x * lc for x in r]
        shift = len(r) - db
        for i in range(db):
            r[shift + i] -= lead * b[i]
        if lc < 0:
            negate = not negate
    if negate:
        r = [-x for x in r]
    g = 0
    for x in r:
        g = _int_gcd(g, x)
    return [x // g for x in r] if g else []


def u_gcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    """Monic gcd of univariate rational polynomials."""
    A = _u_int_primitive(a)
    B = _u_int_primitive(b)
    if len(A) < len(B):
        A, B = B, A
    while B:
        A, B = B, _u_int_prim_rem(A, B)
    if not A:
        return []
    lc = Fraction(A[-1])
    return [Fraction(x) / lc for x in A]


def u_squarefree(c: list[Fraction]) -> list[Fraction]:
    """The squarefree part p / gcd(p, p')."""
    if u_degree(c) <= 1:
        return list(c)
    g = u_gcd(c, u_derivative(c))
    if u_degree(g) < 1:
        return list(c)
    q, r = u_divmod(c, g)
    if _u_trim(list(r)):
        raise StructureError("squarefree division left a remainder")
    return q


def u_int_normalize(c: list[Fraction]) -> list[Fraction]:
    """Scale to coprime integer coefficients with positive leading one."""
    c = _u_trim(list(c))
    if not c:
        return c
    den = 1
    for x in c:
        den = den * x.denominator // _int_gcd(den, x.denominator)
    ints = [x * den for x in c]
    g = 0
    for x in ints:
        g = _int_gcd(g, abs(x.numerator))
    ints = [x / g for x in ints]
    if ints[-1] < 0:
        ints = [-x for x in ints]
    return [Fraction(x) for x in ints]


def u_sturm_chain(c: list[Fraction]) -> list[list[Fraction]]:
    """Sturm chain: p, p', then negated remainders, stopping at zero.

    Each negated remainder is rescaled by a positive constant (primitive
    integer form), which leaves every sign variation count unchanged while
    keeping coefficient growth polynomial.
    """
    chain = [_u_trim(list(c))]
    if u_degree(chain[0]) < 1:
        return chain
    chain.append(_u_trim(u_derivative(chain[0])))
    ints = [_u_int_primitive(chain[0]), _u_int_primitive(chain[1])]
    while ints[-1]:
        r = _u_int_prim_rem(ints[-2], ints[-1])
        if not r:
            break
        ints.append([-x for x in r])
        chain.append([Fraction(x) for x in ints[-1]])
    return chain


def _sign_variations(values: list[Fraction]) -> int:
    signs = [v for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def u_sturm_count(chain: list[list[Fraction]], a: Fraction, b: Fraction) -> int:
    """Number of distinct real roots in (a, b]; requires p(a) != 0."""
    va = _sign_variations([u_eval(c, a) for c in chain])
    vb = _sign_variations([u_eval(c, b) for c in chain])
    return va - vb


def u_count_all(chain: list[list[Fraction]]) -> int:
    """Number of distinct real roots on the whole line."""
    def at_inf(sign: int) -> list[Fraction]:
        out = []
        for c in chain:
            if not c:
                out.append(Fraction(0))
            else:
                lead = c[-1]
                d = len(c) - 1
                out.append(lead if (sign > 0 or d % 2 == 0) else -lead)
        return out

    return _sign_variations(at_inf(-1)) - _sign_variations(at_inf(+1))


def sturm_sequence(p: Polynomial) -> list[Polynomial]:
    """A Sturm sequence of a univariate polynomial.

    Later entries are positively rescaled negated remainders, so all sign
    variation counts agree with the classical sequence.
    """
    used = p.vars_used()
    if len(used) > 1:
        raise StructureError("sturm_sequence: polynomial is not univariate")
    if p.is_zero():
        raise StructureError("sturm_sequence: zero polynomial")
    var = used[0] if used else (p.order.variables[0] if len(p.order) else None)
    if var is None:
        return [p]
    chain = u_sturm_chain(univariate_coeffs(p, var))
    return [poly_from_coeffs(c, var, p.order) for c in chain]


# ---------------------------------------------------------------------------
# text form
#
# Grammar (round-trip stable with poly_to_text):
#   expr   := term (('+'|'-') term)*
#   term   := factor ('*' factor)*
#   factor := base ('^' INT)?
#   base   := INT ('/' INT)? | IDENT | '(' expr ')' | '-' factor

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9']*)|(?P<op>[-+*^()/]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos]!r} in polynomial")
            break
        pos = m.end()
        if m.group("int"):
            tokens.append(("int", m.group("int")))
        elif m.group("ident"):
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
    return tokens


class _PolyParser:
    def __init__(self, tokens: list[tuple[str, str]], order: VarOrder):
        self.tokens = tokens
        self.pos = 0
        self.order = order

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val!r}")

    def parse_expr(self) -> Polynomial:
        node = self.parse_term()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.parse_term()
                node = node + rhs if val == "+" else node - rhs
            else:
                return node

    def parse_term(self) -> Polynomial:
        node = self.parse_factor()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                node = node * self.parse_factor()
            else:
                return node

    def parse_factor(self) -> Polynomial:
        node = self.parse_base()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "int":
                raise ParseError("expected integer exponent after '^'")
            node = node ** int(val)
        return node

    def parse_base(self) -> Polynomial:
        kind, val = self.take()
        if kind == "int":
            num = int(val)
            kind2, val2 = self.peek()
            if kind2 == "op" and val2 == "/":
                self.take()
                kind3, val3 = self.take()
                if kind3 != "int":
                    raise ParseError("expected integer denominator")
                return Polynomial.const(self.order, Fraction(num, int(val3)))
            return Polynomial.const(self.order, num)
        if kind == "ident":
            if val not in self.order:
                raise ParseError(f"unknown variable {val!r}")
            return Polynomial.variable(self.order, val)
        if kind == "op" and val == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if kind == "op" and val == "-":
            return -self.parse_factor()
        if kind == "op" and val == "+":
            return self.parse_factor()
        raise ParseError(f"unexpected token {val!r} in polynomial")


def parse_polynomial(text: str, order: VarOrder | None = None) -> Polynomial:
    """Parse `2*x^2 - 3*x*y + 1/2` style text.

    With `order=None` the variables are collected in order of first
    appearance.
    """
    tokens = _tokenize(text)
    if order is None:
        seen: list[str] = []
        for kind, val in tokens:
            if kind == "ident" and val not in seen:
                seen.append(val)
        order = VarOrder(tuple(seen))
    parser = _PolyParser(tokens, order)
    if not tokens:
        raise ParseError("empty polynomial text")
    node = parser.parse_expr()
    if parser.pos != len(tokens):
        raise ParseError(f"trailing input in polynomial: {tokens[parser.pos:]}")
    return node


def _monomial_text(order: VarOrder, expo: tuple[int, ...], coeff: Fraction) -> str:
    parts = []
    for name, e in zip(order, expo):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    mag = abs(coeff)
    if not parts:
        return str(mag)
    if mag != 1:
        parts.insert(0, str(mag))
    return "*".join(parts)


def poly_to_text(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    # leading term first: sort by total degree, then exponent tuple, descending
    items = sorted(p.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)
    pieces = []
    for i, (expo, coeff) in enumerate(items):
        text = _monomial_text(p.order, expo, coeff)
        if i == 0:
            pieces.append(f"-{text}" if coeff < 0 else text)
        else:
            pieces.append(f"- {text}" if coeff < 0 else f"+ {text}")
    return " ".join(pieces)
