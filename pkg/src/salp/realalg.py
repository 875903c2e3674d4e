"""Real algebraic numbers: isolation, refinement, comparison, sign evaluation.

A real algebraic number is held as a squarefree integer-normalized defining
polynomial plus an open rational isolating interval containing exactly one
of its roots; rational numbers collapse the interval to a point.  All
decisions in this module are exact:

* one algebraic coordinate: zero tests go through gcd + Sturm counting and
  nonzero signs through interval refinement (which terminates);
* several algebraic coordinates: the value is pinned down as a root of an
  iterated resultant, which turns the zero test into "which isolated root of
  a rational polynomial does the shrinking evaluation box trap".

`PrecisionExhausted` is reachable only when the iterated resultant
degenerates to zero, or as a safety cap on refinement rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _int_gcd

from .errors import PrecisionExhausted, StructureError
from .poly import (
    Polynomial,
    VarOrder,
    poly_from_coeffs,
    resultant,
    u_degree,
    u_divmod,
    u_eval,
    u_gcd,
    u_int_normalize,
    u_mul,
    u_sturm_chain,
    u_sturm_count,
    u_squarefree,
    univariate_coeffs,
)

# Safety cap for loops that are mathematically guaranteed to terminate; a trip
# indicates a broken invariant rather than a hard input.
_SAFETY_ROUNDS = 4096


class RealAlgebraicNumber:
    """An exact real number: root of `defining` isolated by (lo, hi).

    lo == hi exactly when the number is rational (and then equals lo).  For
    irrational numbers the defining polynomial is squarefree with integer
    coefficients, does not vanish at lo or hi, and changes sign across the
    interval.
    """

    __slots__ = ("coeffs", "var", "lo", "hi", "_chain")

    def __init__(self, coeffs: tuple[Fraction, ...], var: str, lo: Fraction, hi: Fraction):
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "lo", Fraction(lo))
        object.__setattr__(self, "hi", Fraction(hi))
        object.__setattr__(self, "_chain", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("RealAlgebraicNumber is immutable")

    @staticmethod
    def from_rational(value: Fraction | int, var: str = "t") -> "RealAlgebraicNumber":
        value = Fraction(value)
        coeffs = (Fraction(-value.numerator), Fraction(value.denominator))
        return RealAlgebraicNumber(coeffs, var, value, value)

    # -- queries -------------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.lo == self.hi

    @property
    def value(self) -> Fraction:
        if not self.is_rational:
            raise StructureError("not a rational number; refine or compare instead")
        return self.lo

    @property
    def defining(self) -> Polynomial:
        return poly_from_coeffs(list(self.coeffs), self.var)

    def chain(self) -> list[list[Fraction]]:
        if self._chain is None:
            object.__setattr__(self, "_chain", u_sturm_chain(list(self.coeffs)))
        return self._chain

    def __repr__(self) -> str:
        if self.is_rational:
            return f"RealAlgebraicNumber({self.lo})"
        return f"RealAlgebraicNumber(root of {self.defining} in ({self.lo}, {self.hi}))"

    # -- refinement ------------------------------------------------------------

    def bisected(self) -> "RealAlgebraicNumber":
        """One bisection step; collapses to a rational on an exact midpoint hit."""
        if self.is_rational:
            return self
        mid = (self.lo + self.hi) / 2
        if u_eval(list(self.coeffs), mid) == 0:
            return RealAlgebraicNumber.from_rational(mid, self.var)
        sign_lo = 1 if u_eval(list(self.coeffs), self.lo) > 0 else -1
        sign_mid = 1 if u_eval(list(self.coeffs), mid) > 0 else -1
        if sign_lo != sign_mid:
            out = RealAlgebraicNumber(self.coeffs, self.var, self.lo, mid)
        else:
            out = RealAlgebraicNumber(self.coeffs, self.var, mid, self.hi)
        # the chain depends only on the defining polynomial, so carry it over
        object.__setattr__(out, "_chain", self._chain)
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return compare_with_rational(self, Fraction(other)) == 0
        if isinstance(other, RealAlgebraicNumber):
            return compare(self, other) == 0
        return NotImplemented

    def __hash__(self):
        # hash rationals compatibly with Fraction; irrational numbers hash by
        # defining data after a light canonical refinement
        if self.is_rational:
            return hash(self.lo)
        return hash(self.coeffs)

    def __lt__(self, other):
        if isinstance(other, (int, Fraction)):
            return compare_with_rational(self, Fraction(other)) < 0
        return compare(self, other) < 0

    def __le__(self, other):
        if isinstance(other, (int, Fraction)):
            return compare_with_rational(self, Fraction(other)) <= 0
        return compare(self, other) <= 0

    def __gt__(self, other):
        if isinstance(other, (int, Fraction)):
            return compare_with_rational(self, Fraction(other)) > 0
        return compare(self, other) > 0

    def __ge__(self, other):
        if isinstance(other, (int, Fraction)):
            return compare_with_rational(self, Fraction(other)) >= 0
        return compare(self, other) >= 0


Coord = Fraction | RealAlgebraicNumber


def refine(a: RealAlgebraicNumber, width: Fraction) -> RealAlgebraicNumber:
    """Shrink the isolating interval to at most `width`."""
    width = Fraction(width)
    if width <= 0:
        raise StructureError("refine: width must be positive")
    while not a.is_rational and a.hi - a.lo > width:
        a = a.bisected()
    return a


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Some low-complexity rational strictly inside (lo, hi)."""
    if not lo < hi:
        raise StructureError("simplest_between: empty interval")
    if lo < 0 < hi:
        return Fraction(0)
    if hi <= 0:
        return -simplest_between(-hi, -lo)
    fl = lo.numerator // lo.denominator
    if lo == fl:
        if fl + 1 < hi:
            return Fraction(fl + 1)
        k = int(1 / (hi - fl)) + 1
        return fl + Fraction(1, k)
    if hi > fl + 1:
        return Fraction(fl + 1)
    inner = simplest_between(1 / (hi - fl), 1 / (lo - fl))
    return fl + 1 / inner


# ---------------------------------------------------------------------------
# root isolation


def _cauchy_bound(coeffs: list[Fraction]) -> Fraction:
    lead = abs(coeffs[-1])
    worst = max((abs(c) for c in coeffs[:-1]), default=Fraction(0))
    return 1 + worst / lead


def _deflate(coeffs: list[Fraction], root: Fraction) -> list[Fraction]:
    """Exact synthetic division by (x - root)."""
    out: list[Fraction] = [Fraction(0)] * (len(coeffs) - 1)
    acc = Fraction(0)
    for i in range(len(coeffs) - 1, 0, -1):
        acc = acc * root + coeffs[i]
        out[i - 1] = acc
    assert acc * root + coeffs[0] == 0, "deflation by a non-root"
    return out


def _detect_rational(
    coeffs: list[Fraction],
    lo: Fraction,
    hi: Fraction,
    chain: list[list[Fraction]] | None = None,
) -> Fraction | None:
    """Probe the isolating interval for a rational root of small height."""
    if chain is None:
        chain = u_sturm_chain(coeffs)
    for _ in range(8):
        candidate = simplest_between(lo, hi)
        if u_eval(coeffs, candidate) == 0:
            return candidate
        mid = (lo + hi) / 2
        if u_eval(coeffs, mid) == 0:
            return mid
        if u_sturm_count(chain, lo, mid) == 1:
            hi = mid
        else:
            lo = mid
    return None


def isolate_roots(p: Polynomial) -> list[RealAlgebraicNumber]:
    """All real roots of a univariate polynomial, in increasing order."""
    if p.is_zero():
        raise StructureError("isolate_roots: zero polynomial")
    used = p.vars_used()
    if len(used) > 1:
        raise StructureError(f"isolate_roots: not univariate ({used})")
    if not used:
        return []
    var = used[0]
    coeffs = u_int_normalize(u_squarefree(univariate_coeffs(p, var)))
    return _isolate_coeffs(coeffs, var)


def _isolate_coeffs(coeffs: list[Fraction], var: str) -> list[RealAlgebraicNumber]:
    rational_roots: list[Fraction] = []
    while u_degree(coeffs) >= 1:
        chain = u_sturm_chain(coeffs)
        bound = _cauchy_bound(coeffs)
        total = u_sturm_count(chain, -bound, bound)
        intervals: list[tuple[Fraction, Fraction]] = []
        hit: Fraction | None = None
        stack = [(-bound, bound, total)]
        while stack:
            a, b, cnt = stack.pop()
            if cnt == 0:
                continue
            mid = (a + b) / 2
            if u_eval(coeffs, mid) == 0:
                hit = mid
                break
            if cnt == 1:
                # exactly one root, strictly inside once midpoint splitting
                # has moved b off any root (b is never a root here: the
                # initial bound is strict and later b's are checked midpoints)
                left = u_sturm_count(chain, a, mid)
                if left == 1:
                    intervals.append((a, mid))
                else:
                    intervals.append((mid, b))
                continue
            left = u_sturm_count(chain, a, mid)
            stack.append((a, mid, left))
            stack.append((mid, b, cnt - left))
        if hit is not None:
            rational_roots.append(hit)
            coeffs = u_int_normalize(_deflate(coeffs, hit))
            continue
        roots: list[RealAlgebraicNumber] = [
            RealAlgebraicNumber.from_rational(r, var) for r in rational_roots
        ]
        for a, b in intervals:
            r = _detect_rational(coeffs, a, b, chain)
            if r is not None:
                roots.append(RealAlgebraicNumber.from_rational(r, var))
            else:
                roots.append(RealAlgebraicNumber(tuple(coeffs), var, a, b))
        roots.sort(key=_sort_key)
        return roots
    return sorted(
        (RealAlgebraicNumber.from_rational(r, var) for r in rational_roots),
        key=_sort_key,
    )


class _sort_key:
    """Exact comparison wrapper for sorting algebraic numbers."""

    __slots__ = ("item",)

    def __init__(self, item: RealAlgebraicNumber):
        self.item = item

    def __lt__(self, other: "_sort_key") -> bool:
        return compare(self.item, other.item) < 0


# ---------------------------------------------------------------------------
# comparison

LT, EQ, GT = -1, 0, 1


def compare_with_rational(a: RealAlgebraicNumber, c: Fraction) -> int:
    c = Fraction(c)
    if a.is_rational:
        v = a.value
        return LT if v < c else GT if v > c else EQ
    if c <= a.lo:
        return GT
    if c >= a.hi:
        return LT
    if u_eval(list(a.coeffs), c) == 0:
        return EQ
    return LT if u_sturm_count(a.chain(), a.lo, c) == 1 else GT


def compare(a: RealAlgebraicNumber, b: RealAlgebraicNumber) -> int:
    """Exact three-way comparison of algebraic numbers."""
    if b.is_rational:
        return compare_with_rational(a, b.value) if not a.is_rational else (
            LT if a.value < b.value else GT if a.value > b.value else EQ
        )
    if a.is_rational:
        return -compare_with_rational(b, a.value)
    g = u_gcd(list(a.coeffs), list(b.coeffs))
    g_chain = u_sturm_chain(g) if u_degree(g) >= 1 else None
    for _ in range(_SAFETY_ROUNDS):
        if a.hi <= b.lo:
            return LT
        if b.hi <= a.lo:
            return GT
        if g_chain is not None:
            overlap_lo = max(a.lo, b.lo)
            overlap_hi = min(a.hi, b.hi)
            # endpoints are non-roots of both defining polynomials, hence of g
            if u_sturm_count(g_chain, overlap_lo, overlap_hi) >= 1:
                return EQ
            g_chain = None  # common roots ruled out; separation must succeed
        a = a.bisected()
        b = b.bisected()
        if a.is_rational:
            return -compare_with_rational(b, a.value)
        if b.is_rational:
            return compare_with_rational(a, b.value)
    raise PrecisionExhausted("compare: refinement failed to separate")  # pragma: no cover


def coord_compare(a: Coord, b: Coord) -> int:
    """Three-way comparison across Fraction / algebraic mixtures."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return LT if a < b else GT if a > b else EQ
    if isinstance(a, Fraction):
        return -compare_with_rational(b, a)
    if isinstance(b, Fraction):
        return compare_with_rational(a, b)
    return compare(a, b)


def coord_as_fraction(c: Coord) -> Fraction | None:
    if isinstance(c, Fraction):
        return c
    if c.is_rational:
        return c.value
    return None


def floor_coord(c: Coord) -> int:
    """Exact floor of a coordinate."""
    if isinstance(c, Fraction):
        return c.numerator // c.denominator
    if c.is_rational:
        v = c.value
        return v.numerator // v.denominator
    a = c
    while a.hi - a.lo >= 1:
        a = a.bisected()
        if a.is_rational:
            v = a.value
            return v.numerator // v.denominator
    lo_floor = a.lo.numerator // a.lo.denominator
    # the interval is narrower than 1, so at most one integer sits inside
    k = lo_floor + 1
    if not a.lo < k < a.hi:
        return lo_floor
    if u_eval(list(a.coeffs), Fraction(k)) == 0:
        return k
    sign_lo = 1 if u_eval(list(a.coeffs), a.lo) > 0 else -1
    sign_k = 1 if u_eval(list(a.coeffs), Fraction(k)) > 0 else -1
    return lo_floor if sign_lo != sign_k else k


def ceil_coord(c: Coord) -> int:
    f = floor_coord(c)
    if isinstance(c, Fraction):
        return f if c == f else f + 1
    return f if compare_with_rational(c, Fraction(f)) == 0 else f + 1


# ---------------------------------------------------------------------------
# sample points


@dataclass(frozen=True)
class SamplePoint:
    """Exact coordinates for a prefix of a variable order."""

    order: VarOrder
    coords: tuple[Coord, ...]

    def __post_init__(self):
        if len(self.coords) > len(self.order):
            raise StructureError("sample point longer than its variable order")
        cleaned = []
        for c in self.coords:
            if isinstance(c, RealAlgebraicNumber) and c.is_rational:
                cleaned.append(c.value)
            elif isinstance(c, int):
                cleaned.append(Fraction(c))
            else:
                cleaned.append(c)
        object.__setattr__(self, "coords", tuple(cleaned))

    def assignment(self) -> dict[str, Coord]:
        return dict(zip(self.order.variables, self.coords))

    def extended(self, coord: Coord) -> "SamplePoint":
        return SamplePoint(self.order, self.coords + (coord,))

    def rational_part(self) -> dict[str, Fraction]:
        return {
            v: c
            for v, c in self.assignment().items()
            if isinstance(c, Fraction)
        }

    def algebraic_part(self) -> dict[str, RealAlgebraicNumber]:
        return {
            v: c
            for v, c in self.assignment().items()
            if isinstance(c, RealAlgebraicNumber)
        }


# ---------------------------------------------------------------------------
# interval arithmetic (exact rational endpoints)

_Iv = tuple[Fraction, Fraction]


def _iv_add(a: _Iv, b: _Iv) -> _Iv:
    return (a[0] + b[0], a[1] + b[1])


def _iv_mul(a: _Iv, b: _Iv) -> _Iv:
    products = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(products), max(products))


def _iv_pow(a: _Iv, e: int) -> _Iv:
    if e == 0:
        return (Fraction(1), Fraction(1))
    out = a
    for _ in range(e - 1):
        out = _iv_mul(out, a)
    return out


def _interval_eval(
    p: Polynomial, exact: dict[str, Fraction], boxes: dict[str, _Iv]
) -> _Iv:
    total = (Fraction(0), Fraction(0))
    for expo, coeff in p.terms.items():
        iv = (coeff, coeff)
        for var, e in zip(p.order, expo):
            if not e:
                continue
            if var in exact:
                v = exact[var] ** e
                iv = _iv_mul(iv, (v, v))
            else:
                iv = _iv_mul(iv, _iv_pow(boxes[var], e))
        total = _iv_add(total, iv)
    return total


# ---------------------------------------------------------------------------
# sign evaluation


def _u_interval_horner(c: list[Fraction], lo: Fraction, hi: Fraction) -> _Iv:
    """Interval enclosure of a univariate polynomial over [lo, hi]."""
    total = (Fraction(0), Fraction(0))
    for coeff in reversed(c):
        total = _iv_mul(total, (lo, hi))
        total = (total[0] + coeff, total[1] + coeff)
    return total


def _u_sign_one(c: list[Fraction], a: RealAlgebraicNumber) -> int:
    """Exact sign of a univariate polynomial at one algebraic number."""
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    if len(c) <= 1:
        v = c[0] if c else Fraction(0)
        return (v > 0) - (v < 0)
    if a.is_rational:
        v = u_eval(c, a.value)
        return (v > 0) - (v < 0)
    g = u_gcd(c, list(a.coeffs))
    if u_degree(g) >= 1 and u_sturm_count(u_sturm_chain(g), a.lo, a.hi) >= 1:
        return 0
    for _ in range(_SAFETY_ROUNDS):
        lo, hi = _u_interval_horner(c, a.lo, a.hi)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        a = a.bisected()
        if a.is_rational:
            v = u_eval(c, a.value)
            return (v > 0) - (v < 0)
    raise PrecisionExhausted("single-coordinate sign refinement failed")  # pragma: no cover


def _sign_one_algebraic(
    q: Polynomial, var: str, a: RealAlgebraicNumber
) -> int:
    return _u_sign_one(univariate_coeffs(q, var), a)


# ---------------------------------------------------------------------------
# polynomials on the fiber over one algebraic coordinate
#
# An element of the coefficient field Q(alpha) is held as a rational
# coefficient list reduced modulo the defining polynomial of alpha; only its
# value at alpha matters.  The defining polynomial need not be irreducible:
# every degree decision below tests the value at alpha itself, so residues
# that vanish at alpha without being zero are handled correctly.

_Residue = list[Fraction]
_FiberPoly = list[_Residue]


def _variation_count(signs: list[int]) -> int:
    nonzero = [s for s in signs if s]
    return sum(1 for a, b in zip(nonzero, nonzero[1:]) if a != b)


class AlgebraicFiber:
    """A bivariate polynomial restricted to the fiber over one algebraic base.

    Wraps q(alpha, y): exact degree, sign at rational y, Sturm root counts on
    rational intervals, and signs at isolated algebraic points, with all
    coefficient arithmetic carried out as residues modulo the defining
    polynomial of alpha.  This sidesteps iterated resultants entirely.
    """

    __slots__ = ("alpha", "var", "_mod", "_reps", "_sturm", "_common")

    def __init__(self, q: Polynomial, base_var: str, alpha: RealAlgebraicNumber, var: str):
        if alpha.is_rational:
            raise StructureError("fiber base is rational; substitute it instead")
        extra = [v for v in q.vars_used() if v not in (base_var, var)]
        if extra:
            raise StructureError(f"fiber polynomial uses extra variables {extra}")
        self.alpha = alpha
        self.var = var
        self._mod = list(alpha.coeffs)
        reps: _FiberPoly = []
        for coeff in q.coeffs_in(var):
            _, rep = u_divmod(univariate_coeffs(coeff, base_var), self._mod)
            reps.append(rep)
        self._reps = self._strip(reps)
        self._sturm: list[_FiberPoly] | None = None
        self._common: dict[tuple, list[_FiberPoly] | None] = {}

    # -- residue helpers ------------------------------------------------------

    def _rmul(self, a: _Residue, b: _Residue) -> _Residue:
        _, r = u_divmod(u_mul(a, b), self._mod)
        return r

    def _strip(self, reps: _FiberPoly) -> _FiberPoly:
        """Drop leading coefficients whose value at alpha is zero."""
        reps = list(reps)
        while reps and _u_sign_one(reps[-1], self.alpha) == 0:
            reps.pop()
        return reps

    @staticmethod
    def _primitive(reps: _FiberPoly) -> _FiberPoly:
        """Rescale the whole element by one positive rational (integer, coprime)."""
        den = 1
        num = 0
        for rep in reps:
            for x in rep:
                den = den * x.denominator // _int_gcd(den, x.denominator)
                num = _int_gcd(num, x.numerator)
        if not num:
            return reps
        scale = Fraction(den, num)
        return [[x * scale for x in rep] for rep in reps]

    def _pseudo_rem(self, a: _FiberPoly, b: _FiberPoly, signed: bool) -> _FiberPoly:
        """Primitive pseudo-remainder of a by b over the base field.

        With `signed`, the result keeps the sign of the exact remainder
        (scaled by a positive value), as Sturm chain construction requires;
        otherwise the sign is unspecified, which is enough for gcds.
        """
        lc = b[-1]
        lc_sign = _u_sign_one(lc, self.alpha) if signed else 1
        db = len(b) - 1
        r = [list(rep) for rep in a]
        negate = False
        while len(r) - 1 >= db:
            lead = r.pop()
            if not lead:
                continue
            r = [self._rmul(rep, lc) for rep in r]
            shift = len(r) - db
            for i in range(db):
                prod = self._rmul(lead, b[i])
                tgt = r[shift + i]
                if len(prod) > len(tgt):
                    tgt.extend([Fraction(0)] * (len(prod) - len(tgt)))
                for j, x in enumerate(prod):
                    tgt[j] -= x
                while tgt and tgt[-1] == 0:
                    tgt.pop()
            if lc_sign < 0:
                negate = not negate
        while r and not r[-1]:
            r.pop()
        if negate:
            r = [[-x for x in rep] for rep in r]
        return self._primitive(self._strip(r))

    # -- evaluation -------------------------------------------------------------

    @staticmethod
    def _eval_residue(reps: _FiberPoly, t: Fraction) -> _Residue:
        acc: _Residue = []
        for rep in reversed(reps):
            acc = [x * t for x in acc]
            if len(rep) > len(acc):
                acc.extend([Fraction(0)] * (len(rep) - len(acc)))
            for i, x in enumerate(rep):
                acc[i] += x
        return acc

    def _sign_of_element(self, reps: _FiberPoly, t: Fraction) -> int:
        return _u_sign_one(self._eval_residue(reps, t), self.alpha)

    # -- queries ----------------------------------------------------------------

    def degree(self) -> int:
        """Exact degree of q(alpha, y) in y; -1 for the zero polynomial."""
        return len(self._reps) - 1

    def sign_at_rational(self, t: Fraction) -> int:
        if not self._reps:
            return 0
        return self._sign_of_element(self._reps, Fraction(t))

    def _chain_of(self, reps: _FiberPoly) -> list[_FiberPoly]:
        chain = [reps]
        if len(reps) - 1 >= 1:
            deriv = self._strip([[x * i for x in rep] for i, rep in enumerate(reps)][1:])
            chain.append(deriv)
            while chain[-1]:
                nxt = self._pseudo_rem(chain[-2], chain[-1], signed=True)
                if not nxt:
                    break
                chain.append([[-x for x in rep] for rep in nxt])
        return chain

    def chain(self) -> list[_FiberPoly]:
        if self._sturm is None:
            self._sturm = self._chain_of(self._reps)
        return self._sturm

    def count_in(self, lo: Fraction, hi: Fraction) -> int:
        """Distinct fiber roots in (lo, hi]; the value at lo must be nonzero."""
        chain = self.chain()
        at_lo = [self._sign_of_element(el, lo) for el in chain]
        if at_lo[0] == 0:
            raise StructureError("count_in: interval endpoint is a fiber root")
        at_hi = [self._sign_of_element(el, hi) for el in chain]
        return _variation_count(at_lo) - _variation_count(at_hi)

    def _common_root_chain(self, coeffs: tuple[Fraction, ...]) -> list[_FiberPoly] | None:
        """Sturm data for gcd(fiber polynomial, given rational polynomial).

        None when the gcd is constant, i.e. no common roots exist.
        """
        key = tuple(coeffs)
        if key not in self._common:
            a = self._reps
            b = self._strip([[Fraction(c)] if c else [] for c in coeffs])
            while b:
                a, b = b, self._pseudo_rem(a, b, signed=False)
            self._common[key] = self._chain_of(a) if len(a) - 1 >= 1 else None
        return self._common[key]

    def sign_at_root(self, r: RealAlgebraicNumber) -> int:
        """Exact sign of q(alpha, r) for an isolated algebraic number r."""
        if not self._reps:
            return 0
        if r.is_rational:
            return self.sign_at_rational(r.value)
        if len(self._reps) == 1:
            return _u_sign_one(self._reps[0], self.alpha)
        # zero test: r is a fiber root iff it is a root of the gcd of the
        # fiber polynomial with r's defining polynomial.  Roots of that gcd
        # are roots of the defining polynomial, and r's interval isolates r
        # among those, so counting inside the interval decides membership.
        h_chain = self._common_root_chain(r.coeffs)
        if h_chain is not None:
            at_lo = [self._sign_of_element(el, r.lo) for el in h_chain]
            at_hi = [self._sign_of_element(el, r.hi) for el in h_chain]
            if _variation_count(at_lo) - _variation_count(at_hi) >= 1:
                return 0
        # nonzero: shrink the interval until the fiber polynomial has no root
        # on it, then read the constant sign off a rational endpoint
        for _ in range(_SAFETY_ROUNDS):
            s_lo = self.sign_at_rational(r.lo)
            if s_lo != 0 and self.count_in(r.lo, r.hi) == 0:
                return s_lo
            r = r.bisected()
            if r.is_rational:
                return self.sign_at_rational(r.value)
        raise PrecisionExhausted("fiber sign refinement failed")  # pragma: no cover


def _value_resultant(q: Polynomial, algebraic: dict[str, RealAlgebraicNumber]) -> Polynomial | None:
    """A nonzero univariate polynomial vanishing at q(point), or None."""
    value_var = "_value"
    while value_var in q.order:
        value_var += "_"
    big = q.order.extended((value_var,))
    e = Polynomial.variable(big, value_var) - q.reorder(big)
    for var, a in algebraic.items():
        if e.degree_in(var) < 1:
            continue
        d = poly_from_coeffs(list(a.coeffs), var, big)
        e = resultant(d, e, var)
        if e.is_zero():
            return None
    if e.degree_in(value_var) < 1:
        return None
    return poly_from_coeffs(
        u_int_normalize(u_squarefree(univariate_coeffs(e.reorder(VarOrder.of(value_var)), value_var))),
        value_var,
    )


def _sign_boxed_quick(
    q: Polynomial, algebraic: dict[str, RealAlgebraicNumber], rounds: int
) -> int | None:
    """Bounded interval refinement; None when the sign stays unresolved."""
    boxes = {v: (a.lo, a.hi) for v, a in algebraic.items()}
    live = dict(algebraic)
    for _ in range(rounds):
        lo, hi = _interval_eval(q, {}, boxes)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        for v in list(live):
            live[v] = live[v].bisected()
            a = live[v]
            boxes[v] = (a.lo, a.lo) if a.is_rational else (a.lo, a.hi)
    return None


def sign_at(p: Polynomial, pt: SamplePoint, budget: int = 64) -> int:
    """Exact sign of p at the sample point (-1, 0, +1).

    Total for points with at most two algebraic coordinates (one resolved by
    gcd plus Sturm counting, two by Sturm chains over the base coordinate's
    field).  With three or more the value is certified against the roots of
    an iterated resultant; `PrecisionExhausted` is raised only if that
    resultant degenerates or the refinement budget runs out.
    """
    assign = pt.assignment()
    missing = [v for v in p.vars_used() if v not in assign]
    if missing:
        raise StructureError(f"sign_at: unassigned variables {missing}")
    q = p.substitute(pt.rational_part())
    algebraic = {
        v: a for v, a in pt.algebraic_part().items() if v in q.vars_used()
    }
    if not algebraic:
        c = q.constant_value()
        return (c > 0) - (c < 0)
    if len(algebraic) == 1:
        (var, a), = algebraic.items()
        return _sign_one_algebraic(q, var, a)

    quick = _sign_boxed_quick(q, algebraic, rounds=8)
    if quick is not None:
        return quick
    if len(algebraic) == 2:
        (va, aa), (vb, ab) = sorted(
            algebraic.items(), key=lambda kv: q.order.index(kv[0])
        )
        # residue arithmetic is cheapest over the lower-degree base
        if len(ab.coeffs) < len(aa.coeffs):
            (va, aa), (vb, ab) = (vb, ab), (va, aa)
        return AlgebraicFiber(q, va, aa, vb).sign_at_root(ab)

    witness = _value_resultant(q, algebraic)
    if witness is None:
        return _sign_boxed(q, algebraic, budget, certified=False)
    roots = isolate_roots(witness)
    boxes = {v: (a.lo, a.hi) for v, a in algebraic.items()}
    live = dict(algebraic)
    for _ in range(budget * len(algebraic) + 8):
        lo, hi = _interval_eval(q, {}, boxes)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        inside = [
            r
            for r in roots
            if compare_with_rational(r, lo) >= 0 and compare_with_rational(r, hi) <= 0
        ]
        if inside and all(r.is_rational and r.value == 0 for r in inside):
            return 0
        for v in list(live):
            live[v] = live[v].bisected()
            a = live[v]
            boxes[v] = (a.lo, a.lo) if a.is_rational else (a.lo, a.hi)
    raise PrecisionExhausted(
        f"sign_at: {len(algebraic)} algebraic coordinates unresolved after budget {budget}"
    )


def _sign_boxed(
    q: Polynomial,
    algebraic: dict[str, RealAlgebraicNumber],
    budget: int,
    certified: bool,
) -> int:
    boxes = {v: (a.lo, a.hi) for v, a in algebraic.items()}
    live = dict(algebraic)
    for _ in range(budget * len(algebraic) + 8):
        lo, hi = _interval_eval(q, {}, boxes)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        for v in list(live):
            live[v] = live[v].bisected()
            a = live[v]
            boxes[v] = (a.lo, a.lo) if a.is_rational else (a.lo, a.hi)
    raise PrecisionExhausted(
        "sign_at: zero test undecidable (degenerate certificate) within budget"
    )
