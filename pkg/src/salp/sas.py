"""Semi-algebraic systems: sign conditions, conjunctions, finite unions.

A basic system is a conjunction of polynomial sign conditions over a shared
variable order; a semi-algebraic system is a finite disjunction of basic
systems (empty disjunction = empty set).  Operations keep the
disjunction-of-conjunctions shape; the only simplification performed is
constant folding and duplicate removal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, StructureError
from .poly import Polynomial, Rational, VarOrder, parse_polynomial, poly_to_text
from .realalg import SamplePoint, sign_at


class Rel(enum.Enum):
    """Sign relation against zero."""

    EQ0 = "="
    NE0 = "!="
    GT0 = ">"
    GE0 = ">="
    LT0 = "<"
    LE0 = "<="

    @property
    def symbol(self) -> str:
        return self.value

    def negated(self) -> "Rel":
        return _NEGATION[self]

    def flipped(self) -> "Rel":
        """The relation satisfied by -p whenever p satisfies this one."""
        return _FLIP[self]

    def holds_for_sign(self, sign: int) -> bool:
        if self is Rel.EQ0:
            return sign == 0
        if self is Rel.NE0:
            return sign != 0
        if self is Rel.GT0:
            return sign > 0
        if self is Rel.GE0:
            return sign >= 0
        if self is Rel.LT0:
            return sign < 0
        return sign <= 0


_NEGATION = {
    Rel.EQ0: Rel.NE0,
    Rel.NE0: Rel.EQ0,
    Rel.GT0: Rel.LE0,
    Rel.LE0: Rel.GT0,
    Rel.LT0: Rel.GE0,
    Rel.GE0: Rel.LT0,
}

_FLIP = {
    Rel.EQ0: Rel.EQ0,
    Rel.NE0: Rel.NE0,
    Rel.GT0: Rel.LT0,
    Rel.LT0: Rel.GT0,
    Rel.GE0: Rel.LE0,
    Rel.LE0: Rel.GE0,
}


@dataclass(frozen=True)
class SignCondition:
    """poly <rel> 0."""

    poly: Polynomial
    rel: Rel

    def constant_verdict(self) -> bool | None:
        """True/False when the condition involves no variables, else None."""
        if not self.poly.is_constant():
            return None
        c = self.poly.constant_value()
        return self.rel.holds_for_sign((c > 0) - (c < 0))

    def holds_at(self, pt: SamplePoint, budget: int = 64) -> bool:
        return self.rel.holds_for_sign(sign_at(self.poly, pt, budget))

    def negated(self) -> "SignCondition":
        return SignCondition(self.poly, self.rel.negated())

    def key(self) -> tuple:
        return (self.poly.key(), self.rel.name)

    def __str__(self) -> str:
        return f"{poly_to_text(self.poly)} {self.rel.symbol} 0"


class BasicSystem:
    """A conjunction of sign conditions; an empty conjunction is TRUE.

    Construction folds constant conditions and removes duplicates; a
    constant-false condition marks the whole system false (`is_false`).
    """

    __slots__ = ("order", "conditions", "is_false")

    def __init__(self, order: VarOrder, conditions: Iterable[SignCondition] = ()):
        object.__setattr__(self, "order", order)
        kept: list[SignCondition] = []
        seen: set[tuple] = set()
        false = False
        for c in conditions:
            if c.poly.order != order:
                raise StructureError("condition over a different variable order")
            verdict = c.constant_verdict()
            if verdict is True:
                continue
            if verdict is False:
                false = True
                kept = []
                break
            if c.key() in seen:
                continue
            seen.add(c.key())
            kept.append(c)
        object.__setattr__(self, "conditions", tuple(kept))
        object.__setattr__(self, "is_false", false)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("BasicSystem is immutable")

    @property
    def is_true(self) -> bool:
        return not self.is_false and not self.conditions

    def holds_at(self, pt: SamplePoint, budget: int = 64) -> bool:
        if self.is_false:
            return False
        return all(c.holds_at(pt, budget) for c in self.conditions)

    def with_conditions(self, extra: Iterable[SignCondition]) -> "BasicSystem":
        return BasicSystem(self.order, self.conditions + tuple(extra))

    def key(self) -> tuple:
        if self.is_false:
            return ("FALSE",)
        return tuple(sorted(c.key() for c in self.conditions))

    def polynomials(self) -> list[Polynomial]:
        return [c.poly for c in self.conditions]

    def __str__(self) -> str:
        if self.is_false:
            return "FALSE"
        if not self.conditions:
            return "TRUE"
        return " && ".join(str(c) for c in self.conditions)

    def __repr__(self) -> str:
        return f"BasicSystem({self})"


class SemiAlgebraicSystem:
    """A finite union of basic systems; the empty union is the empty set."""

    __slots__ = ("order", "systems")

    def __init__(self, order: VarOrder, systems: Iterable[BasicSystem] = ()):
        object.__setattr__(self, "order", order)
        kept: list[BasicSystem] = []
        seen: set[tuple] = set()
        for b in systems:
            if b.order != order:
                raise StructureError("basic system over a different variable order")
            if b.is_false:
                continue
            if b.key() in seen:
                continue
            seen.add(b.key())
            kept.append(b)
        object.__setattr__(self, "systems", tuple(kept))

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("SemiAlgebraicSystem is immutable")

    @staticmethod
    def empty(order: VarOrder) -> "SemiAlgebraicSystem":
        return SemiAlgebraicSystem(order, ())

    @staticmethod
    def true(order: VarOrder) -> "SemiAlgebraicSystem":
        return SemiAlgebraicSystem(order, (BasicSystem(order, ()),))

    @staticmethod
    def of(order: VarOrder, *conditions: SignCondition) -> "SemiAlgebraicSystem":
        return SemiAlgebraicSystem(order, (BasicSystem(order, conditions),))

    @property
    def is_empty_syntactic(self) -> bool:
        return not self.systems

    @property
    def is_true_syntactic(self) -> bool:
        return any(b.is_true for b in self.systems)

    def holds_at(self, pt: SamplePoint, budget: int = 64) -> bool:
        return any(b.holds_at(pt, budget) for b in self.systems)

    def all_polynomials(self) -> list[Polynomial]:
        out: list[Polynomial] = []
        seen: set[tuple] = set()
        for b in self.systems:
            for p in b.polynomials():
                if p.key() not in seen:
                    seen.add(p.key())
                    out.append(p)
        return out

    def __str__(self) -> str:
        if not self.systems:
            return "EMPTY"
        return " || ".join(
            f"({b})" if len(self.systems) > 1 and len(b.conditions) > 1 else str(b)
            for b in self.systems
        )

    def __repr__(self) -> str:
        return f"SemiAlgebraicSystem({self})"


# ---------------------------------------------------------------------------
# set operations


def conj(a: SemiAlgebraicSystem, b: SemiAlgebraicSystem) -> SemiAlgebraicSystem:
    """Intersection, distributing over the two disjunct sequences."""
    if a.order != b.order:
        raise StructureError("conj: variable orders differ")
    out = []
    for x in a.systems:
        for y in b.systems:
            out.append(x.with_conditions(y.conditions))
    return SemiAlgebraicSystem(a.order, out)


def disj(a: SemiAlgebraicSystem, b: SemiAlgebraicSystem) -> SemiAlgebraicSystem:
    if a.order != b.order:
        raise StructureError("disj: variable orders differ")
    return SemiAlgebraicSystem(a.order, a.systems + b.systems)


def negate(a: SemiAlgebraicSystem) -> SemiAlgebraicSystem:
    """Complement, re-normalized to a disjunction of conjunctions."""
    out = SemiAlgebraicSystem.true(a.order)
    for b in a.systems:
        if b.is_false:
            continue
        complement = SemiAlgebraicSystem(
            a.order, [BasicSystem(a.order, (c.negated(),)) for c in b.conditions]
        )
        out = conj(out, complement)
    return out


def specialize(
    a: SemiAlgebraicSystem, assign: Mapping[str, Rational | int]
) -> SemiAlgebraicSystem:
    """Substitute rational values for a prefix of the variables."""
    if not assign:
        return a
    prefix = a.order.variables[: len(assign)]
    if set(prefix) != set(assign):
        raise StructureError("specialize: assigned variables must form a prefix")
    values = {v: Fraction(assign[v]) for v in prefix}
    suffix = VarOrder(a.order.variables[len(assign):])
    out = []
    for b in a.systems:
        conds = []
        for c in b.conditions:
            p = c.poly.substitute(values)
            conds.append(SignCondition(p.reorder(suffix), c.rel))
        out.append(BasicSystem(suffix, conds))
    return SemiAlgebraicSystem(suffix, out)


def eliminate_linear_equalities(
    b: BasicSystem, candidates: Sequence[str]
) -> tuple[BasicSystem, dict[str, Polynomial]]:
    """Solve equalities linear in a candidate variable with constant leading
    coefficient, substituting the solution everywhere.

    Returns the reduced system plus the solved assignments; substitution is an
    equivalence (the leading coefficient is a nonzero rational), so the
    reduced system with the assignments has the same zero set.
    """
    conditions = list(b.conditions)
    solutions: dict[str, Polynomial] = {}
    remaining = [v for v in candidates if v in b.order]
    progress = True
    while progress:
        progress = False
        for idx, c in enumerate(conditions):
            if c.rel is not Rel.EQ0:
                continue
            for v in remaining:
                if c.poly.degree_in(v) != 1:
                    continue
                lead = c.poly.leading_coeff_in(v)
                if not lead.is_constant():
                    continue
                a = lead.constant_value()
                rest = c.poly - lead * Polynomial.variable(b.order, v)
                sol = rest * (Fraction(-1) / a)
                conditions = [
                    SignCondition(other.poly.compose({v: sol}), other.rel)
                    for j, other in enumerate(conditions)
                    if j != idx
                ]
                for u in list(solutions):
                    solutions[u] = solutions[u].compose({v: sol})
                solutions[v] = sol
                remaining.remove(v)
                progress = True
                break
            if progress:
                break
    return BasicSystem(b.order, conditions), solutions


# ---------------------------------------------------------------------------
# text form


_REL_TOKENS = ("<=", ">=", "!=", "==", "=", "<", ">")
_REL_BY_TOKEN = {
    "=": Rel.EQ0,
    "==": Rel.EQ0,
    "!=": Rel.NE0,
    ">": Rel.GT0,
    ">=": Rel.GE0,
    "<": Rel.LT0,
    "<=": Rel.LE0,
}


def parse_condition(text: str, order: VarOrder) -> SignCondition:
    """`lhs <rel> rhs`, normalized to `lhs - rhs <rel> 0`."""
    for tok in _REL_TOKENS:
        idx = text.find(tok)
        if idx < 0:
            continue
        lhs, rhs = text[:idx], text[idx + len(tok):]
        if not lhs.strip() or not rhs.strip():
            raise ParseError(f"incomplete condition: {text!r}")
        p = parse_polynomial(lhs, order) - parse_polynomial(rhs, order)
        return SignCondition(p, _REL_BY_TOKEN[tok])
    raise ParseError(f"no relation in condition: {text!r}")


def parse_system(text: str, order: VarOrder) -> SemiAlgebraicSystem:
    """`cond && cond || cond` with && binding tighter than ||."""
    text = text.strip()
    if not text or text.upper() == "EMPTY":
        return SemiAlgebraicSystem.empty(order)
    if text.upper() == "TRUE":
        return SemiAlgebraicSystem.true(order)
    systems = []
    for chunk in text.split("||"):
        chunk = chunk.strip()
        if chunk.startswith("(") and chunk.endswith(")"):
            chunk = chunk[1:-1]
        if chunk.upper().strip() == "TRUE":
            systems.append(BasicSystem(order, ()))
            continue
        conds = [parse_condition(c.strip(), order) for c in chunk.split("&&")]
        systems.append(BasicSystem(order, conds))
    return SemiAlgebraicSystem(order, systems)


def system_to_text(s: SemiAlgebraicSystem) -> str:
    return str(s)
