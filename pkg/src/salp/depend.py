"""Dependence sets for self-dependences of a perfect nest.

A dependence pair is two iteration instances of the same statement touching
the same array cell, at least one of them writing.  For the access pair
(write g0, access g_i) the set of such pairs is carved out of the space
(params, source copy, destination copy) by: both copies in the loop domain,
source lexicographically before destination, and the address equation.  The
address equation is oriented per kind: RAW and WAW equate g0(src) with
g_i(dst) / g0(dst); WAR equates g_i(src) with g0(dst), since there the read
happens first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .cad import CadConfig, DEFAULT_CONFIG, build_cad, cells_satisfying
from .errors import BudgetExceeded, StructureError
from .loopir import LoopProgram, PerfectNest, Statement, loop_conditions
from .oracle import DependenceKind
from .poly import Polynomial, VarOrder
from .sas import (
    BasicSystem,
    Rel,
    SemiAlgebraicSystem,
    SignCondition,
    eliminate_linear_equalities,
    specialize,
)

SRC_SUFFIX = "_src"
DST_SUFFIX = "_dst"


@dataclass(frozen=True)
class DependenceEdge:
    kind: DependenceKind
    access_index: int
    ds: SemiAlgebraicSystem
    nest_index: int = 0
    empty_real: bool | None = None

    @property
    def absent(self) -> bool:
        return bool(self.empty_real)


@dataclass(frozen=True)
class DependenceGraph:
    nodes: tuple[Statement, ...]
    edges: tuple[DependenceEdge, ...]

    def present_edges(self) -> tuple[DependenceEdge, ...]:
        return tuple(e for e in self.edges if not e.absent)


def copies_order(nest: PerfectNest) -> VarOrder:
    """(params, source copy, destination copy) with suffixed loop variables."""
    names = list(nest.params.names)
    loop_vars = nest.loop_vars()
    for suffix in (SRC_SUFFIX, DST_SUFFIX):
        for v in loop_vars:
            names.append(v + suffix)
    if len(set(names)) != len(names):
        raise StructureError("loop or parameter names collide with copy suffixes")
    return VarOrder(tuple(names))


def _renamed_domain(nest: PerfectNest, combined: VarOrder, suffix: str):
    rename = {v: v + suffix for v in nest.loop_vars()}
    base = nest.order()
    return [
        SignCondition(c.poly.reorder(combined, rename), c.rel)
        for c in loop_conditions(nest, base)
    ]


def build_ds(
    nest: PerfectNest, i: int, transposed: bool = False
) -> SemiAlgebraicSystem:
    """The dependence system for the access pair (write, access i).

    i = 0 pairs the write with itself; i >= 1 picks the i-th read.  With
    `transposed` the address equation reads g_i(src) = g0(dst), the shape a
    write-after-read pair has.
    """
    write = nest.stmt.write
    if i == 0:
        other = write
    else:
        if not 1 <= i <= len(nest.stmt.reads):
            raise StructureError(f"access index {i} out of range")
        other = nest.stmt.reads[i - 1]
        if other.array != write.array:
            raise StructureError(
                f"accesses name different arrays ({write.array} vs {other.array})"
            )
    if len(other.indices) != len(write.indices):
        raise StructureError("accesses to the same array differ in rank")
    combined = copies_order(nest)
    src_first, dst_second = (other, write) if transposed else (write, other)
    common: list[SignCondition] = []
    if nest.params.names:
        for b in nest.params.constraint.systems:
            # parameter constraints are shared by both copies
            common.extend(
                SignCondition(c.poly.reorder(combined), c.rel) for c in b.conditions
            )
    common.extend(_renamed_domain(nest, combined, SRC_SUFFIX))
    common.extend(_renamed_domain(nest, combined, DST_SUFFIX))
    src_rename = {v: v + SRC_SUFFIX for v in nest.loop_vars()}
    dst_rename = {v: v + DST_SUFFIX for v in nest.loop_vars()}
    for a, b in zip(src_first.indices, dst_second.indices):
        eq = a.reorder(combined, src_rename) - b.reorder(combined, dst_rename)
        common.append(SignCondition(eq, Rel.EQ0))
    systems = []
    for k, var in enumerate(nest.loop_vars()):
        conds = list(common)
        for j in range(k):
            w = nest.loop_vars()[j]
            p = Polynomial.variable(combined, w + SRC_SUFFIX) - Polynomial.variable(
                combined, w + DST_SUFFIX
            )
            conds.append(SignCondition(p, Rel.EQ0))
        p = Polynomial.variable(combined, var + SRC_SUFFIX) - Polynomial.variable(
            combined, var + DST_SUFFIX
        )
        conds.append(SignCondition(p, Rel.LT0))
        systems.append(BasicSystem(combined, tuple(conds)))
    return SemiAlgebraicSystem(combined, systems)


# ---------------------------------------------------------------------------
# emptiness over the reals


def is_empty_real(
    ds: SemiAlgebraicSystem, config: CadConfig = DEFAULT_CONFIG
) -> bool:
    """True iff the system has no real solution.

    Each disjunct is first shrunk by substituting away variables pinned by
    equations that are linear with a constant leading coefficient, then
    decided by a decomposition of the surviving polynomials.
    """
    for b in ds.systems:
        if b.is_false:
            continue
        reduced, _ = eliminate_linear_equalities(b, ds.order.variables)
        if reduced.is_false:
            continue
        if not reduced.conditions:
            return False
        used: list[str] = []
        for c in reduced.conditions:
            for v in c.poly.vars_used():
                if v not in used:
                    used.append(v)
        if not used:
            # constant conditions were already folded away
            return False
        sub_order = VarOrder(tuple(v for v in ds.order if v in used))
        conds = tuple(
            SignCondition(c.poly.reorder(sub_order), c.rel) for c in reduced.conditions
        )
        tree = build_cad([c.poly for c in conds], sub_order, config)
        target = SemiAlgebraicSystem(sub_order, [BasicSystem(sub_order, conds)])
        if cells_satisfying(tree, target):
            return False
    return True


# ---------------------------------------------------------------------------
# integer points at fixed parameters


def integer_points_at(
    ds: SemiAlgebraicSystem,
    n_values: Mapping[str, int],
    bound: int = 64,
    limit: int | None = None,
    node_budget: int = 500_000,
) -> list[tuple[int, ...]]:
    """Integer solutions of ds at fixed parameters, coordinates in order.

    Enumerates the non-parameter variables in order, narrowing each variable's
    range with every condition that has become linear in it, and pruning on
    every condition that has become constant.  Raises when the search tree
    exceeds node_budget, which is what an unbounded domain degenerates to.
    """
    for name in n_values:
        if name not in ds.order:
            raise StructureError(f"unknown parameter {name!r}")
    fixed = specialize(ds, {k: Fraction(v) for k, v in n_values.items()})
    rest = tuple(v for v in ds.order if v not in n_values)
    found: list[tuple[int, ...]] = []
    budget = [node_budget]

    def admissible_range(
        conds, assigned: dict[str, Fraction], var: str
    ) -> tuple[int, int, list]:
        lo, hi = -bound, bound
        remaining = []
        for c in conds:
            unknown = [v for v in c.poly.vars_used() if v not in assigned]
            if not unknown:
                if not c.rel.holds_for_sign(_sign(c.poly.evaluate(assigned))):
                    return (1, 0, [])
                continue
            if unknown != [var]:
                remaining.append(c)
                continue
            q = c.poly.substitute(assigned)
            if q.degree_in(var) != 1:
                remaining.append(c)
                continue
            coeffs = q.coeffs_in(var)
            a = coeffs[1].constant_value()
            b0 = coeffs[0].constant_value()
            at = -b0 / a
            rel = c.rel if a > 0 else c.rel.flipped()
            if rel in (Rel.GE0, Rel.GT0):
                strict = rel is Rel.GT0
                lo = max(lo, _int_ceil(at, strict))
            elif rel in (Rel.LE0, Rel.LT0):
                strict = rel is Rel.LT0
                hi = min(hi, _int_floor(at, strict))
            elif rel is Rel.EQ0:
                lo = max(lo, _int_ceil(at, False))
                hi = min(hi, _int_floor(at, False))
            else:
                remaining.append(c)
        return (lo, hi, remaining)

    def rec(depth: int, assigned: dict[str, Fraction], conds) -> bool:
        if depth == len(rest):
            found.append(tuple(int(assigned[v]) for v in rest))
            return limit is not None and len(found) >= limit
        var = rest[depth]
        lo, hi, narrowed = admissible_range(conds, assigned, var)
        for c in range(lo, hi + 1):
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceeded("integer enumeration budget exhausted")
            assigned[var] = Fraction(c)
            if all(
                c2.rel.holds_for_sign(_sign(c2.poly.evaluate(assigned)))
                for c2 in narrowed
                if all(v in assigned for v in c2.poly.vars_used())
            ):
                pending = [
                    c2
                    for c2 in narrowed
                    if any(v not in assigned for v in c2.poly.vars_used())
                ]
                if rec(depth + 1, assigned, pending):
                    del assigned[var]
                    return True
            del assigned[var]
        return False

    for b in fixed.systems:
        if b.is_false:
            continue
        if rec(0, {}, list(b.conditions)):
            break
    uniq = sorted(set(found))
    return uniq[:limit] if limit is not None else uniq


def is_empty_int_at(
    ds: SemiAlgebraicSystem, n_values: Mapping[str, int], bound: int = 64
) -> bool:
    """True iff ds has no integer solution at the given parameter values."""
    return not integer_points_at(ds, n_values, bound, limit=1)


def _sign(v: Fraction) -> int:
    return (v > 0) - (v < 0)


def _int_ceil(v: Fraction, strict: bool) -> int:
    if v.denominator == 1:
        return int(v) + 1 if strict else int(v)
    return math.ceil(v)


def _int_floor(v: Fraction, strict: bool) -> int:
    if v.denominator == 1:
        return int(v) - 1 if strict else int(v)
    return math.floor(v)


# ---------------------------------------------------------------------------
# graph assembly


def build_graph(
    prog: LoopProgram, config: CadConfig = DEFAULT_CONFIG
) -> DependenceGraph:
    """All self-dependence edges of every nest, with real-emptiness verdicts.

    The write always self-pairs (write-after-write); every read naming the
    written array contributes a read-after-write and a write-after-read edge.
    Edges are kept even when provably empty, flagged as absent.
    """
    edges: list[DependenceEdge] = []
    for idx, nest in enumerate(prog.nests):
        candidates: list[tuple[DependenceKind, int, bool]] = [
            (DependenceKind.WAW, 0, False)
        ]
        for i, acc in enumerate(nest.stmt.reads, start=1):
            if acc.array == nest.stmt.write.array:
                candidates.append((DependenceKind.RAW, i, False))
                candidates.append((DependenceKind.WAR, i, True))
        for kind, i, transposed in candidates:
            ds = build_ds(nest, i, transposed)
            edges.append(
                DependenceEdge(kind, i, ds, idx, empty_real=is_empty_real(ds, config))
            )
    return DependenceGraph(
        tuple(n.stmt for n in prog.nests), tuple(edges)
    )
