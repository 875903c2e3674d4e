"""Parametric schedules and their validity regions.

A schedule template assigns each nest level a polynomial in the iteration
variables whose coefficients are fresh unknowns.  Validity at level k asks
that every dependence pair keep the first k-1 components equal and increase
the k-th strictly.  Eliminating the universally quantified block by CAD
yields the validity region: the set of coefficient vectors for which no
dependence pair can violate the condition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .cad import (
    CadConfig,
    DEFAULT_CONFIG,
    build_cad,
    cells_satisfying,
    describe_line_cells,
    induced,
)
from .depend import DST_SUFFIX, SRC_SUFFIX, DependenceEdge, copies_order
from .errors import BudgetExceeded, NoScheduleError, StructureError
from .loopir import PerfectNest
from .poly import Polynomial, VarOrder
from .realalg import SamplePoint, sign_at
from .sas import (
    BasicSystem,
    Rel,
    SemiAlgebraicSystem,
    SignCondition,
    conj,
    eliminate_linear_equalities,
)

_SIGN_REL = {-1: Rel.LT0, 0: Rel.EQ0, 1: Rel.GT0}


@dataclass(frozen=True)
class ScheduleTemplate:
    """Components M_1..M_s over (coefficients, parameters, iteration vars)."""

    params: tuple[str, ...]
    components: tuple[Polynomial, ...]
    order: VarOrder
    nest_order: VarOrder

    def concretize(self, values: Mapping[str, Fraction | int]) -> list[Polynomial]:
        """Substitute coefficient values; results live over the nest order."""
        assign = {k: Fraction(v) for k, v in values.items()}
        missing = [p for p in self.params if p not in assign]
        if missing:
            raise StructureError(f"missing template coefficients {missing}")
        return [c.substitute(assign).reorder(self.nest_order) for c in self.components]

    def degenerate_at(self, values: Mapping[str, Fraction | int]) -> bool:
        """True when some component loses every iteration variable."""
        iter_vars = set(self.nest_order.variables) - set(self.params)
        for c in self.concretize(values):
            if not any(v in iter_vars for v in c.vars_used()):
                return True
        return False


def default_template(
    nest: PerfectNest,
    degree: int = 1,
    include_constant: bool = True,
    include_params: bool = False,
) -> ScheduleTemplate:
    """One fresh coefficient per monomial of total degree <= degree, per level."""
    if degree < 1:
        raise StructureError("template degree must be at least 1")
    base_vars = list(nest.params.names) if include_params else []
    base_vars += list(nest.loop_vars())
    monomials: list[tuple[int, ...]] = []
    for expo in itertools.product(range(degree + 1), repeat=len(base_vars)):
        total = sum(expo)
        if total > degree or (total == 0 and not include_constant):
            continue
        monomials.append(expo)
    monomials.sort(key=lambda e: (sum(e), e))
    s = len(nest.loops)
    names: list[str] = []
    per_level: list[list[tuple[str, tuple[int, ...]]]] = []
    for j in range(1, s + 1):
        level: list[tuple[str, tuple[int, ...]]] = []
        for expo in monomials:
            name = f"v{j}_" + "_".join(str(e) for e in expo)
            names.append(name)
            level.append((name, expo))
        per_level.append(level)
    nest_order = nest.order()
    order = VarOrder(tuple(names) + nest_order.variables)
    components = []
    for level in per_level:
        comp = Polynomial.zero(order)
        for name, expo in level:
            term = Polynomial.variable(order, name)
            for var, e in zip(base_vars, expo):
                if e:
                    term = term * Polynomial.variable(order, var) ** e
            comp = comp + term
        components.append(comp)
    return ScheduleTemplate(tuple(names), tuple(components), order, nest_order)


# ---------------------------------------------------------------------------
# the universally quantified validity condition


@dataclass(frozen=True)
class ValidityFormula:
    template: ScheduleTemplate
    level: int
    edges: tuple[DependenceEdge, ...]
    quantified: tuple[str, ...]
    full_order: VarOrder
    matrix: SemiAlgebraicSystem

    @property
    def differences(self) -> tuple[Polynomial, ...]:
        return tuple(c.poly for c in self.matrix.systems[0].conditions)


def validity_formula(
    edges: Sequence[DependenceEdge],
    template: ScheduleTemplate,
    level: int,
    nest: PerfectNest,
) -> ValidityFormula:
    """For all (params, src, dst) in every edge set: images ordered at `level`."""
    s = len(template.components)
    if not 1 <= level <= s:
        raise StructureError(f"level {level} out of range 1..{s}")
    copies = copies_order(nest)
    full_order = VarOrder(template.params + copies.variables)
    loop_vars = nest.loop_vars()
    src_rename = {v: v + SRC_SUFFIX for v in loop_vars}
    dst_rename = {v: v + DST_SUFFIX for v in loop_vars}
    conds = []
    for j in range(level):
        diff = template.components[j].reorder(full_order, src_rename) - template.components[j].reorder(full_order, dst_rename)
        conds.append(SignCondition(diff, Rel.LT0 if j == level - 1 else Rel.EQ0))
    matrix = SemiAlgebraicSystem(full_order, [BasicSystem(full_order, tuple(conds))])
    return ValidityFormula(
        template, level, tuple(edges), copies.variables, full_order, matrix
    )


@dataclass(frozen=True)
class ValidityRegion:
    system: SemiAlgebraicSystem
    witness: dict[str, Fraction] | None

    @property
    def is_empty(self) -> bool:
        return self.system.is_empty_syntactic


# ---------------------------------------------------------------------------
# quantifier elimination by decomposition


def _split_conditions(conds, v_set):
    pure_v, pure_q, mixed = [], [], []
    for c in conds:
        used = set(c.poly.vars_used())
        if used <= v_set:
            pure_v.append(c)
        elif not used & v_set:
            pure_q.append(c)
        else:
            mixed.append(c)
    return pure_v, pure_q, mixed


def _signs_rel(sign: int) -> Rel:
    return _SIGN_REL[sign]


def _holds_at_sample(
    system: SemiAlgebraicSystem, sample: SamplePoint, budget: int
) -> bool:
    for b in system.systems:
        if b.is_false:
            continue
        ok = True
        for c in b.conditions:
            p = c.poly if c.poly.order == sample.order else c.poly.reorder(sample.order)
            if not c.rel.holds_for_sign(sign_at(p, sample, budget)):
                ok = False
                break
        if ok:
            return True
    return False


def _marked_region_for_branch(
    branch: BasicSystem,
    v_order: VarOrder,
    quantified_order: tuple[str, ...],
    config: CadConfig,
) -> tuple[SemiAlgebraicSystem, list[Polynomial]] | None:
    """The v-region from which this violation branch is realizable.

    Returns None when the branch is unrealizable for every v; otherwise the
    exact region together with the polynomials its description is built from.
    """
    v_set = set(v_order.variables)
    reduced, _ = eliminate_linear_equalities(branch, quantified_order)
    if reduced.is_false:
        return None
    pure_v, pure_q, mixed = _split_conditions(reduced.conditions, v_set)
    collected = [c.poly.reorder(v_order) for c in pure_v]
    base = SemiAlgebraicSystem(
        v_order,
        [BasicSystem(v_order, tuple(SignCondition(p, c.rel) for p, c in zip(collected, pure_v)))],
    )
    if not mixed:
        if pure_q:
            used_q = _used_vars(pure_q, quantified_order)
            sub = VarOrder(used_q)
            conds = tuple(SignCondition(c.poly.reorder(sub), c.rel) for c in pure_q)
            tree = build_cad([c.poly for c in conds], sub, config)
            target = SemiAlgebraicSystem(sub, [BasicSystem(sub, conds)])
            if not cells_satisfying(tree, target):
                return None
        return (base, collected)
    used_v = _used_vars(mixed, v_order.variables)
    used_q = _used_vars(mixed + pure_q, quantified_order)
    sub = VarOrder(used_v + used_q)
    conds = tuple(
        SignCondition(c.poly.reorder(sub), c.rel) for c in mixed + pure_q
    )
    tree = build_cad([c.poly for c in conds], sub, config)
    target = SemiAlgebraicSystem(sub, [BasicSystem(sub, conds)])
    satisfying = cells_satisfying(tree, target)
    if not satisfying:
        return None
    mv = len(used_v)
    prefixes = {cell.index[:mv] for cell in satisfying}
    level_polys: list[Polynomial] = []
    for lvl in range(1, mv + 1):
        level_polys.extend(tree.levels.get(lvl, ()))
    collected.extend(p.reorder(v_order) for p in level_polys)
    if mv == 1:
        line = induced(tree, 1)
        disjuncts = []
        for cell, desc in describe_line_cells(line):
            if (cell.index[0],) in prefixes:
                for b in desc.systems:
                    conds2 = tuple(
                        SignCondition(c.poly.reorder(v_order), c.rel)
                        for c in b.conditions
                    )
                    disjuncts.append(BasicSystem(v_order, conds2))
        region = SemiAlgebraicSystem(v_order, disjuncts)
    else:
        v_tree = induced(tree, mv)
        groups: dict[tuple, list[tuple[tuple, SamplePoint]]] = {}
        for cell in v_tree.cells():
            vec = tuple(
                sign_at(p, cell.sample, config.refine_budget) for p in level_polys
            )
            groups.setdefault(vec, []).append((cell.index, cell.sample))
        disjuncts = []
        for vec, members in groups.items():
            flags = {idx in prefixes for idx, _ in members}
            if flags == {True, False}:
                raise BudgetExceeded(
                    "sign conditions cannot separate the violating region"
                )
            if flags == {True}:
                conds2 = tuple(
                    SignCondition(p.reorder(v_order), _signs_rel(s))
                    for p, s in zip(level_polys, vec)
                )
                disjuncts.append(BasicSystem(v_order, conds2))
        region = SemiAlgebraicSystem(v_order, disjuncts)
    if base.systems and base.systems[0].conditions:
        region = conj(base, region)
    return (region, collected)


def _used_vars(conds, ordering) -> tuple[str, ...]:
    used = set()
    for c in conds:
        used.update(c.poly.vars_used())
    return tuple(v for v in ordering if v in used)


def qe_forall(
    formula: ValidityFormula, config: CadConfig = DEFAULT_CONFIG
) -> ValidityRegion:
    """Eliminate the quantified block: the exact region where no edge violates.

    Works on the negation: each edge disjunct conjoined with one negated
    matrix condition is a violation branch; the union of the v-regions from
    which some branch is realizable is carved out of the coefficient space.
    """
    v_order = VarOrder(formula.template.params)
    matrix_conds = formula.matrix.systems[0].conditions
    branch_regions: list[SemiAlgebraicSystem] = []
    collected: list[Polynomial] = []
    for edge in formula.edges:
        ds = edge.ds
        for disjunct in ds.systems:
            if disjunct.is_false:
                continue
            base_conds = tuple(
                SignCondition(c.poly.reorder(formula.full_order), c.rel)
                for c in disjunct.conditions
            )
            for mc in matrix_conds:
                branch = BasicSystem(
                    formula.full_order, base_conds + (mc.negated(),)
                )
                if branch.is_false:
                    continue
                out = _marked_region_for_branch(
                    branch, v_order, formula.quantified, config
                )
                if out is None:
                    continue
                region, polys = out
                branch_regions.append(region)
                collected.extend(polys)
    if not branch_regions:
        system = SemiAlgebraicSystem.true(v_order)
        witness = {p: Fraction(0) for p in v_order.variables}
        return ValidityRegion(system, witness)
    uniq: list[Polynomial] = []
    seen = set()
    for p in collected:
        if not p.is_constant() and p.key() not in seen:
            seen.add(p.key())
            uniq.append(p)
    tree = build_cad(uniq, v_order, config)
    unmarked = []
    for cell in tree.cells():
        if not any(
            _holds_at_sample(r, cell.sample, config.refine_budget)
            for r in branch_regions
        ):
            unmarked.append(cell)
    if not unmarked:
        return ValidityRegion(SemiAlgebraicSystem.empty(v_order), None)
    if len(v_order) == 1:
        keep = {c.index for c in unmarked}
        disjuncts = []
        for cell, desc in describe_line_cells(tree):
            if cell.index in keep:
                disjuncts.extend(desc.systems)
        system = SemiAlgebraicSystem(v_order, disjuncts)
    else:
        groups: dict[tuple, list] = {}
        status: dict[tuple, set[bool]] = {}
        unmarked_ids = {id(c) for c in unmarked}
        for cell in tree.cells():
            vec = tuple(cell.signs[p] for p in tree.inputs)
            groups.setdefault(vec, []).append(cell)
            status.setdefault(vec, set()).add(id(cell) in unmarked_ids)
        disjuncts = []
        for vec, flags in status.items():
            if flags == {True, False}:
                raise BudgetExceeded(
                    "sign conditions cannot separate the validity region"
                )
            if flags == {True}:
                conds = tuple(
                    SignCondition(p, _signs_rel(s))
                    for p, s in zip(tree.inputs, vec)
                )
                disjuncts.append(BasicSystem(v_order, conds))
        system = SemiAlgebraicSystem(v_order, disjuncts)
    witness = _find_witness(system, unmarked)
    return ValidityRegion(system, witness)


def _find_witness(
    system: SemiAlgebraicSystem, unmarked
) -> dict[str, Fraction] | None:
    for point in integer_grid_points(system, radius=3, count=1):
        return point
    for cell in unmarked:
        coords = cell.sample.coords
        if all(isinstance(c, Fraction) for c in coords):
            return dict(zip(system.order.variables, coords))
    return None


def integer_grid_points(
    system: SemiAlgebraicSystem, radius: int = 3, count: int | None = None
) -> Iterator[dict[str, Fraction]]:
    """Integer points satisfying the system, by max-norm shell then lex order."""
    names = system.order.variables
    found = 0
    for r in range(radius + 1):
        for tup in itertools.product(range(-r, r + 1), repeat=len(names)):
            if r and max(abs(c) for c in tup) != r:
                continue
            pt = SamplePoint(system.order, tuple(Fraction(c) for c in tup))
            if system.holds_at(pt):
                yield {v: Fraction(c) for v, c in zip(names, tup)}
                found += 1
                if count is not None and found >= count:
                    return


def pick_schedule(
    region: ValidityRegion,
    template: ScheduleTemplate | None = None,
    prefer_integer: bool = True,
    nondegenerate: bool = False,
) -> dict[str, Fraction]:
    """A concrete coefficient vector from the region, small integers first."""
    if region.is_empty:
        raise NoScheduleError("validity region is empty")

    def admissible(point: Mapping[str, Fraction]) -> bool:
        if not nondegenerate:
            return True
        if template is None:
            raise StructureError("nondegenerate filtering needs the template")
        return not template.degenerate_at(point)

    if prefer_integer:
        for point in integer_grid_points(region.system, radius=3):
            if admissible(point):
                return point
    if region.witness is not None and admissible(region.witness):
        return dict(region.witness)
    raise NoScheduleError("no admissible rational schedule point found")


def maximize_parallelism(
    edges: Sequence[DependenceEdge],
    template: ScheduleTemplate,
    nest: PerfectNest,
    config: CadConfig = DEFAULT_CONFIG,
) -> tuple[int, ValidityRegion]:
    """The deepest equality prefix whose validity region is nonempty.

    Levels are tried from s downward; level k valid means the first k-1
    image components agree on every dependence pair, so all loops except
    the k-th run in parallel.  Returns (0, empty region) when even strict
    ordering by the first component is impossible.
    """
    s = len(template.components)
    live = tuple(e for e in edges if not e.absent)
    for k in range(s, 0, -1):
        region = qe_forall(validity_formula(live, template, k, nest), config)
        if not region.is_empty:
            return (k, region)
    v_order = VarOrder(template.params)
    return (0, ValidityRegion(SemiAlgebraicSystem.empty(v_order), None))
