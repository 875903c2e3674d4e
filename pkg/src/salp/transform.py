"""Applying a valid schedule: rebuild the loop nest over the image space.

The transformed space couples old and new iteration variables through the
image equations y_j = M_j.  A decomposition of that system under the order
(coefficients, parameters, new vars, old vars) either pins every old
variable as a section root function of (params, new vars), in which case
those root functions invert the schedule and the projected tree is the
transformed program, or it leaves an old variable ranging over a sector,
in which case the schedule does not determine the instance and the
transformation is rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .cad import (
    CadConfig,
    CadNode,
    CadTree,
    DEFAULT_CONFIG,
    Section,
    SectionBound,
    Sector,
    build_cad,
    cells_satisfying,
    induced,
    specialize_tree,
)
from .errors import IntegerValidityFailed, StructureError, TransformFailed
from .loopir import (
    AccessFunction,
    LoopProgram,
    PerfectNest,
    Statement,
    cad_to_loops,
    domain_system,
    program_to_text,
)
from .oracle import BijectionReport, check_bijection, enumerate_domain
from .poly import Polynomial, VarOrder, poly_to_text
from .realalg import SamplePoint
from .sas import (
    BasicSystem,
    Rel,
    SemiAlgebraicSystem,
    SignCondition,
    conj,
    eliminate_linear_equalities,
    specialize,
)
from .schedule import ScheduleTemplate, ValidityRegion


def concrete_template(
    nest: PerfectNest, components: Sequence[Polynomial]
) -> ScheduleTemplate:
    """Wrap an explicit schedule (no free coefficients) as a template."""
    order = nest.order()
    comps = tuple(
        c if c.order == order else c.reorder(order) for c in components
    )
    if len(comps) != len(nest.loops):
        raise StructureError("schedule must have one component per loop")
    return ScheduleTemplate((), comps, order, order)


def image_vars(nest: PerfectNest) -> tuple[str, ...]:
    names = tuple(f"y{j}" for j in range(1, len(nest.loops) + 1))
    taken = set(nest.order().variables)
    if any(y in taken for y in names):
        raise StructureError("image variable names collide with the nest's")
    return names


def build_et(
    nest: PerfectNest, template: ScheduleTemplate, ev: ValidityRegion | None = None
) -> SemiAlgebraicSystem:
    """Domain copy, image equations, and the validity region, conjoined."""
    ys = image_vars(nest)
    full = VarOrder(
        template.params + nest.params.names + ys + nest.loop_vars()
    )
    dom = domain_system(nest)
    parts = SemiAlgebraicSystem(
        full,
        [
            BasicSystem(
                full,
                tuple(SignCondition(c.poly.reorder(full), c.rel) for c in b.conditions),
            )
            for b in dom.systems
        ],
    )
    eq_conds = []
    for j, comp in enumerate(template.components, start=1):
        eq = Polynomial.variable(full, f"y{j}") - comp.reorder(full)
        eq_conds.append(SignCondition(eq, Rel.EQ0))
    parts = conj(parts, SemiAlgebraicSystem.of(full, *eq_conds))
    if template.params and ev is not None and not ev.system.is_true_syntactic:
        ev_sys = SemiAlgebraicSystem(
            full,
            [
                BasicSystem(
                    full,
                    tuple(
                        SignCondition(c.poly.reorder(full), c.rel)
                        for c in b.conditions
                    ),
                )
                for b in ev.system.systems
            ],
        )
        parts = conj(parts, ev_sys)
    return parts


def _point_matches_cell(vcell, point: Mapping[str, Fraction]) -> bool:
    """Whether a rational point realizes the cell's stored sign vector."""
    for p, s in vcell.signs.items():
        q = p.substitute(dict(point))
        if not q.is_constant():
            return False
        v = q.constant_value()
        if (v > 0) - (v < 0) != s:
            return False
    return True


def _substitute_sections(
    et: SemiAlgebraicSystem, x_vars: Sequence[str]
) -> SemiAlgebraicSystem:
    """Rewrite the coupled system by solving its equalities for old variables.

    Substituting x-solutions into the remaining conditions keeps the zero set
    and removes most old-variable occurrences, which shrinks the projection
    dramatically; the solved equalities are re-added so the decomposition
    still carries the section structure the inverse is read from.
    """
    full = et.order
    out = []
    for b in et.systems:
        reduced, sols = eliminate_linear_equalities(b, list(x_vars))
        conds = list(reduced.conditions)
        for v in x_vars:
            if v in sols:
                eq = Polynomial.variable(full, v) - sols[v]
                conds.append(SignCondition(eq, Rel.EQ0))
        out.append(BasicSystem(full, tuple(conds)))
    return SemiAlgebraicSystem(full, out)


@dataclass(frozen=True)
class TransformCase:
    """One surviving coefficient-cell: its image tree and emitted program."""

    v_values: dict[str, Fraction] | None
    t_ny: CadTree
    xi: dict[tuple[int, ...], tuple[Polynomial, ...]]
    program: LoopProgram
    nest_prefixes: tuple[tuple[int, ...], ...]

    def uniform_xi(self) -> tuple[Polynomial, ...] | None:
        exprs = {tuple(p.key() for p in t) for t in self.xi.values()}
        if len(exprs) == 1:
            return next(iter(self.xi.values()))
        return None


@dataclass(frozen=True)
class TransformResult:
    t_l: CadTree
    order: VarOrder
    cases: tuple[TransformCase, ...]
    diagnostics: tuple[str, ...]
    parallel_levels: frozenset[int]


def transform(
    nest: PerfectNest,
    template: ScheduleTemplate,
    ev: ValidityRegion | None = None,
    parallel_levels: frozenset[int] = frozenset(),
    config: CadConfig = DEFAULT_CONFIG,
) -> TransformResult:
    """Decompose the coupled system and read the program off the image tree.

    Every old-variable level of a satisfying leaf must be a section, and
    each (params, image) cell must carry exactly one satisfying chain of
    old-variable sections; offending coefficient cells are discarded with a
    diagnostic, and the transformation fails when nothing survives.
    """
    et = build_et(nest, template, ev)
    et = _substitute_sections(et, nest.loop_vars())
    full = et.order
    polys = []
    seen = set()
    for b in et.systems:
        for c in b.conditions:
            if c.poly.key() not in seen:
                seen.add(c.poly.key())
                polys.append(c.poly)
    tree = build_cad(polys, full, config)
    sat = cells_satisfying(tree, et)
    diagnostics: list[str] = []
    if not sat:
        raise TransformFailed("the transformed space is empty")
    mv = len(template.params)
    cases: list[TransformCase] = []
    if mv == 0:
        case = _case_from_tree(tree, sat, nest, None, parallel_levels, diagnostics)
        if case is not None:
            cases.append(case)
    else:
        witness = None
        if ev is not None and ev.witness is not None:
            witness = {v: Fraction(ev.witness[v]) for v in template.params}
        prefixes = {leaf.index[:mv] for leaf in sat}
        used: set[tuple] = set()
        for vcell in induced(tree, mv).cells():
            if vcell.index not in prefixes:
                continue
            # prefer the scheduler's integer witness over the cell's own
            # sample wherever it fits; other cells keep their samples
            if witness is not None and _point_matches_cell(vcell, witness):
                assign = dict(witness)
            else:
                coords = vcell.sample.coords
                if not all(isinstance(c, Fraction) for c in coords):
                    diagnostics.append(
                        f"coefficient cell {vcell.index}: no rational sample, "
                        f"skipped"
                    )
                    continue
                assign = dict(zip(template.params, coords))
            key = tuple(assign[v] for v in template.params)
            if key in used:
                continue
            used.add(key)
            sub_tree = specialize_tree(tree, assign)
            sub_et = specialize(et, assign)
            sub_sat = cells_satisfying(sub_tree, sub_et)
            if not sub_sat:
                continue
            case = _case_from_tree(
                sub_tree, sub_sat, nest, dict(assign), parallel_levels, diagnostics
            )
            if case is not None:
                cases.append(case)
    if not cases:
        raise TransformFailed(
            "no coefficient cell yields a section-only decomposition: "
            + "; ".join(diagnostics[:4])
        )
    return TransformResult(
        tree, full, tuple(cases), tuple(diagnostics), parallel_levels
    )


def _case_from_tree(
    tree: CadTree,
    sat,
    nest: PerfectNest,
    v_values: dict[str, Fraction] | None,
    parallel_levels: frozenset[int],
    diagnostics: list[str],
) -> TransformCase | None:
    p = len(nest.params.names)
    s = len(nest.loops)
    order = tree.order
    loop_vars = nest.loop_vars()
    ny_depth = p + s
    groups: dict[tuple[int, ...], object] = {}
    for leaf in sat:
        for i in range(s):
            ext = leaf.stack[ny_depth + i]
            if not isinstance(ext, Section):
                diagnostics.append(
                    f"cell {leaf.index}: old variable {loop_vars[i]} ranges over "
                    f"a sector, schedule does not pin it"
                )
                return None
        key = leaf.index[:ny_depth]
        if key in groups:
            diagnostics.append(
                f"image cell {key}: two old-variable chains satisfy the system, "
                f"schedule is not injective here"
            )
            return None
        groups[key] = leaf
    ys = order.variables[p : p + s]
    stmt_by_key: dict[tuple[int, ...], Statement] = {}
    expr_by_key: dict[tuple[int, ...], tuple[Polynomial, ...]] = {}
    for key, leaf in groups.items():
        exprs = _solve_sections(leaf, tree, nest, diagnostics)
        if exprs is None:
            return None
        expr_by_key[key] = exprs
        stmt_by_key[key] = _rewritten_statement(nest, exprs, order, ys)
    t_ny = _pruned_prefix(tree, ny_depth, set(groups))
    # pruning compacts child positions, so leaf indices change; both trees
    # enumerate leaves in lexicographic order, which aligns them positionally
    new_cells = t_ny.cells()
    old_keys = sorted(groups)
    if len(new_cells) != len(old_keys):
        raise StructureError("pruned image tree lost or gained cells")
    key_for = {cell.index: old for cell, old in zip(new_cells, old_keys)}
    ny_order = VarOrder(order.variables[:ny_depth])
    xi_map = {
        cell.index: tuple(e.reorder(ny_order) for e in expr_by_key[key_for[cell.index]])
        for cell in new_cells
    }
    nest_prefixes = tuple(cell.index for cell in new_cells)
    program = cad_to_loops(
        t_ny,
        lambda cell: stmt_by_key[key_for[cell.index]],
        param_count=p,
        parallel_levels=parallel_levels,
    )
    return TransformCase(v_values, t_ny, xi_map, program, nest_prefixes)


def _solve_sections(
    leaf, tree: CadTree, nest: PerfectNest, diagnostics: list[str]
) -> tuple[Polynomial, ...] | None:
    """Express each old variable from its section, back-substituting earlier ones."""
    p = len(nest.params.names)
    s = len(nest.loops)
    order = tree.order
    loop_vars = nest.loop_vars()
    solved: dict[str, Polynomial] = {}
    out = []
    for i, var in enumerate(loop_vars):
        ext = leaf.stack[p + s + i]
        b = ext.root_of.reorder(order)
        if b.degree_in(var) != 1:
            diagnostics.append(
                f"cell {leaf.index}: section for {var} is nonlinear, "
                f"inverse is not polynomial"
            )
            return None
        coeffs = b.coeffs_in(var)
        lead = coeffs[1]
        if not lead.is_constant():
            diagnostics.append(
                f"cell {leaf.index}: section for {var} has a varying leading "
                f"coefficient"
            )
            return None
        expr = coeffs[0] * (Fraction(-1) / lead.constant_value())
        if solved:
            expr = expr.compose(solved)
        remaining = [w for w in expr.vars_used() if w in loop_vars]
        if remaining:
            diagnostics.append(
                f"cell {leaf.index}: section for {var} still mentions {remaining}"
            )
            return None
        solved[var] = expr
        out.append(expr)
    return tuple(out)


def _rewritten_statement(
    nest: PerfectNest,
    exprs: tuple[Polynomial, ...],
    order: VarOrder,
    ys: tuple[str, ...],
) -> Statement:
    mapping = {v: e for v, e in zip(nest.loop_vars(), exprs)}
    ny_order = VarOrder(tuple(nest.params.names) + tuple(ys))

    def rewrite(acc: AccessFunction) -> AccessFunction:
        idx = []
        for g in acc.indices:
            w = g.reorder(order).compose(mapping)
            idx.append(w.reorder(ny_order))
        return AccessFunction(acc.array, tuple(idx))

    stmt = nest.stmt
    return Statement(
        tuple(ys),
        rewrite(stmt.write),
        tuple(rewrite(a) for a in stmt.reads),
        stmt.combinator,
        stmt.reduction,
    )


def _pruned_prefix(
    tree: CadTree, depth: int, keep: set[tuple[int, ...]]
) -> CadTree:
    """The first `depth` levels, restricted to ancestors of kept indices."""
    sub_order = VarOrder(tree.order.variables[:depth])
    prefixes: set[tuple[int, ...]] = set()
    for idx in keep:
        for d in range(depth + 1):
            prefixes.add(idx[:d])

    def clone(node: CadNode, idx: tuple[int, ...]) -> CadNode:
        ext = node.extension
        if ext is not None:
            ext = _reorder_extension(ext, sub_order)
        signs = {p.reorder(sub_order): v for p, v in node.signs.items()}
        new = CadNode(
            ext,
            node.coord,
            node.depth,
            SamplePoint(sub_order, node.sample.coords),
            signs,
        )
        if node.depth < depth:
            for j, child in enumerate(node.children):
                cidx = idx + (j,)
                if cidx in prefixes:
                    new.children.append(clone(child, cidx))
        return new

    root = clone(tree.root, ())
    inputs = tuple(
        p.reorder(sub_order)
        for p in tree.inputs
        if all(tree.order.index(v) < depth for v in p.vars_used())
    )
    levels = {
        k: tuple(p.reorder(sub_order) for p in v)
        for k, v in tree.levels.items()
        if k <= depth
    }
    return CadTree(sub_order, inputs, root, tree.config, levels)


def _reorder_extension(ext, sub_order: VarOrder):
    if isinstance(ext, Section):
        return Section(ext.root_of.reorder(sub_order), ext.root_index)
    lo = ext.lower
    hi = ext.upper
    if lo is not None:
        lo = SectionBound(lo.poly.reorder(sub_order), lo.root_index)
    if hi is not None:
        hi = SectionBound(hi.poly.reorder(sub_order), hi.root_index)
    return Sector(lo, hi)


# ---------------------------------------------------------------------------
# integer validity (the hypotheses that make the real bijection an integer one)


@dataclass(frozen=True)
class IntegerValidityEntry:
    n_values: dict[str, int]
    schedule_integral: bool
    inverse_integral: bool
    bijection: BijectionReport


@dataclass(frozen=True)
class IntegerValidityReport:
    entries: tuple[IntegerValidityEntry, ...]

    @property
    def ok(self) -> bool:
        return all(
            e.schedule_integral and e.inverse_integral and e.bijection.ok
            for e in self.entries
        )


def check_integer_validity(
    result: TransformResult,
    nest: PerfectNest,
    template: ScheduleTemplate,
    v_point: Mapping[str, Fraction] | None,
    n_grid: Sequence[Mapping[str, int]],
    bound: int = 32,
) -> IntegerValidityReport:
    """Verify the integrality hypotheses and the integer-point bijection.

    Checks, for each parameter vector in the grid: the concrete schedule maps
    every domain point to integers, every inverse expression maps the emitted
    program's points to integers, and the oracle's bijection audit passes.
    Raises with counterexamples when any check fails.
    """
    case = _case_for(result, v_point)
    if template.params:
        if v_point is None:
            raise StructureError("a coefficient point is required")
        m_concrete = template.concretize(v_point)
    else:
        m_concrete = list(template.components)
    failures: list[str] = []
    entries = []
    fast_integral = all(
        c.denominator == 1 for m in m_concrete for c in m.terms.values()
    )
    for nv in n_grid:
        nv = dict(nv)
        base = {k: Fraction(v) for k, v in nv.items()}
        sched_ok = True
        if not fast_integral:
            for pt in enumerate_domain(nest, nv, bound):
                assign = dict(base)
                assign.update(
                    {v: Fraction(c) for v, c in zip(nest.loop_vars(), pt.coords)}
                )
                vals = [m.evaluate(assign) for m in m_concrete]
                if any(v.denominator != 1 for v in vals):
                    sched_ok = False
                    failures.append(
                        f"n={nv}: image of {pt.coords} is not integral: {vals}"
                    )
                    break
        inv_ok = True
        for nest_idx, tnest in enumerate(case.program.nests):
            if tnest.params.names and not tnest.params.holds_at(nv):
                continue
            exprs = case.xi[case.nest_prefixes[nest_idx]]
            for pt in enumerate_domain(tnest, nv, bound):
                assign = dict(base)
                assign.update(
                    {v: Fraction(c) for v, c in zip(tnest.loop_vars(), pt.coords)}
                )
                vals = [e.evaluate(assign) for e in exprs]
                if any(v.denominator != 1 for v in vals):
                    inv_ok = False
                    failures.append(
                        f"n={nv}: inverse of image point {pt.coords} is not "
                        f"integral: {vals}"
                    )
                    break
            if not inv_ok:
                break
        report = check_bijection(nest, case.program, m_concrete, nv, bound)
        if not report.ok:
            failures.extend(f"n={nv}: {msg}" for msg in report.failures[:4])
        entries.append(
            IntegerValidityEntry(nv, sched_ok, inv_ok, report)
        )
    if failures:
        raise IntegerValidityFailed("; ".join(failures[:8]))
    return IntegerValidityReport(tuple(entries))


def _case_for(
    result: TransformResult, v_point: Mapping[str, Fraction] | None
) -> TransformCase:
    if v_point is None or len(result.cases) == 1:
        return result.cases[0]
    for case in result.cases:
        if case.v_values == dict(v_point):
            return case
    raise StructureError("no transform case matches the coefficient point")


# ---------------------------------------------------------------------------
# output


def emit(result: TransformResult, format: str = "dsl", case_index: int = 0) -> str:
    """The transformed program as DSL text or a stable JSON document."""
    if format == "dsl":
        return program_to_text(result.cases[case_index].program)
    if format == "json":
        doc = {
            "schema": "transform/1",
            "parallel_levels": sorted(result.parallel_levels),
            "cases": [
                {
                    "coefficients": (
                        None
                        if c.v_values is None
                        else {k: str(v) for k, v in sorted(c.v_values.items())}
                    ),
                    "inverse": {
                        ",".join(map(str, k)): [poly_to_text(e) for e in exprs]
                        for k, exprs in sorted(c.xi.items())
                    },
                    "program": program_to_text(c.program),
                }
                for c in result.cases
            ],
            "diagnostics": list(result.diagnostics),
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    raise StructureError(f"unknown format {format!r}")
