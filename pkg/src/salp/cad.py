"""Cylindrical algebraic decomposition with exact sample points.

The decomposition is organized as a tree: depth-i nodes are cells of the
induced decomposition of the first i variables, children are ordered by their
coordinate extent, and leaves carry sign vectors for every input polynomial.
Sector samples are rational; section samples are exact algebraic numbers, so
almost all sign evaluations stay on the cheap paths of `realalg.sign_at`.

Projection is Collins-style with the pairwise reduction of McCallum's survey:
all coefficients of each polynomial, subresultant coefficient chains of every
reductum against its derivative, and of every reductum against each other
polynomial.  Vanishing leading coefficients are therefore handled without a
well-orientedness assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, Mapping, Sequence

from .errors import BudgetExceeded, PrecisionExhausted, StructureError
from .poly import (
    Polynomial,
    Rational,
    VarOrder,
    content_free,
    exact_div,
    poly_from_coeffs,
    poly_to_text,
    principal_subresultant_coefficients,
    resultant,
    u_degree,
    u_eval,
    u_gcd,
    u_int_normalize,
    univariate_coeffs,
)
from .realalg import (
    AlgebraicFiber,
    Coord,
    RealAlgebraicNumber,
    SamplePoint,
    ceil_coord,
    coord_as_fraction,
    coord_compare,
    floor_coord,
    isolate_roots,
    sign_at,
    simplest_between,
)
from .sas import BasicSystem, Rel, SemiAlgebraicSystem, SignCondition, conj


@dataclass(frozen=True)
class CadConfig:
    """Guardrails for construction; defaults fit the target workloads."""

    projection_cap: int = 512
    var_cap: int = 10
    refine_budget: int = 64


DEFAULT_CONFIG = CadConfig()


# ---------------------------------------------------------------------------
# cell extensions


@dataclass(frozen=True)
class SectionBound:
    """A root-function reference: the root_index-th real root of poly."""

    poly: Polynomial
    root_index: int


@dataclass(frozen=True)
class Section:
    """The cell where the level variable equals one root function."""

    root_of: Polynomial
    root_index: int

    @property
    def kind(self) -> str:
        return "section"


@dataclass(frozen=True)
class Sector:
    """The open band between two adjacent root functions (None = infinite)."""

    lower: SectionBound | None
    upper: SectionBound | None

    @property
    def kind(self) -> str:
        return "sector"


CellExtension = Section | Sector


class CadNode:
    """One cell of the induced decomposition at its depth."""

    __slots__ = ("extension", "coord", "depth", "children", "signs", "sample")

    def __init__(
        self,
        extension: CellExtension | None,
        coord: Coord | None,
        depth: int,
        sample: SamplePoint,
        signs: dict[Polynomial, int],
    ):
        self.extension = extension
        self.coord = coord
        self.depth = depth
        self.sample = sample
        self.signs = signs
        self.children: list[CadNode] = []


@dataclass(frozen=True, eq=False)
class CadCell:
    """A leaf cell: extension stack, exact sample, input sign vector."""

    stack: tuple[CellExtension, ...]
    sample: SamplePoint
    signs: Mapping[Polynomial, int]
    index: tuple[int, ...]


class CadTree:
    """A finished decomposition; immutable and safe to share."""

    __slots__ = ("order", "inputs", "root", "config", "levels", "_cells", "_point_roots")

    def __init__(
        self,
        order: VarOrder,
        inputs: tuple[Polynomial, ...],
        root: CadNode,
        config: CadConfig,
        levels: dict[int, tuple[Polynomial, ...]],
    ):
        self.order = order
        self.inputs = inputs
        self.root = root
        self.config = config
        self.levels = levels
        cells: list[CadCell] = []
        depth = len(order)

        def walk(node: CadNode, idx: tuple[int, ...], stack: tuple[CellExtension, ...]):
            if node.depth == depth:
                cells.append(CadCell(stack, node.sample, node.signs, idx))
                return
            for i, child in enumerate(node.children):
                walk(child, idx + (i,), stack + (child.extension,))

        walk(root, (), ())
        self._cells = tuple(cells)
        # memoized boundary roots for point location, keyed by
        # (depth, rational prefix, polynomial); exact, so safe to share
        self._point_roots: dict[tuple, list[Coord] | None] = {}

    def cells(self) -> tuple[CadCell, ...]:
        return self._cells

    def __repr__(self) -> str:
        return (
            f"CadTree(order={'≺'.join(self.order.variables)!r}, "
            f"{len(self.inputs)} inputs, {len(self._cells)} cells)"
        )


# ---------------------------------------------------------------------------
# projection


def _reducta(p: Polynomial, var: str) -> list[Polynomial]:
    out = []
    cur = p
    while cur.degree_in(var) >= 1:
        out.append(cur)
        deg = cur.degree_in(var)
        lead = cur.leading_coeff_in(var)
        cur = cur - lead * Polynomial.variable(cur.order, var) ** deg
    return out


def projection(polys: Iterable[Polynomial], var: str) -> list[Polynomial]:
    """Boundary polynomials one level down, content-freed and deduplicated."""
    out: dict[tuple, Polynomial] = {}

    def add(q: Polynomial) -> None:
        if q.is_zero() or q.is_constant():
            return
        q = content_free(q)
        out.setdefault(q.key(), q)

    prims = sorted(
        {p.key(): p for p in polys if p.degree_in(var) >= 1}.values(),
        key=lambda p: p.sort_key(),
    )
    for p in prims:
        for c in p.coeffs_in(var):
            add(c)
        for r in _reducta(p, var):
            if r.degree_in(var) >= 2:
                for s in principal_subresultant_coefficients(
                    r, r.derivative(var), var
                ):
                    add(s)
    for i, p in enumerate(prims):
        for q in prims[i + 1:]:
            for r in _reducta(p, var):
                if r.degree_in(var) >= 1:
                    for s in principal_subresultant_coefficients(r, q, var):
                        add(s)
    return list(out.values())


def _level_of(p: Polynomial, order: VarOrder) -> int:
    mv = p.main_variable()
    return 0 if mv is None else order.index(mv) + 1


def _level_sets(
    polys: Sequence[Polynomial], order: VarOrder, config: CadConfig
) -> dict[int, tuple[Polynomial, ...]]:
    levels: dict[int, dict[tuple, Polynomial]] = {}
    count = 0

    def add(p: Polynomial) -> None:
        nonlocal count
        p = content_free(p)
        if p.is_constant():
            return
        lvl = _level_of(p, order)
        bucket = levels.setdefault(lvl, {})
        if p.key() not in bucket:
            bucket[p.key()] = p
            count += 1
            if count > config.projection_cap:
                raise BudgetExceeded(
                    f"projection set exceeded {config.projection_cap} polynomials"
                )

    for p in polys:
        add(p)
    for lvl in range(len(order), 1, -1):
        current = list(levels.get(lvl, {}).values())
        for q in projection(current, order[lvl - 1]):
            add(q)
    return {
        lvl: tuple(sorted(bucket.values(), key=lambda p: p.sort_key()))
        for lvl, bucket in levels.items()
    }


# ---------------------------------------------------------------------------
# root finding over a sample point


def _roots_over(
    p: Polynomial, pt: SamplePoint, var: str, budget: int
) -> list[Coord] | None:
    """Real roots of p(sample, var); None when p vanishes on the whole fiber."""
    q = p.substitute(pt.rational_part())
    if q.is_zero():
        return None
    algebraic = {v: a for v, a in pt.algebraic_part().items() if v in q.vars_used()}
    if not algebraic:
        if q.degree_in(var) < 1:
            return []
        return [_as_coord(r) for r in isolate_roots(q)]
    coeffs = q.coeffs_in(var)
    if all(sign_at(c, pt, budget) == 0 for c in coeffs):
        return None
    if q.degree_in(var) < 1:
        return []
    if len(algebraic) == 1:
        # resolve the fiber exactly over the single algebraic base: the
        # resultant only supplies root candidates (with rational defining
        # data for the cell samples); membership is decided by Sturm counts
        # over the base field, never by iterated resultants
        (v, a), = algebraic.items()
        fiber = AlgebraicFiber(q, v, a, var)
        if fiber.degree() < 1:
            return []
        d = poly_from_coeffs(list(a.coeffs), v, q.order)
        work = resultant(d, q, v)
        if work.is_zero():
            work = _retry_resultant(q, var, v, a)
        if work.degree_in(var) < 1:
            return []
        return [
            _as_coord(r) for r in isolate_roots(work) if fiber.sign_at_root(r) == 0
        ]
    work = q
    for v, a in algebraic.items():
        if work.degree_in(v) < 1:
            continue
        d = poly_from_coeffs(list(a.coeffs), v, work.order)
        work = resultant(d, work, v)
        if work.is_zero():
            raise PrecisionExhausted(
                "degenerate resultant while lifting over several algebraic coordinates"
            )
    if work.degree_in(var) < 1:
        return []
    candidates = isolate_roots(work)
    roots: list[Coord] = []
    for r in candidates:
        if sign_at(p, pt.extended(_as_coord(r)), budget) == 0:
            roots.append(_as_coord(r))
    return roots


def _retry_resultant(
    q: Polynomial, var: str, v: str, a: RealAlgebraicNumber
) -> Polynomial:
    """Resolve a vanishing resultant by removing the coefficient content.

    With one algebraic coordinate the content of q (gcd of its coefficients as
    polynomials in v) carries every common factor with the defining
    polynomial; the point is not a root of the content (that case was removed
    as fiber-wide vanishing), so dividing it out keeps the root set and makes
    the resultant nonzero.
    """
    content: list[Fraction] | None = None
    for c in q.coeffs_in(var):
        if c.is_zero():
            continue
        cs = univariate_coeffs(c, v)
        content = cs if content is None else u_gcd(content, cs)
    assert content is not None and u_degree(content) >= 1
    content_poly = poly_from_coeffs(u_int_normalize(content), v, q.order)
    reduced = exact_div(q, content_poly)
    d = poly_from_coeffs(list(a.coeffs), v, q.order)
    work = resultant(d, reduced, v)
    assert not work.is_zero()
    return work


def _as_coord(r: RealAlgebraicNumber) -> Coord:
    return r.value if r.is_rational else r


def rational_between(a: Coord, b: Coord) -> Fraction:
    """An exact rational strictly between two coordinates with a < b."""
    for _ in range(4096):
        fa, fb = coord_as_fraction(a), coord_as_fraction(b)
        hi_a = fa if fa is not None else a.hi
        lo_b = fb if fb is not None else b.lo
        if hi_a < lo_b:
            return simplest_between(hi_a, lo_b)
        if fa is not None and fb is not None:
            return simplest_between(fa, fb)
        if fa is None:
            a = a.bisected()
        if fb is None:
            b = b.bisected()
    raise PrecisionExhausted("failed to separate adjacent cell boundaries")  # pragma: no cover


# ---------------------------------------------------------------------------
# construction


def build_cad(
    polys: Iterable[Polynomial],
    order: VarOrder,
    config: CadConfig = DEFAULT_CONFIG,
) -> CadTree:
    """Decompose ℝ^s into cells sign-invariant for every input polynomial."""
    if len(order) == 0:
        raise StructureError("build_cad: empty variable order")
    if len(order) > config.var_cap:
        raise BudgetExceeded(f"variable count exceeds cap {config.var_cap}")
    inputs: list[Polynomial] = []
    seen: set[tuple] = set()
    for p in polys:
        if p.order != order:
            p = p.reorder(order)
        if p.key() not in seen:
            seen.add(p.key())
            inputs.append(p)
    levels = _level_sets(inputs, order, config)
    return _lift_tree(tuple(inputs), order, levels, config)


def _lift_tree(
    inputs: tuple[Polynomial, ...],
    order: VarOrder,
    levels: dict[int, tuple[Polynomial, ...]],
    config: CadConfig,
) -> CadTree:
    by_level: dict[int, list[Polynomial]] = {}
    for p in inputs:
        by_level.setdefault(_level_of(p, order), []).append(p)
    root_signs = {
        p: sign_at(p, SamplePoint(order, ()), config.refine_budget)
        for p in by_level.get(0, [])
    }
    root = CadNode(None, None, 0, SamplePoint(order, ()), root_signs)
    stack = [root]
    while stack:
        node = stack.pop()
        if node.depth == len(order):
            continue
        var = order[node.depth]
        level_polys = levels.get(node.depth + 1, ())
        boundaries = _stack_boundaries(level_polys, node.sample, var, config)
        for ext, coord in _extensions_from_boundaries(boundaries):
            sample = node.sample.extended(coord)
            signs = dict(node.signs)
            for p in by_level.get(node.depth + 1, []):
                signs[p] = sign_at(p, sample, config.refine_budget)
            child = CadNode(ext, coord, node.depth + 1, sample, signs)
            node.children.append(child)
            stack.append(child)
    return CadTree(order, inputs, root, config, levels)


def _stack_boundaries(
    level_polys: Sequence[Polynomial],
    sample: SamplePoint,
    var: str,
    config: CadConfig,
) -> list[tuple[Coord, Polynomial, int]]:
    """Merged, deduplicated root list: (coordinate, owning poly, root index)."""
    entries: list[tuple[Coord, Polynomial, int]] = []
    for p in level_polys:
        roots = _roots_over(p, sample, var, config.refine_budget)
        if not roots:
            continue
        for i, r in enumerate(roots):
            entries.append((r, p, i + 1))
    entries.sort(key=cmp_to_key(lambda x, y: coord_compare(x[0], y[0])))
    merged: list[tuple[Coord, Polynomial, int]] = []
    for e in entries:
        if merged and coord_compare(merged[-1][0], e[0]) == 0:
            continue
        merged.append(e)
    return merged


def _extensions_from_boundaries(
    boundaries: list[tuple[Coord, Polynomial, int]]
) -> list[tuple[CellExtension, Coord]]:
    if not boundaries:
        return [(Sector(None, None), Fraction(0))]
    out: list[tuple[CellExtension, Coord]] = []
    first = boundaries[0]
    out.append(
        (
            Sector(None, SectionBound(first[1], first[2])),
            Fraction(floor_coord(first[0]) - 1),
        )
    )
    for i, (coord, poly, idx) in enumerate(boundaries):
        out.append((Section(poly, idx), coord))
        if i + 1 < len(boundaries):
            nxt = boundaries[i + 1]
            out.append(
                (
                    Sector(SectionBound(poly, idx), SectionBound(nxt[1], nxt[2])),
                    rational_between(coord, nxt[0]),
                )
            )
    last = boundaries[-1]
    out.append(
        (
            Sector(SectionBound(last[1], last[2]), None),
            Fraction(ceil_coord(last[0]) + 1),
        )
    )
    return out


# ---------------------------------------------------------------------------
# queries


LT, EQ, GT = -1, 0, 1


def cell_compare(a: CadCell, b: CadCell) -> int:
    """Order by the first level whose coordinates differ."""
    for x, y in zip(a.sample.coords, b.sample.coords):
        c = coord_compare(x, y)
        if c != 0:
            return c
    return EQ


def cells_satisfying(
    t: CadTree, s: SemiAlgebraicSystem
) -> list[CadCell]:
    """All cells whose sign vector satisfies the system."""
    return [cell for cell in t.cells() if _cell_satisfies(cell, s, t)]


def _cell_satisfies(cell: CadCell, s: SemiAlgebraicSystem, t: CadTree) -> bool:
    for b in s.systems:
        if b.is_false:
            continue
        ok = True
        for c in b.conditions:
            p = c.poly if c.poly.order == t.order else c.poly.reorder(t.order)
            if p.is_constant():
                v = p.constant_value()
                sign = (v > 0) - (v < 0)
            else:
                sign = _lookup_sign(cell, p)
            if not c.rel.holds_for_sign(sign):
                ok = False
                break
        if ok:
            return True
    return False


def _lookup_sign(cell: CadCell, p: Polynomial) -> int:
    s = cell.signs.get(p)
    if s is None:
        raise StructureError(
            f"polynomial {poly_to_text(p)} was not part of the decomposition input"
        )
    return s


def induced(t: CadTree, k: int) -> CadTree:
    """The decomposition of the first k variables (depth-k truncation)."""
    if not 1 <= k <= len(t.order):
        raise StructureError(f"induced: depth {k} out of range")
    if k == len(t.order):
        return t
    sub_order = VarOrder(t.order.variables[:k])
    keep = tuple(p.reorder(sub_order) for p in t.inputs if _level_of(p, t.order) <= k)

    def copy(node: CadNode) -> CadNode:
        sample = SamplePoint(sub_order, node.sample.coords)
        signs = {p.reorder(sub_order): s for p, s in node.signs.items()}
        ext = _truncate_ext(node.extension, sub_order)
        new = CadNode(ext, node.coord, node.depth, sample, signs)
        if node.depth < k:
            new.children = [copy(c) for c in node.children]
        return new

    levels = {
        lvl: tuple(p.reorder(sub_order) for p in ps)
        for lvl, ps in t.levels.items()
        if lvl <= k
    }
    return CadTree(sub_order, keep, copy(t.root), t.config, levels)


def _truncate_ext(ext: CellExtension | None, order: VarOrder):
    if ext is None:
        return None
    if isinstance(ext, Section):
        return Section(ext.root_of.reorder(order), ext.root_index)
    lo = (
        SectionBound(ext.lower.poly.reorder(order), ext.lower.root_index)
        if ext.lower
        else None
    )
    hi = (
        SectionBound(ext.upper.poly.reorder(order), ext.upper.root_index)
        if ext.upper
        else None
    )
    return Sector(lo, hi)


def specialize_tree(
    t: CadTree, assign: Mapping[str, Rational | int]
) -> CadTree:
    """Re-root over the remaining variables at a rational prefix point.

    Boundary polynomials are partially evaluated and the stacks re-lifted at
    the point, which reproduces the subtree of the cell containing it.
    """
    if not assign:
        return t
    j = len(assign)
    prefix = t.order.variables[:j]
    if set(prefix) != set(assign):
        raise StructureError("specialize_tree: assignment must cover a prefix")
    if j >= len(t.order):
        raise StructureError("specialize_tree: no variables would remain")
    values = {v: Fraction(assign[v]) for v in prefix}
    suffix = VarOrder(t.order.variables[j:])
    inputs = tuple(p.substitute(values).reorder(suffix) for p in t.inputs)
    levels: dict[int, dict[tuple, Polynomial]] = {}
    for lvl, ps in t.levels.items():
        if lvl <= j:
            continue
        for p in ps:
            q = content_free(p.substitute(values).reorder(suffix))
            if q.is_constant():
                continue
            levels.setdefault(_level_of(q, suffix), {})[q.key()] = q
    level_sets = {
        lvl: tuple(sorted(bucket.values(), key=lambda p: p.sort_key()))
        for lvl, bucket in levels.items()
    }
    dedup: list[Polynomial] = []
    seen: set[tuple] = set()
    for p in inputs:
        if p.key() not in seen:
            seen.add(p.key())
            dedup.append(p)
    return _lift_tree(tuple(dedup), suffix, level_sets, t.config)


def leaves_containing(t: CadTree, point: Sequence[Rational | int]) -> list[CadCell]:
    """Every leaf whose extension constraints hold at a rational point.

    Exercises disjointness/coverage honestly: root functions are re-evaluated
    at the point, so a delineability defect shows up as zero or several hits.
    """
    coords = [Fraction(c) for c in point]
    if len(coords) != len(t.order):
        raise StructureError("leaves_containing: wrong dimension")
    roots_cache = t._point_roots

    def roots_at(depth: int, p: Polynomial) -> list[Coord] | None:
        key = (depth, tuple(coords[:depth]), p.key())
        if key not in roots_cache:
            pt = SamplePoint(t.order, tuple(coords[:depth]))
            roots_cache[key] = _roots_over(p, pt, t.order[depth], t.config.refine_budget)
        return roots_cache[key]

    def bound_value(depth: int, b: SectionBound) -> Coord | None:
        rs = roots_at(depth, b.poly)
        if rs is None or len(rs) < b.root_index:
            return None
        return rs[b.root_index - 1]

    out = []
    for cell in t.cells():
        ok = True
        for depth, ext in enumerate(cell.stack):
            v = coords[depth]
            if isinstance(ext, Section):
                r = bound_value(depth, SectionBound(ext.root_of, ext.root_index))
                if r is None or coord_compare(r, v) != 0:
                    ok = False
                    break
            else:
                if ext.lower is not None:
                    r = bound_value(depth, ext.lower)
                    if r is None or not coord_compare(r, v) < 0:
                        ok = False
                        break
                if ext.upper is not None:
                    r = bound_value(depth, ext.upper)
                    if r is None or not coord_compare(r, v) > 0:
                        ok = False
                        break
        if ok:
            out.append(cell)
    return out


# ---------------------------------------------------------------------------
# exact one-variable cell descriptions (for quantifier elimination output)


def describe_line_cells(t: CadTree) -> list[tuple[CadCell, SemiAlgebraicSystem]]:
    """For a one-variable tree: an exact defining system per cell.

    Rational boundaries become linear conditions; an algebraic boundary α with
    defining polynomial D and isolating interval (a, b) is pinned by D together
    with the interval, and the strict side of α is expressed as the union
    "beyond the interval" or "inside the interval with the sign D takes on
    that side of its root".
    """
    if len(t.order) != 1:
        raise StructureError("describe_line_cells: tree is not one-dimensional")
    var = t.order[0]
    v = Polynomial.variable(t.order, var)
    out = []
    for cell in t.cells():
        ext = cell.stack[0]
        if isinstance(ext, Section):
            out.append((cell, _section_description(v, cell.sample.coords[0], t.order)))
        else:
            lower = _boundary_coord(t, ext.lower)
            upper = _boundary_coord(t, ext.upper)
            desc = SemiAlgebraicSystem.true(t.order)
            if lower is not None:
                desc = conj(desc, _side_description(v, lower, t.order, above=True))
            if upper is not None:
                desc = conj(desc, _side_description(v, upper, t.order, above=False))
            out.append((cell, desc))
    return out


def _boundary_coord(t: CadTree, b: SectionBound | None) -> Coord | None:
    if b is None:
        return None
    for cell in t.cells():
        ext = cell.stack[0]
        if (
            isinstance(ext, Section)
            and ext.root_of.key() == b.poly.key()
            and ext.root_index == b.root_index
        ):
            return cell.sample.coords[0]
    raise StructureError("boundary section not found in tree")  # pragma: no cover


def _section_description(
    v: Polynomial, coord: Coord, order: VarOrder
) -> SemiAlgebraicSystem:
    f = coord_as_fraction(coord)
    if f is not None:
        return SemiAlgebraicSystem.of(order, SignCondition(v - f, Rel.EQ0))
    d = poly_from_coeffs(list(coord.coeffs), order[0], order)
    return SemiAlgebraicSystem.of(
        order,
        SignCondition(d, Rel.EQ0),
        SignCondition(v - coord.lo, Rel.GT0),
        SignCondition(v - coord.hi, Rel.LT0),
    )


def _side_description(
    v: Polynomial, coord: Coord, order: VarOrder, above: bool
) -> SemiAlgebraicSystem:
    f = coord_as_fraction(coord)
    if f is not None:
        rel = Rel.GT0 if above else Rel.LT0
        return SemiAlgebraicSystem.of(order, SignCondition(v - f, rel))
    d = poly_from_coeffs(list(coord.coeffs), order[0], order)
    lo, hi = coord.lo, coord.hi
    # sign of d immediately right of its root in (lo, hi); d(hi) has it
    right = u_eval(list(coord.coeffs), hi)
    side = 1 if right > 0 else -1
    if not above:
        side = -side
    if above:
        clear = BasicSystem(order, (SignCondition(v - hi, Rel.GT0),))
        near = BasicSystem(
            order,
            (
                SignCondition(v - lo, Rel.GT0),
                SignCondition(v - hi, Rel.LE0),
                SignCondition(d * side, Rel.GT0),
            ),
        )
    else:
        clear = BasicSystem(order, (SignCondition(v - lo, Rel.LT0),))
        near = BasicSystem(
            order,
            (
                SignCondition(v - hi, Rel.LT0),
                SignCondition(v - lo, Rel.GE0),
                SignCondition(d * side, Rel.GT0),
            ),
        )
    return SemiAlgebraicSystem(order, (clear, near))


# ---------------------------------------------------------------------------
# serialization


def coord_to_json(c: Coord) -> dict:
    f = coord_as_fraction(c)
    if f is not None:
        return {"type": "rational", "value": str(f)}
    return {
        "type": "algebraic",
        "defining": poly_to_text(c.defining),
        "lower": str(c.lo),
        "upper": str(c.hi),
    }


def _ext_to_json(ext: CellExtension | None) -> dict | None:
    if ext is None:
        return None
    if isinstance(ext, Section):
        return {
            "kind": "section",
            "root_of": poly_to_text(ext.root_of),
            "root_index": ext.root_index,
        }

    def bound(b: SectionBound | None):
        if b is None:
            return None
        return {"root_of": poly_to_text(b.poly), "root_index": b.root_index}

    return {"kind": "sector", "lower": bound(ext.lower), "upper": bound(ext.upper)}


def _node_to_json(node: CadNode) -> dict:
    return {
        "extension": _ext_to_json(node.extension),
        "coord": None if node.coord is None else coord_to_json(node.coord),
        "signs": {poly_to_text(p): s for p, s in sorted(
            node.signs.items(), key=lambda kv: poly_to_text(kv[0])
        )},
        "children": [_node_to_json(c) for c in node.children],
    }


def tree_to_json(t: CadTree) -> dict:
    return {
        "schema": "cad-tree/1",
        "order": list(t.order.variables),
        "inputs": [poly_to_text(p) for p in t.inputs],
        "cell_count": len(t.cells()),
        "root": _node_to_json(t.root),
    }
