"""Brute-force ground truth at fixed parameter values.

Everything here works by exact enumeration and evaluation: no projection, no
quantifier elimination, no dependence systems.  The rest of the pipeline is
cross-checked against these results, so this module deliberately reimplements
bound handling (by filtering integer candidates with exact comparisons rather
than by floor/ceil adjustment) instead of sharing the interpreter's code path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .errors import StructureError
from .loopir import (
    LoopProgram,
    PerfectNest,
    PolyBound,
    RootBound,
    Unbounded,
    interpret,
)
from .poly import Polynomial
from .realalg import Coord, ceil_coord, coord_compare, floor_coord, isolate_roots


@dataclass(frozen=True)
class IterationPoint:
    coords: tuple[int, ...]

    def __lt__(self, other: "IterationPoint") -> bool:
        return self.coords < other.coords


class DependenceKind(enum.Enum):
    RAW = "RAW"
    WAW = "WAW"
    WAR = "WAR"


@dataclass(frozen=True)
class DependencePair:
    """src executes before dst and both touch `address`, one of them writing.

    access_index identifies which read access participates (1-based, matching
    the statement's read list); WAW pairs carry None.
    """

    kind: DependenceKind
    src: IterationPoint
    dst: IterationPoint
    address: tuple[str, tuple[int, ...]]
    access_index: int | None = None

    def sort_key(self) -> tuple:
        return (
            self.kind.value,
            self.access_index if self.access_index is not None else 0,
            self.src.coords,
            self.dst.coords,
            self.address,
        )


@dataclass(frozen=True)
class DomainEnumeration:
    points: tuple[IterationPoint, ...]
    truncated: bool

    def __iter__(self) -> Iterator[IterationPoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


# ---------------------------------------------------------------------------
# domain enumeration


def _endpoint(
    b, var: str, assign: dict[str, Fraction]
) -> tuple[Coord | None, bool]:
    """(value, infinite); value None with infinite=False marks an empty slot."""
    if isinstance(b, Unbounded):
        return (None, True)
    if isinstance(b, PolyBound):
        return (b.poly.evaluate(assign), False)
    if isinstance(b, RootBound):
        q = b.poly.substitute(assign)
        if q.is_zero() or q.degree_in(var) < 1:
            return (None, False)
        roots = isolate_roots(q)
        if len(roots) < b.root_index:
            return (None, False)
        r = roots[b.root_index - 1]
        return (r.value if r.is_rational else r, False)
    raise StructureError(f"unknown bound {b!r}")


def _admits(lo: Coord | None, hi: Coord | None, loop, c: int) -> bool:
    """Exact membership of integer c in the loop interval."""
    f = Fraction(c)
    if lo is not None:
        cmp = coord_compare(lo, f)
        if not (cmp < 0 or (cmp == 0 and loop.lower_closed)):
            return False
    if hi is not None:
        cmp = coord_compare(f, hi)
        if not (cmp < 0 or (cmp == 0 and loop.upper_closed)):
            return False
    return True


def enumerate_domain(
    nest: PerfectNest, n_values: Mapping[str, int], bound: int = 64
) -> DomainEnumeration:
    """All integer points of the loop domain within [-bound, bound]^s.

    The domain lives under the parameter region: outside it the nest
    executes nothing, so the enumeration is empty.
    """
    if nest.params.names and not nest.params.holds_at(n_values):
        return DomainEnumeration((), False)
    assign: dict[str, Fraction] = {k: Fraction(v) for k, v in n_values.items()}
    points: list[IterationPoint] = []
    truncated = [False]

    def rec(depth: int, state: tuple[int, ...]):
        if depth == len(nest.loops):
            points.append(IterationPoint(state))
            return
        loop = nest.loops[depth]
        lo, lo_inf = _endpoint(loop.lower, loop.var, assign)
        if lo is None and not lo_inf and not isinstance(loop.lower, Unbounded):
            return
        hi, hi_inf = _endpoint(loop.upper, loop.var, assign)
        if hi is None and not hi_inf and not isinstance(loop.upper, Unbounded):
            return
        start = -bound if lo is None else max(-bound, floor_coord(lo))
        stop = bound if hi is None else min(bound, ceil_coord(hi))
        for just_outside in (-bound - 1, bound + 1):
            if _admits(lo, hi, loop, just_outside):
                truncated[0] = True
        for c in range(start, stop + 1):
            if not _admits(lo, hi, loop, c):
                continue
            assign[loop.var] = Fraction(c)
            rec(depth + 1, state + (c,))
            del assign[loop.var]

    rec(0, ())
    return DomainEnumeration(tuple(points), truncated[0])


# ---------------------------------------------------------------------------
# dependence pairs from direct evaluation


def _integer_address(
    acc, assign: Mapping[str, Fraction]
) -> tuple[str, tuple[int, ...]] | None:
    addr = []
    for ix in acc.indices:
        v = ix.evaluate(assign)
        if v.denominator != 1:
            return None
        addr.append(int(v))
    return (acc.array, tuple(addr))


def dependences_bruteforce(
    nest: PerfectNest, n_values: Mapping[str, int], bound: int = 64
) -> list[DependencePair]:
    """Every dependence pair of the nest at n, by evaluating all accesses."""
    domain = enumerate_domain(nest, n_values, bound)
    base = {k: Fraction(v) for k, v in n_values.items()}
    writes: list[tuple[str, tuple[int, ...]] | None] = []
    reads: list[list[tuple[str, tuple[int, ...]] | None]] = []
    for p in domain:
        assign = dict(base)
        assign.update({v: Fraction(c) for v, c in zip(nest.loop_vars(), p.coords)})
        writes.append(_integer_address(nest.stmt.write, assign))
        reads.append([_integer_address(a, assign) for a in nest.stmt.reads])
    pairs: list[DependencePair] = []
    pts = domain.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            src, dst = pts[i], pts[j]
            w_src, w_dst = writes[i], writes[j]
            if w_src is not None and w_dst is not None and w_src == w_dst:
                pairs.append(DependencePair(DependenceKind.WAW, src, dst, w_src))
            for a_idx, r in enumerate(reads[j], start=1):
                if w_src is not None and r == w_src:
                    pairs.append(
                        DependencePair(DependenceKind.RAW, src, dst, w_src, a_idx)
                    )
            for a_idx, r in enumerate(reads[i], start=1):
                if w_dst is not None and r == w_dst:
                    pairs.append(
                        DependencePair(DependenceKind.WAR, src, dst, w_dst, a_idx)
                    )
    pairs.sort(key=DependencePair.sort_key)
    return pairs


# ---------------------------------------------------------------------------
# schedule validity (lexicographic order on images)


def schedule_valid(
    pairs: Sequence[DependencePair],
    m_polys: Sequence[Polynomial],
    nest: PerfectNest,
    n_values: Mapping[str, int],
) -> tuple[bool, list[tuple[DependencePair, tuple, tuple]]]:
    """Does every pair map to strictly increasing schedule tuples?"""
    base = {k: Fraction(v) for k, v in n_values.items()}

    def image(p: IterationPoint) -> tuple[Fraction, ...]:
        assign = dict(base)
        assign.update({v: Fraction(c) for v, c in zip(nest.loop_vars(), p.coords)})
        return tuple(m.evaluate(assign) for m in m_polys)

    violations = []
    for pair in pairs:
        a, b = image(pair.src), image(pair.dst)
        if not a < b:
            violations.append((pair, a, b))
    return (not violations, violations)


# ---------------------------------------------------------------------------
# bijection / reordering report


@dataclass
class BijectionReport:
    injective: bool = True
    image_matches: bool = True
    addresses_match: bool = True
    order_respected: bool = True
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.injective
            and self.image_matches
            and self.addresses_match
            and self.order_respected
        )


def check_bijection(
    nest: PerfectNest,
    transformed: LoopProgram,
    m_polys: Sequence[Polynomial],
    n_values: Mapping[str, int],
    bound: int = 64,
) -> BijectionReport:
    """Ground-truth audit of a loop transformation at fixed parameters.

    Checks that the schedule is injective on the original domain, that its
    image is exactly the transformed program's iteration space, that the
    instance at M(x) touches the same addresses as the instance at x, and
    that the transformed execution order respects every dependence pair.
    """
    report = BijectionReport()
    base = {k: Fraction(v) for k, v in n_values.items()}
    domain = enumerate_domain(nest, n_values, bound)

    images: dict[tuple[int, ...], IterationPoint] = {}
    for p in domain:
        assign = dict(base)
        assign.update({v: Fraction(c) for v, c in zip(nest.loop_vars(), p.coords)})
        y = tuple(m.evaluate(assign) for m in m_polys)
        if any(c.denominator != 1 for c in y):
            report.image_matches = False
            report.failures.append(f"image of {p.coords} is not integral: {y}")
            continue
        y_int = tuple(int(c) for c in y)
        if y_int in images:
            report.injective = False
            report.failures.append(
                f"schedule collides: {images[y_int].coords} and {p.coords} -> {y_int}"
            )
        images[y_int] = p

    transformed_points: dict[tuple[int, ...], int] = {}
    for idx, tnest in enumerate(transformed.nests):
        if tnest.params.names and not tnest.params.holds_at(n_values):
            continue
        for q in enumerate_domain(tnest, n_values, bound):
            if q.coords in transformed_points:
                report.image_matches = False
                report.failures.append(f"point {q.coords} appears in two nests")
            transformed_points[q.coords] = idx

    if set(images) != set(transformed_points):
        report.image_matches = False
        missing = sorted(set(images) - set(transformed_points))[:5]
        extra = sorted(set(transformed_points) - set(images))[:5]
        if missing:
            report.failures.append(f"image points absent from program: {missing}")
        if extra:
            report.failures.append(f"program points outside the image: {extra}")

    for y_int, p in sorted(images.items()):
        idx = transformed_points.get(y_int)
        if idx is None:
            continue
        tnest = transformed.nests[idx]
        t_assign = dict(base)
        t_assign.update(
            {v: Fraction(c) for v, c in zip(tnest.loop_vars(), y_int)}
        )
        o_assign = dict(base)
        o_assign.update(
            {v: Fraction(c) for v, c in zip(nest.loop_vars(), p.coords)}
        )
        orig = [_integer_address(nest.stmt.write, o_assign)] + [
            _integer_address(a, o_assign) for a in nest.stmt.reads
        ]
        new = [_integer_address(tnest.stmt.write, t_assign)] + [
            _integer_address(a, t_assign) for a in tnest.stmt.reads
        ]
        if orig != new:
            report.addresses_match = False
            report.failures.append(
                f"instance {p.coords} -> {y_int}: addresses {orig} became {new}"
            )

    result = interpret(transformed, dict(n_values), {}, bound=bound)
    position: dict[tuple[int, ...], int] = {}
    for pos, ev in enumerate(result.trace):
        if ev.point in position:
            report.order_respected = False
            report.failures.append(f"point {ev.point} executed twice")
        position[ev.point] = pos
    pairs = dependences_bruteforce(nest, n_values, bound)
    for pair in pairs:
        y_src = _image_int(pair.src, nest, m_polys, base)
        y_dst = _image_int(pair.dst, nest, m_polys, base)
        if y_src is None or y_dst is None:
            continue
        if y_src not in position or y_dst not in position:
            report.order_respected = False
            report.failures.append(
                f"dependence endpoints {y_src}, {y_dst} missing from execution"
            )
            continue
        if not position[y_src] < position[y_dst]:
            report.order_respected = False
            report.failures.append(
                f"{pair.kind.value} pair {pair.src.coords} -> {pair.dst.coords} "
                f"executes out of order"
            )
    return report


def _image_int(
    p: IterationPoint,
    nest: PerfectNest,
    m_polys: Sequence[Polynomial],
    base: Mapping[str, Fraction],
) -> tuple[int, ...] | None:
    assign = dict(base)
    assign.update({v: Fraction(c) for v, c in zip(nest.loop_vars(), p.coords)})
    y = tuple(m.evaluate(assign) for m in m_polys)
    if any(c.denominator != 1 for c in y):
        return None
    return tuple(int(c) for c in y)
