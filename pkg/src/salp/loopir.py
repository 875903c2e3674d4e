"""Loop programs: perfectly nested polynomial loops over integer points.

A program is a sequence of nests; each nest is a parameter region, a chain of
loops with polynomial (or exact-root) bounds, and one statement that combines
read accesses through an opaque combinator into a write access with a
reduction.  The text form round-trips through parse/print.

Interpretation is exact: bounds are evaluated as rationals or real algebraic
numbers and floored/ceiled to integer ranges, so degenerate loops execute
precisely when their bound is an integer.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from .errors import ParseError, StructureError
from .poly import Polynomial, VarOrder, parse_polynomial, poly_to_text
from .realalg import (
    Coord,
    SamplePoint,
    ceil_coord,
    floor_coord,
    isolate_roots,
)
from .sas import (
    BasicSystem,
    Rel,
    SemiAlgebraicSystem,
    SignCondition,
    conj,
    parse_system,
    system_to_text,
)
from .cad import CadTree, Section, Sector, describe_line_cells, induced


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class PolyBound:
    """An endpoint given directly by a polynomial in earlier variables."""

    poly: Polynomial


@dataclass(frozen=True)
class RootBound:
    """The root_index-th real root (in the loop variable) of poly.

    Used for emitted programs whose cell boundaries have no closed form; the
    defining polynomial mentions the loop variable itself.
    """

    poly: Polynomial
    root_index: int


@dataclass(frozen=True)
class Unbounded:
    positive: bool


Bound = PolyBound | RootBound | Unbounded


@dataclass(frozen=True)
class Loop:
    var: str
    lower: Bound
    upper: Bound
    lower_closed: bool = True
    upper_closed: bool = True
    parallel: bool = False


@dataclass(frozen=True)
class AccessFunction:
    array: str
    indices: tuple[Polynomial, ...]


class Reduction(enum.Enum):
    ASSIGN = "="
    SUM = "+="
    MAX = "max="
    MIN = "min="


@dataclass(frozen=True)
class Statement:
    iter_vars: tuple[str, ...]
    write: AccessFunction
    reads: tuple[AccessFunction, ...]
    combinator: str
    reduction: Reduction


@dataclass(frozen=True)
class ProgramParams:
    names: tuple[str, ...]
    constraint: SemiAlgebraicSystem

    def __post_init__(self):
        if self.constraint.order.variables != self.names:
            raise StructureError("parameter constraint must be over the parameters")

    def holds_at(self, values: Mapping[str, int | Fraction]) -> bool:
        pt = SamplePoint(
            self.constraint.order, tuple(Fraction(values[n]) for n in self.names)
        )
        return self.constraint.holds_at(pt)


@dataclass(frozen=True)
class PerfectNest:
    params: ProgramParams
    loops: tuple[Loop, ...]
    stmt: Statement

    def __post_init__(self):
        names = list(self.params.names) + [l.var for l in self.loops]
        if len(set(names)) != len(names):
            raise StructureError("duplicate variable in nest")
        if self.stmt.iter_vars != tuple(l.var for l in self.loops):
            raise StructureError("statement iteration variables must match the loops")
        order = self.order()
        for i, loop in enumerate(self.loops):
            allowed = set(self.params.names) | {l.var for l in self.loops[:i]}
            for b in (loop.lower, loop.upper):
                if isinstance(b, PolyBound):
                    bad = set(b.poly.vars_used()) - allowed
                    if bad:
                        raise StructureError(
                            f"bound of loop {loop.var!r} uses later variables {sorted(bad)}"
                        )
                elif isinstance(b, RootBound):
                    bad = set(b.poly.vars_used()) - allowed - {loop.var}
                    if bad:
                        raise StructureError(
                            f"root bound of loop {loop.var!r} uses later variables {sorted(bad)}"
                        )
        for acc in (self.stmt.write, *self.stmt.reads):
            for ix in acc.indices:
                if not set(ix.vars_used()) <= set(order.variables):
                    raise StructureError(f"access into {acc.array!r} uses unknown variables")

    def order(self) -> VarOrder:
        return VarOrder(self.params.names + tuple(l.var for l in self.loops))

    def loop_vars(self) -> tuple[str, ...]:
        return tuple(l.var for l in self.loops)


@dataclass(frozen=True)
class LoopProgram:
    nests: tuple[PerfectNest, ...]

    def __post_init__(self):
        arity: dict[str, int] = {}
        for nest in self.nests:
            for acc in (nest.stmt.write, *nest.stmt.reads):
                want = arity.setdefault(acc.array, len(acc.indices))
                if want != len(acc.indices):
                    raise StructureError(
                        f"array {acc.array!r} used with arities {want} and {len(acc.indices)}"
                    )


# ---------------------------------------------------------------------------
# domain systems


def loop_conditions(nest: PerfectNest, order: VarOrder) -> list[SignCondition]:
    """The per-loop interval conditions over the given order."""
    out = []
    for loop in nest.loops:
        x = Polynomial.variable(order, loop.var)
        if isinstance(loop.lower, PolyBound):
            rel = Rel.GE0 if loop.lower_closed else Rel.GT0
            out.append(SignCondition(x - loop.lower.poly.reorder(order), rel))
        elif isinstance(loop.lower, RootBound):
            raise StructureError("domain system requires polynomial bounds")
        if isinstance(loop.upper, PolyBound):
            rel = Rel.LE0 if loop.upper_closed else Rel.LT0
            out.append(SignCondition(x - loop.upper.poly.reorder(order), rel))
        elif isinstance(loop.upper, RootBound):
            raise StructureError("domain system requires polynomial bounds")
    return out


def domain_system(nest: PerfectNest) -> SemiAlgebraicSystem:
    """Parameter constraint joined with every loop's interval conditions."""
    order = nest.order()
    if nest.params.names:
        params = SemiAlgebraicSystem(
            order,
            [
                BasicSystem(
                    order,
                    [SignCondition(c.poly.reorder(order), c.rel) for c in b.conditions],
                )
                for b in nest.params.constraint.systems
            ],
        )
    else:
        params = SemiAlgebraicSystem.true(order)
    body = SemiAlgebraicSystem.of(order, *loop_conditions(nest, order))
    return conj(params, body)


# ---------------------------------------------------------------------------
# DSL


_CLAUSE_RE = re.compile(r"[^;]*;")


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def parse_program(text: str) -> LoopProgram:
    """Parse the loop DSL; see the grammar in the package documentation."""
    clauses: list[tuple[str, int]] = []
    for m in _CLAUSE_RE.finditer(text):
        body = m.group(0)[:-1].strip()
        if body:
            clauses.append((body, m.start()))
    rest = text[text.rfind(";") + 1:].strip() if clauses else text.strip()
    if rest:
        line, col = _line_col(text, len(text) - len(rest))
        raise ParseError("trailing text without ';'", line, col)
    nests: list[PerfectNest] = []
    i = 0
    while i < len(clauses):
        body, pos = clauses[i]
        params = ProgramParams((), SemiAlgebraicSystem.true(VarOrder(())))
        if body.startswith("param"):
            params = _parse_params(body, text, pos)
            i += 1
        loops_raw: list[tuple[str, int]] = []
        while i < len(clauses) and clauses[i][0].startswith("loop"):
            loops_raw.append(clauses[i])
            i += 1
        if not loops_raw:
            line, col = _line_col(text, clauses[i][1] if i < len(clauses) else pos)
            raise ParseError("expected at least one loop clause", line, col)
        if i >= len(clauses) or not clauses[i][0].startswith("stmt"):
            line, col = _line_col(text, clauses[i][1] if i < len(clauses) else pos)
            raise ParseError("expected a stmt clause after the loops", line, col)
        loops = []
        known = list(params.names)
        for raw, rpos in loops_raw:
            loop = _parse_loop(raw, known, text, rpos)
            known.append(loop.var)
            loops.append(loop)
        stmt_raw, spos = clauses[i]
        i += 1
        order = VarOrder(tuple(known))
        stmt = _parse_stmt(stmt_raw, order, tuple(l.var for l in loops), text, spos)
        nests.append(PerfectNest(params, tuple(loops), stmt))
    if not nests:
        raise ParseError("empty program", 1, 1)
    return LoopProgram(tuple(nests))


def _parse_params(body: str, text: str, pos: int) -> ProgramParams:
    m = re.match(r"param\s+([^:]+):(.*)$", body, re.S)
    if not m:
        line, col = _line_col(text, pos)
        raise ParseError("malformed param clause", line, col)
    names = tuple(n.strip() for n in m.group(1).split(","))
    if not all(re.fullmatch(r"[A-Za-z_]\w*", n) for n in names):
        line, col = _line_col(text, pos)
        raise ParseError(f"bad parameter names {names}", line, col)
    order = VarOrder(names)
    try:
        constraint = parse_system(m.group(2).strip(), order)
    except ParseError as e:
        line, col = _line_col(text, pos)
        raise ParseError(f"in param constraint: {e.message}", line, col) from None
    return ProgramParams(names, constraint)


def _parse_bound(textual: str, order: VarOrder, var: str) -> Bound:
    textual = textual.strip()
    if textual == "-inf":
        return Unbounded(False)
    if textual == "inf":
        return Unbounded(True)
    m = re.fullmatch(r"root\((.*),\s*(\d+)\)", textual, re.S)
    if m:
        extended = order.extended((var,))
        return RootBound(parse_polynomial(m.group(1), extended), int(m.group(2)))
    return PolyBound(parse_polynomial(textual, order))


def _parse_loop(body: str, known: list[str], text: str, pos: int) -> Loop:
    m = re.match(
        r"loop\s+([A-Za-z_]\w*)\s*:\s*(.*?)\.\.(.*?)(?:\s+open\s+(left|right|both))?(\s+parallel)?\s*$",
        body,
        re.S,
    )
    if not m:
        line, col = _line_col(text, pos)
        raise ParseError("malformed loop clause", line, col)
    var, lo_text, hi_text, openness, parallel = m.groups()
    if var in known:
        line, col = _line_col(text, pos)
        raise ParseError(f"duplicate loop variable {var!r}", line, col)
    order = VarOrder(tuple(known))
    try:
        lower = _parse_bound(lo_text, order, var)
        upper = _parse_bound(hi_text, order, var)
    except (ParseError, StructureError) as e:
        line, col = _line_col(text, pos)
        raise ParseError(f"in bounds of loop {var!r}: {e}", line, col) from None
    lower_closed = openness not in ("left", "both")
    upper_closed = openness not in ("right", "both")
    return Loop(var, lower, upper, lower_closed, upper_closed, bool(parallel))


_ACCESS_RE = re.compile(r"([A-Za-z_]\w*)((?:\[[^\]]*\])+)")
_REDOPS = [("max=", Reduction.MAX), ("min=", Reduction.MIN), ("+=", Reduction.SUM), ("=", Reduction.ASSIGN)]


def _parse_access(textual: str, order: VarOrder) -> AccessFunction:
    m = _ACCESS_RE.fullmatch(textual.strip())
    if not m:
        raise ParseError(f"malformed access {textual!r}")
    idx_text = re.findall(r"\[([^\]]*)\]", m.group(2))
    return AccessFunction(
        m.group(1), tuple(parse_polynomial(t, order) for t in idx_text)
    )


def _parse_stmt(
    body: str, order: VarOrder, iter_vars: tuple[str, ...], text: str, pos: int
) -> Statement:
    m = re.match(r"stmt\s*:\s*(.*)$", body, re.S)
    if not m:
        line, col = _line_col(text, pos)
        raise ParseError("malformed stmt clause", line, col)
    rest = m.group(1).strip()
    for symbol, reduction in _REDOPS:
        # access syntax cannot contain '=', so the first occurrence splits;
        # compound symbols are tried before the bare '='
        idx = rest.find(symbol)
        if idx > 0:
            lhs, rhs = rest[:idx], rest[idx + len(symbol):]
            break
    else:
        line, col = _line_col(text, pos)
        raise ParseError("stmt has no reduction operator", line, col)
    call = re.fullmatch(r"\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$", rhs, re.S)
    if not call:
        line, col = _line_col(text, pos)
        raise ParseError("stmt right side must be f(access, ...)", line, col)
    try:
        write = _parse_access(lhs, order)
        args = _split_args(call.group(2))
        reads = tuple(_parse_access(a, order) for a in args)
    except (ParseError, StructureError) as e:
        line, col = _line_col(text, pos)
        raise ParseError(f"in stmt accesses: {e}", line, col) from None
    return Statement(iter_vars, write, reads, call.group(1), reduction)


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            args.append("".join(cur))
            cur = []
            continue
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        args.append(tail)
    return [a for a in (s.strip() for s in args) if a]


def bound_to_text(b: Bound) -> str:
    if isinstance(b, Unbounded):
        return "inf" if b.positive else "-inf"
    if isinstance(b, RootBound):
        return f"root({poly_to_text(b.poly)}, {b.root_index})"
    return poly_to_text(b.poly)


def access_to_text(a: AccessFunction) -> str:
    return a.array + "".join(f"[{poly_to_text(ix)}]" for ix in a.indices)


def program_to_text(prog: LoopProgram) -> str:
    chunks = []
    for nest in prog.nests:
        if nest.params.names:
            chunks.append(
                f"param {', '.join(nest.params.names)}: "
                f"{system_to_text(nest.params.constraint)};"
            )
        for loop in nest.loops:
            openness = ""
            if not loop.lower_closed and not loop.upper_closed:
                openness = " open both"
            elif not loop.lower_closed:
                openness = " open left"
            elif not loop.upper_closed:
                openness = " open right"
            parallel = " parallel" if loop.parallel else ""
            chunks.append(
                f"loop {loop.var}: {bound_to_text(loop.lower)}.."
                f"{bound_to_text(loop.upper)}{openness}{parallel};"
            )
        s = nest.stmt
        reads = ", ".join(access_to_text(a) for a in s.reads)
        chunks.append(
            f"stmt: {access_to_text(s.write)} {s.reduction.value} "
            f"{s.combinator}({reads});"
        )
    return "\n".join(chunks) + "\n"


# ---------------------------------------------------------------------------
# CAD tree -> loop program


def cad_to_loops(
    t: CadTree,
    stmt: Statement | Callable[["object"], Statement],
    param_count: int,
    parallel_levels: frozenset[int] = frozenset(),
) -> LoopProgram:
    """One nest per leaf cell, bounds taken from the cell extensions.

    stmt may be a callable taking the leaf cell, for bodies that vary by
    region.  parallel_levels: 1-based loop levels (within the x block) to
    mark parallel.
    """
    order = t.order
    p = param_count
    if p not in (0, 1):
        raise StructureError(
            "parameter regions of dimension >= 2 have no exact text form"
        )
    param_names = order.variables[:p]
    loop_vars = order.variables[p:]
    if not callable(stmt) and stmt.iter_vars != loop_vars:
        raise StructureError("statement iteration variables must match the tree order")
    region_desc: dict[int, SemiAlgebraicSystem] = {}
    if p == 1:
        base = induced(t, 1)
        for cell, desc in describe_line_cells(base):
            region_desc[cell.index[0]] = desc
    nests = []
    for cell in t.cells():
        if p == 1:
            constraint = region_desc[cell.index[0]]
            params = ProgramParams(param_names, constraint)
        else:
            params = ProgramParams((), SemiAlgebraicSystem.true(VarOrder(())))
        loops = []
        for lvl in range(p, len(order)):
            var = order[lvl]
            prefix = VarOrder(order.variables[: lvl + 1])
            ext = cell.stack[lvl]
            parallel = (lvl - p + 1) in parallel_levels
            if isinstance(ext, Section):
                b = _bound_from_root(ext.root_of, ext.root_index, var, prefix)
                loops.append(Loop(var, b, b, True, True, parallel))
            else:
                lo = (
                    Unbounded(False)
                    if ext.lower is None
                    else _bound_from_root(ext.lower.poly, ext.lower.root_index, var, prefix)
                )
                hi = (
                    Unbounded(True)
                    if ext.upper is None
                    else _bound_from_root(ext.upper.poly, ext.upper.root_index, var, prefix)
                )
                loops.append(Loop(var, lo, hi, False, False, parallel))
        body = stmt(cell) if callable(stmt) else stmt
        if body.iter_vars != loop_vars:
            raise StructureError(
                "statement iteration variables must match the tree order"
            )
        nests.append(PerfectNest(params, tuple(loops), body))
    return LoopProgram(tuple(nests))


def _bound_from_root(
    poly: Polynomial, root_index: int, var: str, prefix: VarOrder
) -> Bound:
    p = poly.reorder(prefix)
    if p.degree_in(var) == 1:
        lead = p.leading_coeff_in(var)
        if lead.is_constant():
            a = lead.constant_value()
            rest = p - lead * Polynomial.variable(prefix, var)
            return PolyBound(rest * (Fraction(-1) / a))
    return RootBound(p, root_index)


# ---------------------------------------------------------------------------
# interpretation


Array = dict[tuple[int, ...], int]


@dataclass(frozen=True)
class TraceEvent:
    nest: int
    point: tuple[int, ...]
    write: tuple[str, tuple[int, ...]]
    reads: tuple[tuple[str, tuple[int, ...]], ...]
    value: int


@dataclass
class InterpretResult:
    arrays: dict[str, Array]
    trace: list[TraceEvent] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    truncated: bool = False


def opaque_combinator(name: str, args: Sequence[int]) -> int:
    """Deterministic stand-in for an uninterpreted function symbol."""
    payload = f"{name}({','.join(str(a) for a in args)})".encode()
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def _bound_value(
    b: PolyBound | RootBound, assign: dict[str, Fraction], var: str
) -> Coord | None:
    """Exact endpoint value; None means the loop slot is infeasible."""
    if isinstance(b, PolyBound):
        return b.poly.evaluate(assign)
    q = b.poly.substitute(assign)
    if q.is_zero() or q.degree_in(var) < 1:
        return None
    roots = isolate_roots(q)
    if len(roots) < b.root_index:
        return None
    r = roots[b.root_index - 1]
    return r.value if r.is_rational else r


def _int_range(
    loop: Loop, assign: dict[str, Fraction], clip: int
) -> tuple[range, bool, bool]:
    """(integer range, truncated, infeasible); clip bounds are closed."""
    truncated = False
    if isinstance(loop.lower, Unbounded):
        lo = clip + 1 if loop.lower.positive else -clip
        truncated = True
    else:
        lo_val = _bound_value(loop.lower, assign, loop.var)
        if lo_val is None:
            return (range(0), False, True)
        lo = ceil_coord(lo_val) if loop.lower_closed else floor_coord(lo_val) + 1
    if isinstance(loop.upper, Unbounded):
        hi = clip if loop.upper.positive else -clip - 1
        truncated = True
    else:
        hi_val = _bound_value(loop.upper, assign, loop.var)
        if hi_val is None:
            return (range(0), False, True)
        hi = floor_coord(hi_val) if loop.upper_closed else ceil_coord(hi_val) - 1
    if lo < -clip:
        lo, truncated = -clip, True
    if hi > clip:
        hi, truncated = clip, True
    return (range(lo, hi + 1), truncated, False)


def iterate_nest(
    nest: PerfectNest,
    n_values: Mapping[str, int],
    clip: int,
    truncated_out: list[bool] | None = None,
) -> Iterator[tuple[int, ...]]:
    """Integer iteration vectors of the nest at fixed parameters, lex order."""
    assign = {k: Fraction(v) for k, v in n_values.items()}
    state: list[int] = []

    def rec(depth: int) -> Iterator[tuple[int, ...]]:
        if depth == len(nest.loops):
            yield tuple(state)
            return
        rng, truncated, infeasible = _int_range(nest.loops[depth], assign, clip)
        if truncated and truncated_out is not None:
            truncated_out[0] = True
        if infeasible:
            return
        for v in rng:
            assign[nest.loops[depth].var] = Fraction(v)
            state.append(v)
            yield from rec(depth + 1)
            state.pop()
            del assign[nest.loops[depth].var]

    yield from rec(0)


def interpret(
    prog: LoopProgram,
    n_values: Mapping[str, int],
    arrays_in: Mapping[str, Mapping[tuple[int, ...], int]] | None = None,
    bound: int = 32,
    combinators: Mapping[str, Callable[[Sequence[int]], int]] | None = None,
    on_error: str = "abort",
) -> InterpretResult:
    """Sequential reference execution at fixed integer parameter values.

    Instances of all applicable nests run in lexicographic order of the
    iteration vector (nest index breaks ties).  A program stands in for a
    forest with shared loop prefixes, so sibling nests covering adjacent
    regions of the same space interleave exactly as the shared outer loops
    would drive them.
    """
    arrays: dict[str, Array] = {}
    if arrays_in:
        for name, content in arrays_in.items():
            arrays[name] = {tuple(k): int(v) for k, v in content.items()}
    result = InterpretResult(arrays)
    combinators = combinators or {}
    truncated_holder = [False]
    instances: list[tuple[tuple[int, ...], int]] = []
    for nest_idx, nest in enumerate(prog.nests):
        if nest.params.names and not nest.params.holds_at(n_values):
            continue
        instances.extend(
            (point, nest_idx)
            for point in iterate_nest(nest, n_values, bound, truncated_holder)
        )
    instances.sort()
    assign_base = {k: Fraction(v) for k, v in n_values.items()}
    for point, nest_idx in instances:
        nest = prog.nests[nest_idx]
        assign = dict(assign_base)
        for var, v in zip(nest.loop_vars(), point):
            assign[var] = Fraction(v)
        ok, write_addr = _address(nest.stmt.write, assign, result, on_error)
        if not ok:
            continue
        read_addrs = []
        bad = False
        for acc in nest.stmt.reads:
            ok, addr = _address(acc, assign, result, on_error)
            if not ok:
                bad = True
                break
            read_addrs.append((acc.array, addr))
        if bad:
            continue
        args = [
            arrays.setdefault(name, {}).get(addr, 0) for name, addr in read_addrs
        ]
        fn = combinators.get(nest.stmt.combinator)
        value = fn(args) if fn else opaque_combinator(nest.stmt.combinator, args)
        target = arrays.setdefault(nest.stmt.write.array, {})
        old = target.get(write_addr, 0)
        if nest.stmt.reduction is Reduction.ASSIGN:
            target[write_addr] = value
        elif nest.stmt.reduction is Reduction.SUM:
            target[write_addr] = old + value
        elif nest.stmt.reduction is Reduction.MAX:
            target[write_addr] = max(old, value)
        else:
            target[write_addr] = min(old, value)
        result.trace.append(
            TraceEvent(
                nest_idx,
                point,
                (nest.stmt.write.array, write_addr),
                tuple(read_addrs),
                target[write_addr],
            )
        )
    result.truncated = truncated_holder[0]
    return result


def _address(
    acc: AccessFunction,
    assign: dict[str, Fraction],
    result: InterpretResult,
    on_error: str,
) -> tuple[bool, tuple[int, ...]]:
    addr = []
    for ix in acc.indices:
        v = ix.evaluate(assign)
        if v.denominator != 1:
            msg = f"non-integer index {v} into {acc.array!r}"
            if on_error == "abort":
                raise StructureError(msg)
            result.events.append(msg)
            return (False, ())
        addr.append(int(v))
    return (True, tuple(addr))
