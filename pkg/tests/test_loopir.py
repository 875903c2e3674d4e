from __future__ import annotations

from fractions import Fraction

import pytest

from conftest import FIXTURE_NAMES, fixture_text, load_nest, load_program
from salp.cad import build_cad
from salp.errors import ParseError, StructureError
from salp.loopir import (
    AccessFunction,
    Reduction,
    RootBound,
    Statement,
    Unbounded,
    bound_to_text,
    cad_to_loops,
    domain_system,
    interpret,
    iterate_nest,
    parse_program,
    program_to_text,
)
from salp.poly import VarOrder, parse_polynomial, poly_to_text
from salp.sas import system_to_text


# ---------------------------------------------------------------------------
# parsing and printing


def test_all_fixtures_roundtrip_byte_identically():
    for name in FIXTURE_NAMES:
        text = fixture_text(name)
        assert program_to_text(parse_program(text)) == text


def test_parse_shift_structure():
    nest = load_nest("shift")
    assert nest.params.names == ("n",)
    assert [l.var for l in nest.loops] == ["i"]
    assert nest.stmt.write.array == "A"
    assert nest.stmt.reduction is Reduction.ASSIGN
    assert nest.stmt.combinator == "f"
    assert poly_to_text(nest.stmt.reads[0].indices[0]) == "i - 1"


def test_parse_two_nests():
    prog = parse_program(
        "loop i: 0..3;\nstmt: A[i] = f(B[i]);\n"
        "loop j: 0..3;\nstmt: B[j] = g(A[j]);\n"
    )
    assert len(prog.nests) == 2
    assert prog.nests[1].stmt.combinator == "g"


def test_parse_open_bounds_and_parallel_flags():
    prog = parse_program("loop i: 0..5 open both parallel;\nstmt: A[i] = f(A[i]);\n")
    loop = prog.nests[0].loops[0]
    assert not loop.lower_closed and not loop.upper_closed
    assert loop.parallel
    assert " open both parallel;" in program_to_text(prog)


def test_parse_root_bounds_roundtrip():
    text = "loop i: root(i^2 - 2, 1)..root(i^2 - 2, 2);\nstmt: A[i] = f(A[i]);\n"
    prog = parse_program(text)
    lo = prog.nests[0].loops[0].lower
    assert isinstance(lo, RootBound)
    assert lo.root_index == 1
    assert program_to_text(prog) == text


def test_parse_infinite_bounds():
    prog = parse_program("loop i: -inf..inf;\nstmt: A[i] = f(A[i]);\n")
    assert isinstance(prog.nests[0].loops[0].lower, Unbounded)
    assert bound_to_text(prog.nests[0].loops[0].upper) == "inf"


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as e:
        parse_program("loop i: 1..n;\nstmt: A[i] = f(A[i]);\n")
    assert "unknown variable" in str(e.value)

    with pytest.raises(ParseError):
        parse_program("stmt: A[i] = f(A[i]);\n")  # no loop clause

    with pytest.raises(ParseError):
        parse_program("loop i: 1..3;\nstmt: A[i] = f(A[i])\n")  # missing ';'

    with pytest.raises(ParseError):
        parse_program("loop i: 1..3;\nloop i: 1..3;\nstmt: A[i] = f(A[i]);\n")

    with pytest.raises(ParseError):
        parse_program("loop i: 1..3;\nstmt: A[i] = i + 1;\n")  # rhs not a call


def test_reduction_operators_parse():
    for symbol, red in [("+=", Reduction.SUM), ("max=", Reduction.MAX), ("min=", Reduction.MIN)]:
        prog = parse_program(f"loop i: 1..3;\nstmt: S[0] {symbol} f(A[i]);\n")
        assert prog.nests[0].stmt.reduction is red


# ---------------------------------------------------------------------------
# iteration domains as systems


def test_domain_system_of_shift():
    nest = load_nest("shift")
    ds = domain_system(nest)
    assert ds.order.variables == ("n", "i")
    assert system_to_text(ds) == "n - 2 >= 0 && i - 1 >= 0 && -n + i <= 0"


def test_domain_system_open_bounds_are_strict():
    prog = parse_program("loop i: 0..4 open left;\nstmt: A[i] = f(A[i]);\n")
    ds = domain_system(prog.nests[0])
    assert system_to_text(ds) == "i > 0 && i - 4 <= 0"


def test_domain_system_triangular_inner_bound_uses_outer_var():
    nest = load_nest("triangular")
    ds = domain_system(nest)
    assert "i - j >= 0" in system_to_text(ds) or "-i + j <= 0" in system_to_text(ds)


# ---------------------------------------------------------------------------
# reference interpretation


def test_interpret_shift_chain_with_increment():
    prog = load_program("shift")
    out = interpret(
        prog,
        {"n": 3},
        arrays_in={"A": {(0,): 0}},
        combinators={"f": lambda args: args[0] + 1},
    )
    assert out.arrays["A"] == {(0,): 0, (1,): 1, (2,): 2, (3,): 3}
    assert [ev.point for ev in out.trace] == [(1,), (2,), (3,)]
    assert not out.truncated


def test_interpret_outside_parameter_region_runs_nothing():
    prog = load_program("shift")  # requires n >= 2
    out = interpret(prog, {"n": 1}, arrays_in={"A": {(0,): 7}})
    assert out.trace == []
    assert out.arrays["A"] == {(0,): 7}


def test_interpret_sum_reduction_accumulates():
    prog = parse_program("loop i: 1..4;\nstmt: S[0] += f(A[i]);\n")
    arrays = {"A": {(1,): 1, (2,): 2, (3,): 3, (4,): 4}, "S": {(0,): 0}}
    out = interpret(prog, {}, arrays_in=arrays, combinators={"f": lambda a: a[0]})
    assert out.arrays["S"][(0,)] == 10


def test_interpret_max_reduction():
    prog = parse_program("loop i: 1..3;\nstmt: S[0] max= f(A[i]);\n")
    arrays = {"A": {(1,): 5, (2,): 9, (3,): 2}, "S": {(0,): 0}}
    out = interpret(prog, {}, arrays_in=arrays, combinators={"f": lambda a: a[0]})
    assert out.arrays["S"][(0,)] == 9


def test_interpret_unread_cells_default_to_zero():
    prog = load_program("shift")
    out = interpret(prog, {"n": 2}, combinators={"f": lambda a: a[0] + 1})
    # A[0] was never written, reads as 0
    assert out.arrays["A"][(1,)] == 1


def test_interpret_merges_sibling_nests_in_lexicographic_order():
    # two nests over adjacent ranges of the same space: the merged trace
    # must follow iteration order, not program order
    prog = parse_program(
        "loop i: 3..4;\nstmt: A[i] = f(A[i - 1]);\n"
        "loop i: 1..2;\nstmt: A[i] = f(A[i - 1]);\n"
    )
    out = interpret(
        prog, {}, arrays_in={"A": {(0,): 0}}, combinators={"f": lambda a: a[0] + 1}
    )
    assert [ev.point for ev in out.trace] == [(1,), (2,), (3,), (4,)]
    assert out.arrays["A"][(4,)] == 4


def test_interpret_tie_breaks_by_nest_index():
    prog = parse_program(
        "loop i: 1..1;\nstmt: A[0] = f(B[0]);\n"
        "loop i: 1..1;\nstmt: A[0] = g(B[0]);\n"
    )
    out = interpret(
        prog, {}, arrays_in={"B": {(0,): 1}},
        combinators={"f": lambda a: 10, "g": lambda a: 20},
    )
    assert [ev.nest for ev in out.trace] == [0, 1]
    assert out.arrays["A"][(0,)] == 20


def test_interpret_truncates_runaway_domains():
    prog = parse_program("loop i: 1..100;\nstmt: A[i] = f(A[i]);\n")
    out = interpret(prog, {}, bound=5)
    assert out.truncated


def test_iterate_nest_matches_bounds():
    nest = load_nest("triangular")
    flag = [False]
    pts = list(iterate_nest(nest, {"n": 3}, 32, flag))
    assert pts == [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)]


def test_interpret_fractional_address_is_skipped_by_default():
    prog = parse_program("loop i: 1..3;\nstmt: A[1/2*i] = f(A[i]);\n")
    out = interpret(prog, {}, on_error="skip")
    # only i = 2 produces an integer address
    assert [ev.point for ev in out.trace] == [(2,)]


# ---------------------------------------------------------------------------
# loop recovery from decompositions


def test_cad_to_loops_single_sector_with_algebraic_bounds():
    order = VarOrder.of("x")
    p = parse_polynomial("x^2 - 2", order)
    t = build_cad([p], order)
    stmt = Statement(
        ("x",),
        AccessFunction("A", (parse_polynomial("x", order),)),
        (AccessFunction("A", (parse_polynomial("x", order),)),),
        "f",
        Reduction.ASSIGN,
    )
    prog = cad_to_loops(t, stmt, 0)
    text = program_to_text(prog)
    assert "root(x^2 - 2, 1)" in text and "root(x^2 - 2, 2)" in text
    # the program text round-trips and the middle sector nest covers exactly
    # the integers strictly between -sqrt(2) and sqrt(2)
    reparsed = parse_program(text)
    middle = reparsed.nests[2]
    flag = [False]
    assert list(iterate_nest(middle, {}, 32, flag)) == [(-1,), (0,), (1,)]


def test_cad_to_loops_statement_vars_must_match():
    order = VarOrder.of("x")
    t = build_cad([parse_polynomial("x - 1", order)], order)
    stmt = Statement(
        ("z",),
        AccessFunction("A", (parse_polynomial("x", order),)),
        (),
        "f",
        Reduction.ASSIGN,
    )
    with pytest.raises(StructureError):
        cad_to_loops(t, stmt, 0)


def test_cad_to_loops_parameter_regions_get_guards():
    order = VarOrder.of("n", "x")
    # x ranges over [0, n]: cells where x - n has consistent sign
    polys = [
        parse_polynomial("x", order),
        parse_polynomial("x - n", order),
        parse_polynomial("n - 1", order),
    ]
    t = build_cad(polys, order)
    stmt = Statement(
        ("x",),
        AccessFunction("A", (parse_polynomial("x", order),)),
        (),
        "f",
        Reduction.ASSIGN,
    )
    prog = cad_to_loops(t, stmt, 1)
    assert len(prog.nests) == len(t.cells())
    # every nest carries a parameter guard over n
    assert all(nest.params.names == ("n",) for nest in prog.nests)
