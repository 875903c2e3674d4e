from __future__ import annotations

import pytest

from conftest import FIXTURE_NAMES, load_nest, load_program
from salp.depend import (
    DependenceKind,
    build_ds,
    build_graph,
    copies_order,
    integer_points_at,
    is_empty_int_at,
    is_empty_real,
)
from salp.errors import BudgetExceeded, StructureError
from salp.oracle import dependences_bruteforce
from salp.poly import VarOrder
from salp.sas import parse_system, system_to_text


# ---------------------------------------------------------------------------
# system construction


def test_copies_order_shift():
    assert copies_order(load_nest("shift")).variables == ("n", "i_src", "i_dst")


def test_shift_flow_system_text():
    ds = build_ds(load_nest("shift"), 1)
    assert system_to_text(ds) == (
        "n - 2 >= 0 && i_src - 1 >= 0 && -n + i_src <= 0 && "
        "i_dst - 1 >= 0 && -n + i_dst <= 0 && "
        "i_src - i_dst + 1 = 0 && i_src - i_dst < 0"
    )


def test_two_level_nest_gets_one_disjunct_per_level():
    ds = build_ds(load_nest("interchange"), 1)
    assert len(ds.systems) == 2
    # second disjunct pins the outer copies equal
    second = system_to_text(ds).split(" || ")[1]
    assert "i_src - i_dst = 0" in second


def test_transposed_system_swaps_address_roles():
    nest = load_nest("multiread")  # A[i] = f(A[i-1], A[i+1])
    war = build_ds(nest, 2, transposed=True)
    # src reads A[i+1], dst writes A[i]: src + 1 = dst
    assert "i_src - i_dst + 1 = 0" in system_to_text(war)


def test_build_ds_rejects_bad_access_index():
    with pytest.raises(StructureError):
        build_ds(load_nest("shift"), 5)


def test_build_ds_rejects_foreign_array():
    with pytest.raises(StructureError):
        build_ds(load_nest("nodep"), 1)  # read names B, write names A


# ---------------------------------------------------------------------------
# real emptiness


def test_shift_flow_is_real_nonempty():
    assert not is_empty_real(build_ds(load_nest("shift"), 1))


def test_shift_output_and_anti_are_real_empty():
    nest = load_nest("shift")
    assert is_empty_real(build_ds(nest, 0))
    assert is_empty_real(build_ds(nest, 1, transposed=True))


def test_parity_flow_is_real_empty_but_anti_is_not():
    nest = load_nest("parity")  # A[2i] = f(A[2i+1])
    # 2 src = 2 dst + 1 has no real solution at all
    assert is_empty_real(build_ds(nest, 1))
    # 2 dst = 2 src + 1 is solvable over the reals (dst = src + 1/2)
    assert not is_empty_real(build_ds(nest, 1, transposed=True))


def test_square_index_flow_real_nonempty():
    # src^2 = dst^2 - 1 touches real points inside the domain
    assert not is_empty_real(build_ds(load_nest("square_index"), 1))


def test_square_index_anti_real_empty():
    # dst^2 = src^2 - 1 with src < dst cannot happen over the reals
    assert is_empty_real(build_ds(load_nest("square_index"), 1, transposed=True))


# ---------------------------------------------------------------------------
# integer points at fixed parameters


def test_shift_integer_points_match_oracle():
    nest = load_nest("shift")
    ds = build_ds(nest, 1)
    got = integer_points_at(ds, {"n": 4})
    want = sorted(
        p.src.coords + p.dst.coords
        for p in dependences_bruteforce(nest, {"n": 4})
        if p.kind is DependenceKind.RAW
    )
    assert got == want == [(1, 2), (2, 3), (3, 4)]


def test_parity_integer_points_are_empty_despite_real_solutions():
    nest = load_nest("parity")
    war = build_ds(nest, 1, transposed=True)
    for n in range(1, 11):
        assert is_empty_int_at(war, {"n": n})
    assert not is_empty_real(war)


def test_triangular_integer_points():
    ds = build_ds(load_nest("triangular"), 1)
    assert integer_points_at(ds, {"n": 3}) == [
        (1, 1, 2, 1),
        (2, 1, 3, 1),
        (2, 2, 3, 2),
    ]


def test_quadratic_bound_integer_points():
    nest = load_nest("quadratic_bound")
    ds = build_ds(nest, 1)
    got = set(integer_points_at(ds, {"n": 2}))
    want = {
        p.src.coords + p.dst.coords
        for p in dependences_bruteforce(nest, {"n": 2})
        if p.kind is DependenceKind.RAW
    }
    assert got == want


def test_integer_points_respect_limit():
    ds = build_ds(load_nest("shift"), 1)
    assert len(integer_points_at(ds, {"n": 10}, limit=2)) == 2


def test_integer_points_budget_trips_on_wide_systems():
    order = VarOrder.of("x", "y")
    s = parse_system("x + y > 0", order)
    with pytest.raises(BudgetExceeded):
        integer_points_at(s, {}, bound=64, node_budget=50)


def test_integer_points_unknown_parameter_rejected():
    ds = build_ds(load_nest("shift"), 1)
    with pytest.raises(StructureError):
        integer_points_at(ds, {"m": 3})


# ---------------------------------------------------------------------------
# whole-program graphs


def test_shift_graph_keeps_absent_edges():
    g = build_graph(load_program("shift"))
    kinds = [(e.kind.value, e.absent) for e in g.edges]
    assert kinds == [("WAW", True), ("RAW", False), ("WAR", True)]
    assert [e.kind.value for e in g.present_edges()] == ["RAW"]


def test_nodep_graph_has_single_absent_output_edge():
    g = build_graph(load_program("nodep"))
    assert [e.kind.value for e in g.edges] == ["WAW"]
    assert g.present_edges() == ()


def test_multiread_graph_edge_census():
    g = build_graph(load_program("multiread"))
    present = sorted(e.kind.value for e in g.present_edges())
    assert present == ["RAW", "WAR"]


def test_every_fixture_graph_builds(corpus):
    for name in FIXTURE_NAMES:
        g = build_graph(corpus[name])
        assert g.edges, name


def test_graph_edges_agree_with_bruteforce_over_small_parameters(corpus):
    # integer solutions of every edge system, summed over kinds, must equal
    # the oracle's pair census exactly
    for name in ("shift", "parity", "scalar", "multiread"):
        prog = corpus[name]
        nest = prog.nests[0]
        g = build_graph(prog)
        for n in (1, 2, 3):
            got = set()
            for e in g.edges:
                for tup in integer_points_at(e.ds, {"n": n}):
                    got.add((e.kind.value, e.access_index, tup))
            want = {
                (p.kind.value, p.access_index or 0, p.src.coords + p.dst.coords)
                for p in dependences_bruteforce(nest, {"n": n})
            }
            assert got == want, (name, n)
