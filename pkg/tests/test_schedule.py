from __future__ import annotations

from fractions import Fraction

import pytest

from conftest import load_nest, load_program
from salp.depend import build_graph
from salp.errors import NoScheduleError, StructureError
from salp.oracle import dependences_bruteforce, schedule_valid
from salp.poly import poly_to_text
from salp.realalg import SamplePoint
from salp.sas import system_to_text
from salp.schedule import (
    default_template,
    integer_grid_points,
    maximize_parallelism,
    pick_schedule,
    qe_forall,
    validity_formula,
)


def analyzed(name: str, degree: int = 1):
    prog = load_program(name)
    nest = prog.nests[0]
    graph = build_graph(prog)
    template = default_template(nest, degree)
    return nest, graph, template


# ---------------------------------------------------------------------------
# templates


def test_linear_template_for_one_loop():
    nest = load_nest("shift")
    t = default_template(nest, 1)
    assert t.params == ("v1_0", "v1_1")
    assert len(t.components) == 1
    assert poly_to_text(t.components[0]) == "v1_1*i + v1_0"


def test_linear_template_for_two_loops():
    nest = load_nest("interchange")
    t = default_template(nest, 1)
    assert t.params == (
        "v1_0_0", "v1_0_1", "v1_1_0",
        "v2_0_0", "v2_0_1", "v2_1_0",
    )
    assert len(t.components) == 2


def test_degree_two_template_adds_quadratic_monomials():
    nest = load_nest("shift")
    t = default_template(nest, 2)
    assert t.params == ("v1_0", "v1_1", "v1_2")
    assert "v1_2*i^2" in poly_to_text(t.components[0].reorder(t.order))


def test_template_without_constant_term():
    nest = load_nest("shift")
    t = default_template(nest, 1, include_constant=False)
    assert t.params == ("v1_1",)


def test_concretize_and_degeneracy():
    nest = load_nest("shift")
    t = default_template(nest, 1)
    m = t.concretize({"v1_0": -1, "v1_1": 1})
    assert poly_to_text(m[0]) == "i - 1"
    assert not t.degenerate_at({"v1_0": -1, "v1_1": 1})
    assert t.degenerate_at({"v1_0": 5, "v1_1": 0})
    with pytest.raises(StructureError):
        t.concretize({"v1_0": 1})


# ---------------------------------------------------------------------------
# the universally quantified validity condition


def test_validity_formula_quantifies_both_copies():
    nest, graph, template = analyzed("shift")
    f = validity_formula(graph.present_edges(), template, 1, nest)
    assert set(f.quantified) == {"n", "i_src", "i_dst"}
    assert f.level == 1
    assert len(f.differences) == 1
    # the matrix keeps the difference oriented source minus destination,
    # required negative
    assert poly_to_text(f.differences[0]) == "v1_1*i_src - v1_1*i_dst"


# ---------------------------------------------------------------------------
# eliminated regions, frozen per fixture


def frozen_region(name: str):
    nest, graph, template = analyzed(name)
    k, region = maximize_parallelism(graph.present_edges(), template, nest)
    return k, system_to_text(region.system), region


def test_shift_region():
    k, text, _ = frozen_region("shift")
    assert (k, text) == (1, "-v1_1 < 0")


def test_parity_region_comes_from_the_anti_edge():
    k, text, _ = frozen_region("parity")
    assert k == 1
    assert text == "-1/2*v1_1 < 0"


def test_multiread_region():
    k, text, _ = frozen_region("multiread")
    assert (k, text) == (1, "-v1_1 < 0")


def test_scalar_region_has_redundant_power_conditions():
    k, text, _ = frozen_region("scalar")
    assert k == 1
    assert text == "v1_1 > 0 && v1_1^2 > 0 && v1_1^3 > 0 && v1_1^4 > 0"


def test_nodep_region_is_everything():
    k, text, region = frozen_region("nodep")
    assert (k, text) == (1, "TRUE")
    assert region.witness is not None


def test_triangular_region_pins_outer_coefficient():
    k, text, _ = frozen_region("triangular")
    assert (k, text) == (2, "-v1_1_0 = 0 && -v2_1_0 < 0")


def test_interchange_region_matches_triangular():
    k, text, _ = frozen_region("interchange")
    assert (k, text) == (2, "-v1_1_0 = 0 && -v2_1_0 < 0")


def test_skew_region_pins_inner_coefficient():
    k, text, _ = frozen_region("skew")
    assert (k, text) == (2, "-v1_0_1 = 0 && -v2_0_1 < 0")


def test_quadratic_bound_region():
    k, text, _ = frozen_region("quadratic_bound")
    assert (k, text) == (2, "-v1_0_1 = 0 && -v2_0_1 < 0")


def test_region_membership_separates_good_from_bad():
    _, _, region = frozen_region("shift")
    order = region.system.order
    good = SamplePoint(order, tuple(Fraction(c) for c in (0, 2)))
    bad = SamplePoint(order, tuple(Fraction(c) for c in (0, -2)))
    assert region.system.holds_at(good)
    assert not region.system.holds_at(bad)


# ---------------------------------------------------------------------------
# witnesses and sampling


def test_witness_lies_in_its_region():
    for name in ("shift", "triangular", "skew"):
        _, _, region = frozen_region(name)
        order = region.system.order
        w = region.witness
        assert w is not None
        pt = SamplePoint(order, tuple(w[v] for v in order.variables))
        assert region.system.holds_at(pt)


def test_integer_grid_points_deterministic_and_inside():
    _, _, region = frozen_region("shift")
    a = list(integer_grid_points(region.system, radius=2, count=6))
    b = list(integer_grid_points(region.system, radius=2, count=6))
    assert a == b and len(a) == 6
    order = region.system.order
    for pt in a:
        sp = SamplePoint(order, tuple(pt[v] for v in order.variables))
        assert region.system.holds_at(sp)


def test_pick_schedule_prefers_small_integers():
    nest, graph, template = analyzed("shift")
    k, region = maximize_parallelism(graph.present_edges(), template, nest)
    v = pick_schedule(region, template, nondegenerate=True)
    assert v["v1_1"] > 0
    assert all(abs(c) <= 3 for c in v.values())
    assert not template.degenerate_at(v)


def test_pick_schedule_on_empty_region_raises():
    nest, graph, template = analyzed("shift")
    from salp.sas import SemiAlgebraicSystem
    from salp.schedule import ValidityRegion

    empty = ValidityRegion(SemiAlgebraicSystem.empty(template.order.prefix(2)), None)
    with pytest.raises(NoScheduleError):
        pick_schedule(empty, template)


def test_picked_schedules_satisfy_the_oracle():
    for name in ("shift", "triangular", "skew", "scalar"):
        nest, graph, template = analyzed(name)
        k, region = maximize_parallelism(graph.present_edges(), template, nest)
        v = pick_schedule(region, template, nondegenerate=True)
        m = template.concretize(v)
        for n in (2, 3):
            pairs = dependences_bruteforce(nest, {"n": n})
            ok, violations = schedule_valid(pairs, m, nest, {"n": n})
            assert ok, (name, n, violations)


def test_no_present_edges_gives_deepest_level():
    nest, graph, template = analyzed("shift")
    k, region = maximize_parallelism((), template, nest)
    # nothing constrains the coefficients, so every level is valid
    assert k == len(template.components)
    assert system_to_text(region.system) == "TRUE"
