from __future__ import annotations

import json
from fractions import Fraction

import pytest

from salp.cad import (
    CadConfig,
    Section,
    Sector,
    build_cad,
    cells_satisfying,
    describe_line_cells,
    induced,
    leaves_containing,
    projection,
    rational_between,
    specialize_tree,
    tree_to_json,
)
from salp.errors import BudgetExceeded, StructureError
from salp.poly import VarOrder, parse_polynomial
from salp.realalg import isolate_roots
from salp.sas import parse_system

X = VarOrder.of("x")
XY = VarOrder.of("x", "y")


def circle_tree(order: VarOrder = XY):
    return build_cad([parse_polynomial("x^2 + y^2 - 1", order)], order)


# ---------------------------------------------------------------------------
# one-variable decompositions


def test_line_cad_of_sqrt2():
    p = parse_polynomial("x^2 - 2", X)
    t = build_cad([p], X)
    cells = t.cells()
    assert len(cells) == 5
    assert [c.signs[p] for c in cells] == [1, 0, -1, 0, 1]
    kinds = [type(c.stack[0]) for c in cells]
    assert kinds == [Sector, Section, Sector, Section, Sector]


def test_line_cad_with_no_roots_is_one_cell():
    p = parse_polynomial("x^2 + 1", X)
    t = build_cad([p], X)
    assert len(t.cells()) == 1
    assert t.cells()[0].signs[p] == 1


def test_describe_line_cells_systems_partition_the_line():
    p = parse_polynomial("x^2 - 2", X)
    t = build_cad([p], X)
    descs = describe_line_cells(t)
    assert len(descs) == 5
    # every probe lands in exactly one description
    probes = [Fraction(n, 4) for n in range(-12, 13)]
    from salp.realalg import SamplePoint

    for v in probes:
        hits = [1 for _, s in descs if s.holds_at(SamplePoint(X, (v,)))]
        assert sum(hits) == 1


# ---------------------------------------------------------------------------
# the unit circle in two variables


def test_circle_has_thirteen_cells_in_five_stacks():
    t = circle_tree()
    assert len(t.cells()) == 13
    widths = [len(child.children) for child in t.root.children]
    assert widths == [1, 3, 5, 3, 1]


def test_circle_cells_satisfying_each_sign():
    t = circle_tree()
    inside = cells_satisfying(t, parse_system("x^2 + y^2 - 1 < 0", XY))
    on = cells_satisfying(t, parse_system("x^2 + y^2 - 1 = 0", XY))
    outside = cells_satisfying(t, parse_system("x^2 + y^2 - 1 > 0", XY))
    assert len(inside) == 1
    assert len(on) == 4
    assert len(outside) == 8


def test_circle_section_cells_have_algebraic_or_tangent_samples():
    t = circle_tree()
    p = t.inputs[0]
    on = cells_satisfying(t, parse_system("x^2 + y^2 - 1 = 0", XY))
    for cell in on:
        assert isinstance(cell.stack[1], Section)
        x0, y0 = cell.sample.coords
        # the sample really lies on the circle
        from salp.realalg import sign_at

        assert sign_at(p, cell.sample) == 0


def test_induced_base_decomposition():
    t = circle_tree()
    base = induced(t, 1)
    assert len(base.cells()) == 5
    # boundary x-values are -1 and 1, so cell samples straddle them
    samples = [c.sample.coords[0] for c in base.cells()]
    assert samples[0] < -1 and samples[-1] > 1


def test_specialize_tree_at_interior_line():
    t = circle_tree()
    line = specialize_tree(t, {"x": Fraction(0)})
    # y^2 - 1 has two roots: five cells on the vertical line
    assert len(line.cells()) == 5
    spec = parse_polynomial("y^2 - 1", VarOrder.of("y"))
    signs = [c.signs[spec] for c in line.cells()]
    assert signs == [1, 0, -1, 0, 1]


def test_specialize_tree_outside_the_circle():
    t = circle_tree()
    line = specialize_tree(t, {"x": Fraction(2)})
    assert len(line.cells()) == 1


def test_specialize_tree_rejects_non_prefix():
    t = circle_tree()
    with pytest.raises(StructureError):
        specialize_tree(t, {"y": Fraction(0)})


# ---------------------------------------------------------------------------
# point location


def test_leaves_containing_interior_point():
    t = circle_tree()
    hits = leaves_containing(t, (Fraction(0), Fraction(0)))
    assert len(hits) == 1
    assert hits[0].signs[t.inputs[0]] == -1


def test_leaves_containing_far_point():
    t = circle_tree()
    hits = leaves_containing(t, (Fraction(3), Fraction(-2)))
    assert len(hits) == 1
    assert hits[0].signs[t.inputs[0]] == 1


def test_leaves_containing_boundary_point():
    t = circle_tree()
    hits = leaves_containing(t, (Fraction(1), Fraction(0)))
    assert len(hits) == 1
    assert hits[0].signs[t.inputs[0]] == 0


def test_leaves_cover_a_probe_grid_exactly_once():
    t = circle_tree()
    for num_x in range(-5, 6):
        for num_y in range(-5, 6):
            pt = (Fraction(num_x, 3), Fraction(num_y, 3))
            assert len(leaves_containing(t, pt)) == 1


# ---------------------------------------------------------------------------
# helpers and budgets


def test_rational_between_algebraic_endpoints():
    lo = isolate_roots(parse_polynomial("x^2 - 2", X))[1]
    hi = isolate_roots(parse_polynomial("x^2 - 3", X))[1]
    mid = rational_between(lo, hi)
    assert mid * mid > 2 and mid * mid < 3


def test_projection_produces_discriminant_information():
    p = parse_polynomial("x^2 + y^2 - 1", XY)
    projected = projection([p], "y")
    # some projected polynomial must vanish at the tangent lines x = ±1
    assert any(
        q.substitute({"x": Fraction(1)}).is_zero()
        or q.substitute({"x": Fraction(1)}).is_constant()
        and q.substitute({"x": Fraction(1)}).constant_value() == 0
        for q in projected
    )


def test_variable_cap_is_enforced():
    names = tuple(f"t{i}" for i in range(11))
    order = VarOrder(names)
    p = parse_polynomial("t0 + t10", order)
    with pytest.raises(BudgetExceeded):
        build_cad([p], order, CadConfig())


def test_empty_order_is_rejected():
    with pytest.raises(StructureError):
        build_cad([], VarOrder(()))


# ---------------------------------------------------------------------------
# serialization


def test_tree_to_json_is_deterministic():
    a = json.dumps(tree_to_json(circle_tree()), sort_keys=True)
    b = json.dumps(tree_to_json(circle_tree()), sort_keys=True)
    assert a == b


def test_tree_to_json_shape():
    doc = tree_to_json(circle_tree())
    assert doc["order"] == ["x", "y"]
    assert len(doc["inputs"]) == 1
    assert "root" in doc
