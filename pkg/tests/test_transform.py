from __future__ import annotations

import json
from fractions import Fraction

import pytest

from conftest import load_nest, load_program
from salp.depend import build_graph
from salp.errors import IntegerValidityFailed, StructureError, TransformFailed
from salp.loopir import interpret, parse_program, program_to_text
from salp.oracle import check_bijection
from salp.poly import parse_polynomial, poly_to_text
from salp.schedule import default_template, maximize_parallelism
from salp.transform import (
    build_et,
    check_integer_validity,
    concrete_template,
    emit,
    image_vars,
    transform,
)


def concrete(name: str, *component_texts: str):
    nest = load_nest(name)
    order = nest.order()
    comps = [parse_polynomial(t, order) for t in component_texts]
    return nest, concrete_template(nest, comps)


def seeded_grid(n: int) -> dict[tuple[int, int], int]:
    return {(a, b): 100 * a + b + 7 for a in range(n + 1) for b in range(n + 1)}


def final_arrays(prog, n: int, arrays_in):
    return interpret(prog, {"n": n}, arrays_in=arrays_in).arrays


# ---------------------------------------------------------------------------
# plumbing


def test_image_vars_are_fresh():
    assert image_vars(load_nest("interchange")) == ("y1", "y2")
    bad = parse_program("loop y1: 1..3;\nstmt: A[y1] = f(A[y1]);\n").nests[0]
    with pytest.raises(StructureError):
        image_vars(bad)


def test_concrete_template_arity_check():
    nest = load_nest("interchange")
    with pytest.raises(StructureError):
        concrete_template(nest, [parse_polynomial("i", nest.order())])


def test_build_et_couples_domain_and_image():
    nest, template = concrete("shift", "i - 1")
    et = build_et(nest, template)
    assert et.order.variables == ("n", "y1", "i")
    text = str(et)
    assert "y1 - i + 1 = 0" in text or "-y1 + i - 1 = 0" in text


# ---------------------------------------------------------------------------
# identity and interchange on a square domain


def test_identity_transform_keeps_the_program_shape():
    nest, template = concrete("interchange", "i", "j")
    result = transform(nest, template)
    assert len(result.cases) == 1
    case = result.cases[0]
    xi = case.uniform_xi()
    assert xi is not None
    assert [poly_to_text(e) for e in xi] == ["y1", "y2"]
    text = program_to_text(case.program)
    assert "A[y1][y2] = f(A[y1 - 1][y2])" in text
    report = check_integer_validity(
        result, nest, template, None, [{"n": k} for k in (1, 2, 3)]
    )
    assert report.ok


def test_interchange_transform_swaps_subscripts():
    nest, template = concrete("interchange", "j", "i")
    result = transform(nest, template)
    case = result.cases[0]
    xi = case.uniform_xi()
    assert [poly_to_text(e) for e in xi] == ["y2", "y1"]
    assert "A[y2][y1] = f(A[y2 - 1][y1])" in program_to_text(case.program)


def test_interchange_transform_is_equivalent_under_interpretation():
    nest, template = concrete("interchange", "j", "i")
    result = transform(nest, template)
    prog = result.cases[0].program
    original = load_program("interchange")
    for n in (1, 2, 3):
        seed = seeded_grid(n)
        assert final_arrays(prog, n, {"A": seed}) == final_arrays(
            original, n, {"A": seed}
        )


def test_interchange_bijection_audit():
    nest, template = concrete("interchange", "j", "i")
    result = transform(nest, template)
    m = template.components
    for n in (2, 3):
        report = check_bijection(nest, result.cases[0].program, list(m), {"n": n})
        assert report.ok, report.failures


# ---------------------------------------------------------------------------
# skewing splits the image space


def test_skew_transform_solves_a_triangular_change_of_basis():
    nest, template = concrete("skew", "i + j", "j")
    result = transform(nest, template)
    case = result.cases[0]
    xi = case.uniform_xi()
    assert [poly_to_text(e) for e in xi] == ["y1 - y2", "y2"]
    # the image region needs more than one nest to describe
    assert len(case.program.nests) > 1


def test_skew_transform_is_equivalent_under_interpretation():
    nest, template = concrete("skew", "i + j", "j")
    result = transform(nest, template)
    prog = result.cases[0].program
    original = load_program("skew")
    for n in (1, 2, 3, 4):
        seed = seeded_grid(n)
        assert final_arrays(prog, n, {"A": seed}) == final_arrays(
            original, n, {"A": seed}
        )


def test_skew_integer_validity():
    nest, template = concrete("skew", "i + j", "j")
    result = transform(nest, template)
    report = check_integer_validity(
        result, nest, template, None, [{"n": k} for k in (1, 2, 3, 4)]
    )
    assert report.ok
    assert [e.n_values for e in report.entries] == [{"n": k} for k in (1, 2, 3, 4)]


def test_parallel_levels_are_annotated():
    nest, template = concrete("skew", "i + j", "j")
    result = transform(nest, template, parallel_levels=frozenset({2}))
    text = program_to_text(result.cases[0].program)
    assert " parallel;" in text


# ---------------------------------------------------------------------------
# parametric coefficients keep one case per region cell


def test_parametric_shift_concretizes_at_the_witness():
    prog = load_program("shift")
    nest = prog.nests[0]
    graph = build_graph(prog)
    template = default_template(nest, 1)
    k, region = maximize_parallelism(graph.present_edges(), template, nest)
    assert k == 1
    result = transform(nest, template, ev=region)
    assert len(result.cases) == 1
    case = result.cases[0]
    assert case.v_values == {"v1_0": Fraction(-1), "v1_1": Fraction(1)}
    # the image interval [0, n-1] splits at its endpoint sections, each with
    # the inverse already specialized to the boundary
    xi_texts = {tuple(poly_to_text(e) for e in exprs) for exprs in case.xi.values()}
    assert xi_texts == {("1",), ("y1 + 1",), ("n",)}
    assert "A[y1 + 1] = f(A[y1])" in program_to_text(case.program)
    report = check_integer_validity(
        result, nest, template, case.v_values, [{"n": k} for k in (2, 3, 4)]
    )
    assert report.ok


def test_parametric_shift_transformed_program_is_equivalent():
    prog = load_program("shift")
    nest = prog.nests[0]
    graph = build_graph(prog)
    template = default_template(nest, 1)
    _, region = maximize_parallelism(graph.present_edges(), template, nest)
    result = transform(nest, template, ev=region)
    out_prog = result.cases[0].program
    for n in (2, 3, 4):
        seed = {(k,): k + 11 for k in range(n + 1)}
        assert final_arrays(out_prog, n, {"A": seed}) == final_arrays(
            prog, n, {"A": seed}
        )


# ---------------------------------------------------------------------------
# failure modes


def test_nonlinear_schedule_fails_with_diagnostic():
    nest, template = concrete("shift", "i^2")
    with pytest.raises(TransformFailed):
        transform(nest, template)


def test_non_injective_schedule_fails():
    nest, template = concrete("interchange", "i + j", "i + j")
    with pytest.raises(TransformFailed):
        transform(nest, template)


def test_halving_schedule_fails_integer_validity_with_counterexample():
    nest, template = concrete("shift", "1/2*i")
    result = transform(nest, template)
    with pytest.raises(IntegerValidityFailed) as e:
        check_integer_validity(result, nest, template, None, [{"n": 2}, {"n": 3}])
    assert "not integral" in str(e.value) or "integral" in str(e.value)


# ---------------------------------------------------------------------------
# emission


def test_emit_dsl_matches_program_text():
    nest, template = concrete("interchange", "j", "i")
    result = transform(nest, template)
    assert emit(result, "dsl") == program_to_text(result.cases[0].program)


def test_emit_json_is_stable_and_parseable():
    nest, template = concrete("interchange", "j", "i")
    result = transform(nest, template)
    a = emit(result, "json")
    b = emit(result, "json")
    assert a == b
    doc = json.loads(a)
    assert doc["schema"] == "transform/1"
    assert doc["cases"][0]["coefficients"] is None
    inverses = set()
    for exprs in doc["cases"][0]["inverse"].values():
        inverses.add(tuple(exprs))
    assert inverses == {("y2", "y1")}


def test_emit_rejects_unknown_format():
    nest, template = concrete("interchange", "j", "i")
    result = transform(nest, template)
    with pytest.raises(StructureError):
        emit(result, "xml")
