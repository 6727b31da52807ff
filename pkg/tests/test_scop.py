"""SCoP parsing, validation, and memory-based dependence analysis."""

import json
import random
from pathlib import Path

import pytest

from oracles import (
    brute_force_dependence_pairs,
    library_dependence_pairs,
    random_scop,
    textual_precedes,
)
from polygym import (
    ConstraintKind,
    ValidationError,
    compute_memory_dependences,
    parse_scop,
    serialize_scop,
    validate_binding,
)

MATVEC = Path(__file__).resolve().parent.parent / "scops" / "matvec.json"


@pytest.fixture(scope="module")
def matvec():
    return parse_scop(MATVEC.read_text())


def test_parse_matvec_shape(matvec):
    assert [s.name for s in matvec.statements] == ["S", "T"]
    assert matvec.statement("S").depth == 1
    assert matvec.statement("T").depth == 2
    assert matvec.params == ("N",)
    assert matvec.statement("T").position == (1, 0, 0, 0, 0)


def test_serialize_round_trip(matvec):
    text = serialize_scop(matvec)
    again = parse_scop(text)
    assert again == matvec
    assert serialize_scop(again) == text


def test_parse_rejects_bad_position_length():
    data = json.loads(MATVEC.read_text())
    data["statements"][0]["position"] = [0, 0]
    with pytest.raises(ValidationError):
        parse_scop(json.dumps(data))


def test_parse_rejects_nonzero_iterator_slot():
    data = json.loads(MATVEC.read_text())
    data["statements"][0]["position"] = [0, 1, 0]
    with pytest.raises(ValidationError):
        parse_scop(json.dumps(data))


def test_parse_rejects_bool_coefficients():
    data = json.loads(MATVEC.read_text())
    data["statements"][0]["domain"]["constraints"][0]["coeffs"] = [True, 0]
    with pytest.raises(ValidationError):
        parse_scop(json.dumps(data))


def test_parse_rejects_wrong_arity():
    data = json.loads(MATVEC.read_text())
    data["statements"][0]["accesses"][0]["map"][0]["coeffs"] = [1]
    with pytest.raises(ValidationError):
        parse_scop(json.dumps(data))


def test_parse_rejects_duplicate_statement_names():
    data = json.loads(MATVEC.read_text())
    data["statements"][1]["name"] = "S"
    with pytest.raises(ValidationError):
        parse_scop(json.dumps(data))


def test_parse_rejects_empty_supplied_dependence():
    data = json.loads(MATVEC.read_text())
    data["dependences"] = [
        {
            "source": "S",
            "target": "S",
            "constraints": [
                {"coeffs": [1, 0, 0], "const": 0},
                {"coeffs": [-1, 0, 0], "const": -1},
            ],
        }
    ]
    with pytest.raises(ValidationError):
        parse_scop(json.dumps(data))


def test_validate_binding(matvec):
    assert validate_binding(matvec, {"N": 4}) == {"N": 4}
    with pytest.raises(ValidationError):
        validate_binding(matvec, {})
    with pytest.raises(ValidationError):
        validate_binding(matvec, {"N": -1})
    with pytest.raises(ValidationError):
        validate_binding(matvec, {"N": True})


def test_matvec_dependences_golden(matvec):
    deps = compute_memory_dependences(matvec)
    assert [(d.id, d.source, d.target, d.depth) for d in deps] == [
        (1, "S", "T", 0),
        (2, "T", "T", 3),
    ]
    d1, d2 = deps
    assert d1.polyhedron.variable_names == ("s.i", "t.i", "t.j", "N")
    # the write y[i] in S reaches the read y[i] in T at equal i
    assert any(
        c.kind is ConstraintKind.EQ and c.coeffs == (1, -1, 0, 0) and c.const == 0
        for c in d1.polyhedron.constraints
    )
    assert d2.polyhedron.variable_names == ("s.i", "s.j", "t.i", "t.j", "N")
    # carried by the inner loop: i equal, j strictly increasing
    assert any(
        c.kind is ConstraintKind.INEQ and c.coeffs == (0, -1, 0, 1, 0) and c.const == -1
        for c in d2.polyhedron.constraints
    )
    assert len(d1.polyhedron.constraints) == 8
    assert len(d2.polyhedron.constraints) == 11


def test_matvec_dependence_instances_match_oracle(matvec):
    deps = compute_memory_dependences(matvec)
    binding = {"N": 3}
    want = brute_force_dependence_pairs(matvec, binding, box=4)
    got = library_dependence_pairs(matvec, deps, binding, box=4)
    assert want == got
    assert want  # sanity: matvec does have dependences


def test_textual_order_is_total_for_distinct_instances(matvec):
    s = matvec.statement("S")
    t = matvec.statement("T")
    assert textual_precedes(s, (0,), t, (0, 0))
    assert not textual_precedes(t, (0, 0), s, (0,))
    assert textual_precedes(t, (0, 1), t, (1, 0))
    assert not textual_precedes(t, (1, 0), t, (0, 1))
    assert not textual_precedes(s, (2,), s, (2,))


def test_random_scops_match_instance_oracle():
    rng = random.Random(404)
    agreements = 0
    for _ in range(15):
        scop = random_scop(rng)
        binding = {"N": 3} if scop.params else {}
        deps = compute_memory_dependences(scop)
        want = brute_force_dependence_pairs(scop, binding, box=4)
        got = library_dependence_pairs(scop, deps, binding, box=4)
        assert want == got
        agreements += 1
    assert agreements == 15


def test_dependence_ids_are_one_based_and_ordered(matvec):
    deps = compute_memory_dependences(matvec)
    assert [d.id for d in deps] == list(range(1, len(deps) + 1))
