import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhist import harness
from qhist.fixtures import two_slit
from qhist.linalg import ValidationError
from qhist.pipeline import (
    PipelineFormatError,
    ResourceError,
    dump_pipeline,
    enumerate_paths,
    expand_homogeneous,
    function_table,
    indicator,
    load_pipeline,
    load_pipeline_file,
    make_pipeline,
    parse_event,
    parse_function_table,
)


@pytest.fixture
def uniform_doc(fixture_dir):
    return json.loads((fixture_dir / "two_slit_uniform.json").read_text())


def test_load_two_slit_fixture(fixture_dir):
    p = load_pipeline_file(fixture_dir / "two_slit_uniform.json")
    assert p.dim == 2
    assert len(p.steps) == 2
    assert p.n_paths == 4
    assert p.is_pure


def test_dump_load_round_trip():
    p = two_slit("zero")
    assert dump_pipeline(load_pipeline(json.dumps(dump_pipeline(p)))) == dump_pipeline(p)


def test_non_unit_state_rejected(uniform_doc):
    uniform_doc["initial"]["pure"] = [[1.0, 0.0], [1.0, 0.0]]
    with pytest.raises(ValidationError, match="norm"):
        load_pipeline(uniform_doc)


def test_completeness_residual_named():
    p0 = np.diag([1.0, 0.0])
    with pytest.raises(ValidationError, match="step 1 PVM completeness residual"):
        make_pipeline([(np.eye(2), [("x", p0)])], pure=[1.0, 0.0])


def test_projectors_summing_to_099_identity(uniform_doc):
    for outcome in uniform_doc["steps"][1]["pvm"]:
        outcome["projector"] = [[[0.99 * re, im] for re, im in row] for row in outcome["projector"]]
    with pytest.raises(ValidationError, match="step 2 PVM completeness residual 0.01"):
        load_pipeline(uniform_doc)


def test_non_projector_rejected():
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    with pytest.raises(ValidationError, match="is not a projector"):
        make_pipeline(
            [(np.eye(2), [("x", np.eye(2) - np.outer(v, v) - 0.1j * np.ones((2, 2))),
                          ("y", np.outer(v, v) + 0.1j * np.ones((2, 2)))])],
            pure=[1.0, 0.0],
        )


def test_non_unitary_gate_rejected():
    with pytest.raises(ValidationError, match="step 1 gate unitarity"):
        make_pipeline([(2 * np.eye(2), [("x", np.eye(2))])], pure=[1.0, 0.0])


def test_duplicate_label_rejected():
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    with pytest.raises(ValidationError, match="duplicate"):
        make_pipeline([(np.eye(2), [("x", p0), ("x", p1)])], pure=[1.0, 0.0])


def test_non_orthogonal_projectors_rejected():
    p0 = np.diag([1.0, 0.0])
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    with pytest.raises(ValidationError):
        make_pipeline([(np.eye(2), [("x", p0), ("y", np.outer(v, v))])], pure=[1.0, 0.0])


def test_bad_density_rejected():
    with pytest.raises(ValidationError, match="density"):
        make_pipeline([(np.eye(2), [("x", np.eye(2))])], mixed=np.diag([2.0, -1.0]))


@pytest.mark.parametrize(
    "text",
    ["{not json", "[]", '{"dim": 2}', '{"dim": 0, "initial": {}, "steps": []}'],
)
def test_malformed_documents(text):
    with pytest.raises(PipelineFormatError):
        load_pipeline(text)


def test_scalar_must_be_pair(uniform_doc):
    uniform_doc["initial"]["pure"] = [0.7, 0.7]
    with pytest.raises(PipelineFormatError, match=r"\[re, im\]"):
        load_pipeline(uniform_doc)


def test_enumerate_two_slit_order():
    assert enumerate_paths(two_slit()) == [("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2")]


def test_single_outcome_single_path():
    p = make_pipeline([(np.eye(3), [("only", np.eye(3))])], pure=[1.0, 0.0, 0.0])
    assert enumerate_paths(p) == [("only",)]


def test_product_rule_2_3_2():
    rng = harness.make_rng(5)
    steps = []
    for k in (2, 3, 2):
        pvm = harness.random_pvm(rng, 3, k)
        steps.append((harness.random_unitary(rng, 3), list(zip(pvm.labels, pvm.projectors))))
    p = make_pipeline(steps, pure=harness.random_state(rng, 3))
    paths = enumerate_paths(p)
    assert len(paths) == 12
    assert paths == sorted(paths, key=p.path_index)
    assert [p.path_index(w) for w in paths] == list(range(12))


def test_path_cap():
    with pytest.raises(ResourceError):
        enumerate_paths(two_slit(), cap=3)


def test_expand_homogeneous():
    p = two_slit()
    assert expand_homogeneous(p, [["a1"], ["b1", "b2"]]) == {("a1", "b1"), ("a1", "b2")}
    assert expand_homogeneous(p, [["a1", "a2"], ["b1", "b2"]]) == set(enumerate_paths(p))
    assert expand_homogeneous(p, [["a2"], ["b1"]]) == {("a2", "b1")}
    with pytest.raises(ValidationError, match="unknown outcome label 'c'"):
        expand_homogeneous(p, [["c"], ["b1"]])
    with pytest.raises(ValidationError, match="empty"):
        expand_homogeneous(p, [[], ["b1"]])


def test_indicator():
    p = two_slit()
    assert list(indicator(p, []).values) == [0, 0, 0, 0]
    assert list(indicator(p, enumerate_paths(p)).values) == [1, 1, 1, 1]
    assert list(indicator(p, [("a1", "b1"), ("a2", "b1")]).values) == [1, 0, 1, 0]


def test_parse_event_forms():
    p = two_slit()
    assert parse_event(p, '{"paths": ["a1,b1", "a2, b1"]}') == {("a1", "b1"), ("a2", "b1")}
    assert parse_event(p, {"homogeneous": [["a1"], ["b1", "b2"]]}) == {("a1", "b1"), ("a1", "b2")}
    with pytest.raises(ValidationError, match="'zz'"):
        parse_event(p, {"paths": ["zz,b1"]})
    with pytest.raises(ValidationError, match="more than once"):
        parse_event(p, {"paths": ["a1,b1", "a1,b1"]})
    with pytest.raises(PipelineFormatError):
        parse_event(p, {"nope": []})


def test_parse_function_table(fixture_dir):
    p = two_slit()
    f = parse_function_table(p, (fixture_dir / "g_nonclassical.json").read_text())
    assert list(f.values) == [0, 1, 1, 2]
    assert f[("a2", "b2")] == 2


def test_function_table_missing_and_extra_keys():
    p = two_slit()
    doc = {"values": {"a1,b1": 1, "a1,b2": 1, "a2,b1": 1, "a9,b1": 3}}
    with pytest.raises(ValidationError) as info:
        parse_function_table(p, doc)
    assert "missing paths: a2,b2" in str(info.value)
    assert "unknown paths: a9,b1" in str(info.value)


def test_function_table_nonfinite():
    with pytest.raises(ValidationError, match="non-finite"):
        function_table(two_slit(), [0, 1, math.inf, 2])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_enumeration_and_homogeneous_sizes(seed):
    cfg = harness.GeneratorConfig(max_paths=200)
    rng = harness.make_rng(seed)
    p = harness.random_pipeline(cfg, rng)
    paths = enumerate_paths(p)
    assert len(paths) == math.prod(p.outcome_counts)
    assert paths == enumerate_paths(p)
    factors = harness._random_homogeneous(rng, p)
    assert len(expand_homogeneous(p, factors)) == math.prod(len(f) for f in factors)
