from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from jsonschema import Draft202012Validator

from distcomp import experiments
from distcomp.codes.code import error_probability_exact, identity_code
from distcomp.funclass import identity_function
from distcomp.io import (
    SCHEMAS,
    DocumentError,
    code_from_dict,
    code_to_dict,
    dumps,
    function_from_dict,
    function_to_dict,
    parse_probability,
    read_json,
    region_from_dict,
    schema,
    source_from_dict,
    source_to_dict,
    vector_function_from_dict,
)
from distcomp.regions import RateRegion
from distcomp.sources import SourceModel

DATA = Path(__file__).resolve().parents[1] / "data"


def validate(name, doc):
    Draft202012Validator(schema(name)).validate(doc)


@pytest.mark.parametrize("name", SCHEMAS)
def test_schemas_are_valid(name):
    Draft202012Validator.check_schema(schema(name))


def test_unknown_schema():
    with pytest.raises(KeyError):
        schema("nope")


@pytest.mark.parametrize("path", sorted(DATA.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_documents_validate_and_load(path):
    doc = read_json(path)
    if "kind" in doc:
        validate("source", doc)
        src = source_from_dict(doc)
        assert source_from_dict(source_to_dict(src)).block_table(2) == pytest.approx(src.block_table(2))
    else:
        validate("function", doc)
        f = function_from_dict(doc)
        assert function_from_dict(function_to_dict(f)) == f
        validate("classify", experiments.classify(f, 2))


def test_decimal_strings_are_exact():
    assert parse_probability("0.35") == 0.35
    assert parse_probability(0.25) == 0.25
    for bad in ("zero", True, None):
        with pytest.raises(DocumentError):
            parse_probability(bad)


@given(st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
def test_iid_round_trip(weights):
    joint = np.array(weights).reshape(2, 2)
    joint /= joint.sum()
    src = SourceModel.iid(joint)
    doc = source_to_dict(src)
    validate("source", doc)
    assert np.allclose(source_from_dict(doc).joint, joint)


def test_other_source_kinds_round_trip():
    w = np.array([[0.7, 0.1, 0.1, 0.1], [0.1, 0.7, 0.1, 0.1], [0.1, 0.1, 0.7, 0.1], [0.1, 0.1, 0.1, 0.7]])
    sources = [
        SourceModel.markov(2, 2, w, np.full(4, 0.25)),
        SourceModel.theorem9(2, 3, 0.5, 0.05),
        SourceModel.mixture([SourceModel.iid(np.full((2, 2), 0.25)), SourceModel.theorem9(2, 2, 1, 0.1)], [0.5, 0.5]),
    ]
    for src in sources:
        doc = source_to_dict(src)
        validate("source", doc)
        again = source_from_dict(doc)
        assert again.block_table(2) == pytest.approx(src.block_table(2))


def test_bad_documents():
    with pytest.raises(DocumentError):
        source_from_dict({"kind": "iid"})
    with pytest.raises(DocumentError):
        source_from_dict({"kind": "iid", "joint": [[0.5, 0.6], [0, 0]]})
    with pytest.raises(DocumentError):
        source_from_dict({"kind": "weird"})
    with pytest.raises(DocumentError):
        function_from_dict({"x_size": 2, "y_size": 2, "table": [[0, 1]]})
    with pytest.raises(DocumentError):
        vector_function_from_dict({"kind": "comparison", "x_size": 2, "y_size": 3}, 2)


def test_vector_function_kinds():
    assert vector_function_from_dict({"kind": "identity", "x_size": 2, "y_size": 3}, 2).n == 2
    f = vector_function_from_dict({"kind": "theorem9", "x_size": 2, "y_size": 2, "rho": "0.5"}, 4)
    assert f.n == 4
    assert vector_function_from_dict({"kind": "comparison", "x_size": 3, "y_size": 3}, 2).x_size == 3


def test_code_round_trip(positive_joint):
    code = identity_code(2, 2, 2)
    doc = code_to_dict(code)
    validate("code", doc)
    again = code_from_dict(doc)
    src = SourceModel.iid(positive_joint)
    assert error_probability_exact(again, src, identity_function(2, 2, 2)) == 0
    doc["dec"] = {"0|0": 1}
    doc["dec"]["bad"] = 0
    with pytest.raises(DocumentError):
        code_from_dict(doc)


def test_region_documents(positive_joint):
    doc, rows = experiments.region(SourceModel.iid(positive_joint), r=0.5)
    validate("region", doc)
    reg = region_from_dict(doc["sw_fixed_length"])
    assert isinstance(reg, RateRegion)
    assert {row["region"] for row in rows} == {"sw_fixed_length", "sw_variable_length", "outer_r_sensitive"}


def test_smoothness_document(positive_joint):
    validate("smoothness", experiments.check_source(SourceModel.iid(positive_joint), 2))


def test_canonical_text_is_stable():
    assert dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'
