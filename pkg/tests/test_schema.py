import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairtest_sym.schema import (
    ArityMismatch, Dataset, DomainViolation, Feature, FeatureSchema, SchemaError, UnknownCategory,
    decode, encode_row, load_csv, load_schema, random_instance, write_csv, write_schema,
)

SIDE_CAR = {"features": [{"name": "age", "domain": [1, 9], "kind": "numeric"},
                         {"name": "gender", "kind": "categorical", "labels": ["F", "M"]}],
            "protected": ["gender"], "label": "risk"}


@pytest.fixture
def files(tmp_path):
    def make(rows):
        (tmp_path / "s.json").write_text(json.dumps(SIDE_CAR))
        (tmp_path / "d.csv").write_text("age,gender,risk\n" + "".join(r + "\n" for r in rows))
        return tmp_path / "d.csv", tmp_path / "s.json"
    return make


def test_load_csv_encodes_categories(files):
    data = load_csv(*files(["3,F,0", "7,M,1"]))
    assert data.rows == ((3, 0), (7, 1))
    assert data.labels == (0, 1)
    assert data.schema.protected == {"gender"}


def test_unknown_category(files):
    with pytest.raises(UnknownCategory):
        load_csv(*files(["3,X,0"]))


def test_domain_violation(files):
    with pytest.raises(DomainViolation):
        load_csv(*files(["12,F,0"]))


def test_arity_mismatch(files):
    with pytest.raises(ArityMismatch):
        load_csv(*files(["3,F"]))


def test_header_must_match_schema(tmp_path):
    (tmp_path / "s.json").write_text(json.dumps(SIDE_CAR))
    (tmp_path / "d.csv").write_text("gender,age,risk\nF,3,0\n")
    with pytest.raises(ArityMismatch):
        load_csv(tmp_path / "d.csv", tmp_path / "s.json")


def test_decode(age_gender):
    assert decode((3, 0), age_gender) == ["3", "F"]
    assert decode((7, 1), age_gender) == ["7", "M"]


def test_schema_invariants():
    with pytest.raises(SchemaError):
        Feature("x", 5, 4)
    with pytest.raises(SchemaError):
        Feature("c", 0, 2, "categorical", ("a", "b"))
    with pytest.raises(SchemaError):
        FeatureSchema((Feature("x", 0, 1),), frozenset({"y"}))


def test_schema_file_round_trip(tmp_path, age_gender):
    write_schema(age_gender, tmp_path / "s.json")
    assert load_schema(tmp_path / "s.json") == age_gender


def test_csv_round_trip(tmp_path, age_gender):
    data = Dataset(age_gender, ((1, 0), (9, 1), (4, 1)), (0, 1, 1))
    write_csv(data, tmp_path / "d.csv")
    write_schema(age_gender, tmp_path / "s.json")
    assert load_csv(tmp_path / "d.csv", tmp_path / "s.json") == data


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_encode_decode_round_trip(seed):
    schema = FeatureSchema((Feature("a", -3, 4), Feature("c", 0, 2, "categorical", ("x", "y", "z")),
                            Feature("b", 10, 10)), frozenset({"c"}))
    row = random_instance(schema, np.random.default_rng(seed))
    assert encode_row(decode(row, schema), schema) == row


def test_random_instance_singleton_domain():
    schema = FeatureSchema((Feature("x", 5, 5),))
    assert random_instance(schema, np.random.default_rng(0)) == (5,)


def test_random_instance_is_seeded(age_gender):
    a = random_instance(age_gender, np.random.default_rng(42))
    b = random_instance(age_gender, np.random.default_rng(42))
    assert a == b


def test_random_instance_uniform():
    schema = FeatureSchema((Feature("bit", 0, 1),))
    rng = np.random.default_rng(7)
    draws = [random_instance(schema, rng)[0] for _ in range(10_000)]
    assert abs(np.mean(draws) - 0.5) < 0.05


@given(st.integers(0, 2**32 - 1))
def test_random_instance_valid(seed):
    schema = FeatureSchema((Feature("a", -3, 4), Feature("b", 0, 100), Feature("c", 7, 8)))
    assert schema.is_valid(random_instance(schema, np.random.default_rng(seed)))
