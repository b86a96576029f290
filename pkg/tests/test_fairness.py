import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairtest_sym.fairness import (
    CombinationExplosion, NoProtectedAttributes, check_for_error_condition, protected_combinations,
)
from fairtest_sym.models import ConstantModel, FunctionModel, LogisticModel
from fairtest_sym.schema import Feature, FeatureSchema


def exhaustive_check(t, model, schema):
    """Reference: evaluate every protected assignment, no short-circuit."""
    idx = schema.protected_indices
    ranges = [range(schema.features[i].lo, schema.features[i].hi + 1) for i in idx]
    classes = set()
    for values in itertools.product(*ranges):
        u = list(t)
        for i, v in zip(idx, values):
            u[i] = v
        classes.add(int(model.predict(tuple(u))))
    return len(classes) > 1


TWO_PROTECTED = FeatureSchema(
    (Feature("x", 0, 9), Feature("race", 0, 2), Feature("sex", 0, 1), Feature("y", -2, 2)),
    frozenset({"race", "sex"}),
)


def test_binary_protected_combinations(age_gender):
    assert protected_combinations(age_gender) == [(0,), (1,)]


def test_two_by_three_is_lexicographic():
    schema = FeatureSchema((Feature("a", 0, 1), Feature("b", 0, 2)), frozenset({"a", "b"}))
    assert protected_combinations(schema) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_no_protected_attributes():
    with pytest.raises(NoProtectedAttributes):
        protected_combinations(FeatureSchema((Feature("a", 0, 3),)))


def test_combination_cap():
    schema = FeatureSchema((Feature("a", 0, 99), Feature("b", 0, 99), Feature("c", 0, 1)),
                           frozenset({"a", "b", "c"}))
    with pytest.raises(CombinationExplosion):
        protected_combinations(schema)
    assert len(protected_combinations(schema, cap=20_000)) == 20_000


def test_model_reading_only_gender_discriminates(age_gender):
    res = check_for_error_condition((5, 0), FunctionModel(lambda X: X[:, 1]), age_gender)
    assert res.found
    assert res.witness == ((5, 0), (5, 1))
    assert res.classes == (0, 1)
    assert res.probes == 2


def test_model_ignoring_gender_is_fair(age_gender):
    model = FunctionModel(lambda X: (X[:, 0] > 4).astype(int))
    for age in range(1, 10):
        for g in (0, 1):
            res = check_for_error_condition((age, g), model, age_gender)
            assert not res.found and res.witness is None


def test_probes_without_short_circuit():
    res = check_for_error_condition((3, 1, 0, 0), ConstantModel(1), TWO_PROTECTED)
    assert not res.found
    assert res.probes == 6  # t itself plus the other five assignments


def test_short_circuit_stops_at_first_mismatch():
    # class flips only when race == 2; lexicographic order reaches (0, 1), (1, 0), (1, 1), (2, 0)
    model = FunctionModel(lambda X: (X[:, 1] == 2).astype(int))
    res = check_for_error_condition((3, 0, 0, 0), model, TWO_PROTECTED)
    assert res.found and res.witness[1] == (3, 2, 0, 0)
    assert res.probes == 5


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 9), st.integers(0, 2), st.integers(0, 1), st.integers(-2, 2), st.integers(0, 2**32 - 1))
def test_agrees_with_exhaustive_sweep(x, race, sex, y, seed):
    rng = np.random.default_rng(seed)
    model = LogisticModel(rng.normal(0, 1, 4), float(rng.normal(0, 0.3)),
                          np.array([4.5, 1.0, 0.5, 0.0]), np.array([4.5, 1.0, 0.5, 2.0]))
    t = (x, race, sex, y)
    res = check_for_error_condition(t, model, TWO_PROTECTED)
    assert res.found == exhaustive_check(t, model, TWO_PROTECTED)
    if res.found:
        a, b = res.witness
        assert a == t
        # only protected positions differ
        assert [a[i] for i in (0, 3)] == [b[i] for i in (0, 3)]
        assert model.predict(a) != model.predict(b)
        # symmetry: starting from the witness finds discrimination too
        assert check_for_error_condition(b, model, TWO_PROTECTED).found
