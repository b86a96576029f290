import sys
from pathlib import Path

import numpy as np
import pytest

from fairtest_sym.schema import Feature, FeatureSchema

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def age_gender():
    return FeatureSchema(
        (Feature("age", 1, 9), Feature("gender", 0, 1, "categorical", ("F", "M"))),
        frozenset({"gender"}),
        "risk",
    )


@pytest.fixture
def echo_cmd():
    return [sys.executable, str(FIXTURES / "echo_model.py")]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
