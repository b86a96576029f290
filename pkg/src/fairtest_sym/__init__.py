"""Symbolic test generation for individual discrimination in black-box classifiers."""

from .baseline import random_baseline
from .constraints import Op, PathConstraint, Predicate, canonicalize, solve, toggle
from .explainer import LocalExplainer, extract_path, fit_tree
from .fairness import check_for_error_condition, protected_combinations
from .models import ExternalModel, ExternalModelConfig, LogisticModel, train_logistic
from .report import RunReport, Source, emit_report
from .schema import Dataset, Feature, FeatureSchema, decode, load_csv, random_instance
from .search import SearchConfig, run, seed_test_inputs
from .synth import synth_biased_dataset

__version__ = "0.1.0"
