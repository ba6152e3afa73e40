"""Diagnose degradation problems of imbalanced binary datasets, treat them,
and compare classifier outcomes statistically."""

from .data import Dataset, SubclassAssignment, load_csv, summarize
from .diagnosis import DiagnosticReport, EarlyExit, diagnose
from .gmm import MixtureModel, em_fit, select_model
from .separation import optimal_separation
from .treatments import TreatmentSpec, apply_treatment

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DiagnosticReport",
    "EarlyExit",
    "MixtureModel",
    "SubclassAssignment",
    "TreatmentSpec",
    "apply_treatment",
    "diagnose",
    "em_fit",
    "load_csv",
    "optimal_separation",
    "select_model",
    "summarize",
]
