"""Convergent-validity evaluation: Pearson's gamma, K-fold CV, the sweep grid and feature analysis."""
from ..folds import FoldPlan, make_folds
from .crossval import EvalResult, cross_validate, cross_validate_matrix, fit_fold
from .stats import (UNDEFINED, TTestResult, age_correlations, feature_correlations, group_ttest, is_undefined,
                    label_table, pearson, random_guess, random_guess_gamma, student_ttest)
from .sweep import BASELINE, DEFAULT_COMBOS, SweepReport, render_text, run_sweep

__all__ = [
    "BASELINE", "DEFAULT_COMBOS", "EvalResult", "FoldPlan", "SweepReport", "TTestResult", "UNDEFINED",
    "age_correlations", "cross_validate", "cross_validate_matrix", "feature_correlations", "fit_fold",
    "group_ttest", "is_undefined", "label_table", "make_folds", "pearson", "random_guess", "random_guess_gamma", "render_text", "run_sweep",
    "student_ttest",
]
