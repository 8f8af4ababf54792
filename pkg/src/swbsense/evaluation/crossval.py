"""K-fold evaluation of one (dimension, feature set, algorithm) cell.

Normalization bounds and the model are fit on the training rows of each
fold only; held-out predictions are pooled and correlated with the labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..corpus import Dataset
from ..features import FeatureMatrix, WindowSpec, build_matrix, family_label, fit_normalization, normalize_values
from ..folds import FoldPlan, make_folds
from ..lexicon import Lexicon
from ..numerics import child_seed
from ..regressors import Hyperparameters, RegressionProblem, TrainedModel, fit_model, predict
from .stats import pearson


@dataclass(frozen=True)
class EvalResult:
    dimension: str
    families: str
    algorithm: str
    gamma_pooled: float            # NaN when degenerate
    gamma_per_fold: tuple
    predictions: tuple             # pooled out-of-fold predictions in row order
    labels: tuple
    n_selected: tuple              # selected feature count per fold
    converged: bool
    degenerate_folds: tuple = field(default=())

    @property
    def degenerate(self) -> bool:
        return math.isnan(self.gamma_pooled)

    @property
    def mean_selected(self) -> float:
        return float(np.mean(self.n_selected)) if self.n_selected else 0.0

    def to_json(self) -> dict:
        def num(x):
            return None if math.isnan(x) else x
        return {
            "dimension": self.dimension,
            "families": self.families,
            "algorithm": self.algorithm,
            "gamma_pooled": num(self.gamma_pooled),
            "degenerate": self.degenerate,
            "gamma_per_fold": [num(g) for g in self.gamma_per_fold],
            "degenerate_folds": list(self.degenerate_folds),
            "n_selected": list(self.n_selected),
            "converged": self.converged,
            "predictions": list(self.predictions),
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalResult":
        def num(x):
            return math.nan if x is None else float(x)
        return cls(
            dimension=obj["dimension"],
            families=obj["families"],
            algorithm=obj["algorithm"],
            gamma_pooled=num(obj["gamma_pooled"]),
            gamma_per_fold=tuple(num(g) for g in obj["gamma_per_fold"]),
            predictions=tuple(obj["predictions"]),
            labels=tuple(obj["labels"]),
            n_selected=tuple(obj["n_selected"]),
            converged=bool(obj["converged"]),
            degenerate_folds=tuple(obj.get("degenerate_folds", ())),
        )


def fit_fold(matrix: FeatureMatrix, y, plan: FoldPlan, fold: int, algorithm: str,
             hp: Hyperparameters | None = None) -> tuple[TrainedModel, np.ndarray]:
    """Fit one fold; returns the model and its predictions on the held-out rows."""
    y = np.asarray(y, dtype=float)
    train, test = plan.train_rows(fold), plan.test_rows(fold)
    params = fit_normalization(matrix, train)
    Xtr = normalize_values(matrix.values[train], params)
    Xte = normalize_values(matrix.values[test], params)
    problem = RegressionProblem(Xtr, y[train], matrix.columns)
    model = fit_model(algorithm, problem, hp, seed=child_seed(plan.seed, fold))
    return model, predict(model, Xte, matrix.columns)


def cross_validate_matrix(matrix: FeatureMatrix, y, algorithm: str, hp: Hyperparameters | None = None,
                          plan: FoldPlan | None = None, dimension: str = "", seed: int = 0) -> EvalResult:
    y = np.asarray(y, dtype=float)
    plan = plan or make_folds(len(y), 5, seed)
    if plan.n != len(y) or matrix.values.shape[0] != len(y):
        raise ValueError("fold plan, feature rows and labels disagree in length")
    pooled = np.empty(len(y))
    per_fold, n_selected, degenerate = [], [], []
    converged = True
    for fold in range(plan.k):
        model, pred = fit_fold(matrix, y, plan, fold, algorithm, hp)
        test = plan.test_rows(fold)
        pooled[test] = pred
        per_fold.append(pearson(pred, y[test]) if len(test) >= 2 else math.nan)
        n_selected.append(len(model.features))
        converged &= model.converged
        if np.all(pred == pred[0]):
            degenerate.append(fold)
    # a constant fold makes the pooled vector a step function of fold membership,
    # whose correlation with y is an artefact of the fold means
    gamma = math.nan if degenerate else pearson(pooled, y)
    return EvalResult(
        dimension=dimension,
        families=family_label(matrix.families) if matrix.families else "",
        algorithm=algorithm,
        gamma_pooled=gamma,
        gamma_per_fold=tuple(per_fold),
        predictions=tuple(pooled.tolist()),
        labels=tuple(y.tolist()),
        n_selected=tuple(n_selected),
        converged=bool(converged),
        degenerate_folds=tuple(degenerate),
    )


def cross_validate(dataset: Dataset, dimension: str, families, algorithm: str,
                   hp: Hyperparameters | None = None, window: WindowSpec = WindowSpec(),
                   lexicon: Lexicon | None = None, folds: FoldPlan | int = 5, seed: int = 0) -> EvalResult:
    matrix = build_matrix(dataset, families, window, lexicon)
    plan = folds if isinstance(folds, FoldPlan) else make_folds(len(dataset), folds, seed)
    return cross_validate_matrix(matrix, dataset.label_column(dimension), algorithm, hp, plan, dimension)
