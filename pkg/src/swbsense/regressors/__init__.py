"""Stepwise, LASSO, MARS and SVR regressors behind one ``fit_model`` entry point."""
from .base import (ALGORITHMS, Hyperparameters, LassoParams, MarsParams, ModelError, RegressionProblem,
                   StepwiseParams, SvrParams, TrainedModel, predict)
from .lasso import fit_lasso
from .mars import fit_mars
from .ols import OlsFit, fit_ols
from .stepwise import fit_stepwise
from .svr import fit_svr

_FITTERS = {"stepwise": fit_stepwise, "lasso": fit_lasso, "mars": fit_mars, "svr": fit_svr}


def fit_model(algorithm: str, problem: RegressionProblem, hp: Hyperparameters | None = None,
              seed: int = 0) -> TrainedModel:
    hp = hp or Hyperparameters()
    try:
        fitter = _FITTERS[algorithm]
    except KeyError:
        raise ModelError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}") from None
    return fitter(problem, getattr(hp, algorithm), seed=seed)


__all__ = [
    "ALGORITHMS", "Hyperparameters", "LassoParams", "MarsParams", "ModelError", "OlsFit", "RegressionProblem",
    "StepwiseParams", "SvrParams", "TrainedModel", "fit_lasso", "fit_mars", "fit_model", "fit_ols",
    "fit_stepwise", "fit_svr", "predict",
]
