from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import RankDeficientError, solve_least_squares
from .base import RegressionProblem


@dataclass(frozen=True)
class OlsFit:
    columns: tuple
    coefficients: np.ndarray
    intercept: float
    rss: float
    df_resid: int

    @property
    def sigma2(self) -> float:
        return self.rss / self.df_resid if self.df_resid > 0 else float("nan")


def fit_ols(problem: RegressionProblem, columns=None) -> OlsFit:
    """Least squares with an intercept on the named ``columns`` (all columns by default)."""
    if columns is None:
        columns = problem.columns
    columns = tuple(columns)
    lookup = {c: i for i, c in enumerate(problem.columns)}
    idx = [lookup[c] for c in columns]
    A = np.column_stack([np.ones(problem.n), problem.X[:, idx]])
    try:
        sol = solve_least_squares(A, problem.y)
    except RankDeficientError as exc:
        names = ["(intercept)" if j == 0 else columns[j - 1] for j in exc.columns]
        raise RankDeficientError(
            f"rank-deficient design (numerical rank {exc.rank} of {A.shape[1]}); "
            f"dependent columns: {names}", exc.rank, names) from None
    resid = problem.y - A @ sol
    return OlsFit(columns, sol[1:], float(sol[0]), float(resid @ resid), problem.n - A.shape[1])
