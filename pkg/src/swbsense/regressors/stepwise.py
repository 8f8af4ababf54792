"""Bidirectional stepwise selection driven by partial F-tests."""
from __future__ import annotations

import numpy as np

from ..numerics import f_survival
from .base import RegressionProblem, StepwiseParams, TrainedModel
from .ols import fit_ols

# candidates whose residualized sum of squares falls below this fraction of
# their centered sum of squares are treated as collinear with the model
COLLINEAR_TOL = 1e-10


def _orthonormal(Xc: np.ndarray, cols: list[int]) -> np.ndarray:
    if not cols:
        return np.zeros((Xc.shape[0], 0))
    Q, _ = np.linalg.qr(Xc[:, cols], mode="reduced")
    return Q


def _entry_candidate(Xc, yc, col_ss, selected, blocked):
    """Best (column, F, df) to add, or None."""
    n, p = Xc.shape
    df = n - len(selected) - 2
    if df <= 0:
        return None
    Q = _orthonormal(Xc, selected)
    r = yc - Q @ (Q.T @ yc)
    Xr = Xc - Q @ (Q.T @ Xc)
    res_ss = np.einsum("ij,ij->j", Xr, Xr)
    ok = res_ss > COLLINEAR_TOL * col_ss
    ok[selected] = False
    ok[list(blocked)] = False
    if not ok.any():
        return None
    rss = float(r @ r)
    gain = np.zeros(p)
    gain[ok] = (Xr[:, ok].T @ r) ** 2 / res_ss[ok]
    rss_new = np.maximum(rss - gain, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(rss_new > 0, gain / (rss_new / df), np.where(gain > 0, np.inf, 0.0))
    F[~ok] = -1.0
    j = int(np.argmax(F))
    return j, float(F[j]), df


def _removal_pvalues(Xc, yc, selected) -> np.ndarray:
    """Partial-F p-value of dropping each selected column from the current model."""
    n = Xc.shape[0]
    k = len(selected)
    df = n - k - 1
    Q, R = np.linalg.qr(Xc[:, selected], mode="reduced")
    beta = np.linalg.solve(R, Q.T @ yc)
    resid = yc - Xc[:, selected] @ beta
    rss = float(resid @ resid)
    Rinv = np.linalg.solve(R, np.eye(k))
    diag = np.einsum("ij,ij->i", Rinv, Rinv)     # diag of (X'X)^-1
    drop = beta ** 2 / diag                       # RSS increase when dropping each column
    if rss <= 0:
        return np.where(drop > 0, 0.0, 1.0)
    return np.array([f_survival(d / (rss / df), 1, df) for d in drop])


def fit_stepwise(problem: RegressionProblem, hp: StepwiseParams = StepwiseParams(), seed: int = 0) -> TrainedModel:
    X, y = problem.X, problem.y
    n, p = X.shape
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    col_ss = np.einsum("ij,ij->j", Xc, Xc)
    selected: list[int] = []
    just_removed: set[int] = set()
    seen = {frozenset()}
    history = []
    steps = 0
    for steps in range(1, 4 * p + 10):
        changed = False
        cand = _entry_candidate(Xc, yc, col_ss, selected, just_removed)
        just_removed = set()
        if cand is not None:
            j, F, df = cand
            pval = f_survival(F, 1, df)
            if pval < hp.alpha_enter:
                selected.append(j)
                history.append(("add", problem.columns[j], pval))
                changed = True
        while selected:
            pvals = _removal_pvalues(Xc, yc, selected)
            worst = int(np.argmax(pvals))
            if pvals[worst] <= hp.alpha_remove:
                break
            j = selected.pop(worst)
            just_removed.add(j)
            history.append(("remove", problem.columns[j], float(pvals[worst])))
            changed = True
        state = frozenset(selected)
        if not changed or state in seen:
            break
        seen.add(state)

    names = [problem.columns[j] for j in selected]
    ols = fit_ols(problem, names)
    pvalues = _removal_pvalues(Xc, yc, selected).tolist() if selected else []
    return TrainedModel(
        algorithm="stepwise",
        features=tuple(names),
        params={"intercept": ols.intercept, "coefficients": ols.coefficients.tolist()},
        metadata={
            "input_columns": list(problem.columns),
            "hyperparameters": {"alpha_enter": hp.alpha_enter, "alpha_remove": hp.alpha_remove},
            "pvalues": pvalues,
            "rss": ols.rss,
            "iterations": steps,
            "history": [list(h) for h in history],
            "converged": True,
        },
    )
