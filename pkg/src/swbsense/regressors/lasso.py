"""LASSO by cyclic coordinate descent over a geometric penalty path.

Columns are standardized internally (mean 0, population variance 1) and
the objective is ``0.5/n * ||y - X b||^2 + lam * ||b||_1``. The penalty is
picked by an inner K-fold CV on mean squared error unless fixed.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..folds import make_folds
from .base import LassoParams, RegressionProblem, TrainedModel


@njit(cache=True)
def _cd_kernel(X, r, beta, lam, tol, max_iter, trace):
    # r holds y - X @ beta on entry and is kept in sync
    n, p = X.shape
    xsq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        xsq[j] = s / n
    for it in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            if xsq[j] == 0.0:
                continue
            old = beta[j]
            rho = 0.0
            for i in range(n):
                rho += X[i, j] * r[i]
            rho = rho / n + xsq[j] * old
            if rho > lam:
                new = (rho - lam) / xsq[j]
            elif rho < -lam:
                new = (rho + lam) / xsq[j]
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * delta
                beta[j] = new
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        if trace.shape[0] > it:
            obj = 0.0
            for i in range(n):
                obj += r[i] * r[i]
            l1 = 0.0
            for j in range(p):
                l1 += abs(beta[j])
            trace[it] = 0.5 * obj / n + lam * l1
        if max_delta < tol:
            return it + 1, True
    return max_iter, False


def coordinate_descent(X, y, lam, beta=None, tol=1e-6, max_iter=10000, trace=False):
    """Minimize ``0.5/n ||y - X b||^2 + lam ||b||_1`` with no intercept.

    Returns ``(beta, sweeps, converged)``, plus the per-sweep objective when
    ``trace`` is set.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1]) if beta is None else np.array(beta, dtype=float)
    r = y - X @ beta
    buf = np.full(max_iter if trace else 0, np.nan)
    sweeps, ok = _cd_kernel(X, r, beta, float(lam), float(tol), int(max_iter), buf)
    if trace:
        return beta, sweeps, ok, buf[:sweeps]
    return beta, sweeps, ok


def _standardize(X, y):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    keep = sd > 0
    Xs = np.zeros_like(X)
    Xs[:, keep] = (X[:, keep] - mu[keep]) / sd[keep]
    return np.ascontiguousarray(Xs), y - y.mean(), mu, np.where(keep, sd, 1.0), keep


def lambda_max(X, y) -> float:
    Xs, yc, *_ = _standardize(np.asarray(X, float), np.asarray(y, float))
    return float(np.max(np.abs(Xs.T @ yc)) / len(yc))


def _path(lmax: float, hp: LassoParams) -> np.ndarray:
    if hp.n_lambdas == 1:
        return np.array([lmax])
    return np.geomspace(lmax, lmax * hp.lambda_ratio, hp.n_lambdas)


def _fit_path(Xs, yc, lambdas, hp):
    """Warm-started solutions for each penalty; returns (betas, all_converged, total_sweeps)."""
    beta = np.zeros(Xs.shape[1])
    out = np.zeros((len(lambdas), Xs.shape[1]))
    converged, total = True, 0
    for k, lam in enumerate(lambdas):
        beta, sweeps, ok = coordinate_descent(Xs, yc, lam, beta, hp.tol, hp.max_iter)
        out[k] = beta
        converged &= ok
        total += sweeps
    return out, converged, total


def _cv_select(X, y, lambdas, hp, seed):
    plan = make_folds(len(y), hp.cv_folds, seed)
    mse = np.zeros(len(lambdas))
    converged = True
    for f in range(plan.k):
        tr, te = plan.train_rows(f), plan.test_rows(f)
        Xs, yc, mu, sd, keep = _standardize(X[tr], y[tr])
        betas, ok, _ = _fit_path(Xs, yc, lambdas, hp)
        converged &= ok
        coef = betas / sd
        intercept = y[tr].mean() - coef @ mu
        pred = X[te] @ coef.T + intercept
        mse += ((pred - y[te, None]) ** 2).mean(axis=0)
    mse /= plan.k
    return int(np.argmin(mse)), mse, converged


def fit_lasso(problem: RegressionProblem, hp: LassoParams = LassoParams(), seed: int = 0) -> TrainedModel:
    X, y = problem.X, problem.y
    Xs, yc, mu, sd, keep = _standardize(X, y)
    lmax = float(np.max(np.abs(Xs.T @ yc)) / len(y))
    cv_mse = None
    converged = True
    if hp.lambda_ is not None:
        lambdas = np.array([hp.lambda_])
        chosen = 0
    elif lmax == 0.0:
        lambdas = np.array([0.0])
        chosen = 0
    else:
        lambdas = _path(lmax, hp)
        chosen, cv_mse, converged = _cv_select(X, y, lambdas, hp, seed)

    if hp.lambda_ is not None:
        beta, sweeps, ok = coordinate_descent(Xs, yc, hp.lambda_, None, hp.tol, hp.max_iter)
    else:
        betas, ok, sweeps = _fit_path(Xs, yc, lambdas[:chosen + 1], hp)
        beta = betas[-1]
    converged &= ok

    coef = np.where(keep, beta / sd, 0.0)
    intercept = float(y.mean() - coef @ mu)
    nz = np.flatnonzero(coef)
    return TrainedModel(
        algorithm="lasso",
        features=tuple(problem.columns[j] for j in nz),
        params={"intercept": intercept, "coefficients": coef[nz].tolist()},
        metadata={
            "input_columns": list(problem.columns),
            "hyperparameters": {"n_lambdas": hp.n_lambdas, "lambda_ratio": hp.lambda_ratio, "tol": hp.tol,
                                "max_iter": hp.max_iter, "cv_folds": hp.cv_folds, "lambda_": hp.lambda_},
            "lambda": float(lambdas[chosen]),
            "lambda_max": lmax,
            "cv_mse": None if cv_mse is None else cv_mse.tolist(),
            "standardized_coefficients": beta.tolist(),
            "iterations": int(sweeps),
            "converged": bool(converged),
            "seed": seed,
        },
    )
