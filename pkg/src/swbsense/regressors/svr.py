"""Epsilon-SVR solved in the dual by SMO.

The dual is written over 2n variables ``a = [alpha; alpha*]`` with signs
``s = [+1; -1]``::

    min  0.5 a'Qa + p'a    s.t.  s'a = 0,  0 <= a <= C
    Q_ij = s_i s_j K(i mod n, j mod n),   p = [eps - y; eps + y]

Working pairs are chosen by maximal violation for the first index and
second-order gain for the second. The regression function is
``f(x) = sum_i (alpha_i - alpha*_i) K(x_i, x) + b``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .base import RegressionProblem, SvrParams, TrainedModel

TAU = 1e-12


def kernel_matrix(A, B, kernel: str, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


@njit(cache=True)
def _smo(K, y, C, eps, tol, max_iter):
    n = K.shape[0]
    m = 2 * n
    a = np.zeros(m)
    s = np.ones(m)
    s[n:] = -1.0
    G = np.empty(m)
    for t in range(n):
        G[t] = eps - y[t]
        G[t + n] = eps + y[t]
    it = 0
    converged = False
    while it < max_iter:
        # first index: maximal violation over I_up
        gmax = -np.inf
        i = -1
        for t in range(m):
            if (s[t] > 0 and a[t] < C) or (s[t] < 0 and a[t] > 0):
                v = -s[t] * G[t]
                if v >= gmax:
                    gmax = v
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        if i >= 0:
            ki = i % n
            for t in range(m):
                if (s[t] > 0 and a[t] > 0) or (s[t] < 0 and a[t] < C):
                    v = -s[t] * G[t]
                    if v < gmin:
                        gmin = v
                    b = gmax - v
                    if b > 0:
                        kt = t % n
                        quad = K[ki, ki] + K[kt, kt] - 2.0 * K[ki, kt]
                        if quad <= 0:
                            quad = TAU
                        obj = -(b * b) / quad
                        if obj <= best:
                            best = obj
                            j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            converged = True
            break
        it += 1
        ki = i % n
        kj = j % n
        Qii = K[ki, ki]
        Qjj = K[kj, kj]
        Qij = s[i] * s[j] * K[ki, kj]
        old_ai = a[i]
        old_aj = a[j]
        if s[i] != s[j]:
            quad = Qii + Qjj + 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            quad = Qii + Qjj - 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = total
        dai = a[i] - old_ai
        daj = a[j] - old_aj
        for t in range(m):
            kt = t % n
            G[t] += s[t] * (s[i] * K[kt, ki] * dai + s[j] * K[kt, kj] * daj)

    # bias from free variables, or the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(m):
        yg = s[t] * G[t]
        if a[t] >= C:
            if s[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif a[t] <= 0:
            if s[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = (ub + lb) / 2.0
    obj = 0.0
    for t in range(m):
        p = eps - y[t] if t < n else eps + y[t - n]
        obj += a[t] * (G[t] + p)
    return a, -rho, 0.5 * obj, it, converged


def solve_dual(K, y, C=1.0, epsilon=0.1, tol=1e-3, max_iter=1_000_000):
    """SMO on a precomputed kernel; returns ``(beta, bias, dual objective, iterations, converged)``."""
    K = np.ascontiguousarray(K, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    a, b, obj, it, ok = _smo(K, y, float(C), float(epsilon), float(tol), int(max_iter))
    n = len(y)
    return a[:n] - a[n:], float(b), float(obj), int(it), bool(ok)


def dual_objective(K, y, beta, epsilon) -> float:
    """Objective of the dual at ``beta = alpha - alpha*`` (minimization form)."""
    beta = np.asarray(beta, dtype=float)
    return float(0.5 * beta @ K @ beta - y @ beta + epsilon * np.abs(beta).sum())


def fit_svr(problem: RegressionProblem, hp: SvrParams = SvrParams(), seed: int = 0) -> TrainedModel:
    X, y = problem.X, problem.y
    gamma = hp.gamma if hp.gamma is not None else 1.0 / problem.p
    K = kernel_matrix(X, X, hp.kernel, gamma)
    beta, bias, obj, iters, ok = solve_dual(K, y, hp.C, hp.epsilon, hp.tol, hp.max_iter)
    sv = np.flatnonzero(beta != 0.0)
    return TrainedModel(
        algorithm="svr",
        features=tuple(problem.columns),
        params={
            "kernel": hp.kernel,
            "gamma": float(gamma),
            "bias": bias,
            "support_vectors": X[sv].tolist(),
            "dual_coef": beta[sv].tolist(),
        },
        metadata={
            "input_columns": list(problem.columns),
            "hyperparameters": {"C": hp.C, "epsilon": hp.epsilon, "kernel": hp.kernel, "gamma": hp.gamma,
                                "tol": hp.tol, "max_iter": hp.max_iter},
            "support_indices": sv.tolist(),
            "dual_objective": obj,
            "iterations": iters,
            "converged": ok,
        },
    )
